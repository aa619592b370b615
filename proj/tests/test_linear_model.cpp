#include <doctest.h>

#include <cmath>

#include "opsaddle/errors.hpp"
#include "opsaddle/lagrangian.hpp"
#include "opsaddle/linear_model.hpp"
#include "test_util.hpp"

using namespace opsaddle;
namespace tu = opsaddle::testutil;

namespace {

DataModel tiny_model() {
  DataModel m;
  m.n_states = 1;
  m.n_actions = 1;
  m.d = Vec::Ones(1);
  m.nu = Vec::Ones(1);
  m.trans = Mat::Ones(1, 1);
  m.reward_mean = Mat::Constant(1, 1, 0.37);
  m.reward_outcomes = {{{0.37, 1.0}}};
  m.joint_ss = Mat::Ones(1, 1);
  m.exact = true;
  return m;
}

}  // namespace

TEST_CASE("build_derived: one-state instance collapses to scalars") {
  const DataModel m = tiny_model();
  const FeatureMaps f = onehot_features(1, 1);
  const SoftmaxPolicy pi = SoftmaxPolicy::uniform(1, 1);
  const DerivedMatrices d = build_derived(f, m, pi, 0.0);
  CHECK(d.K_w(0, 0) == doctest::Approx(1.0));
  CHECK(d.K_Q(0, 0) == doctest::Approx(1.0));
  CHECK(d.M_pi(0, 0) == doctest::Approx(1.0));
  CHECK(d.u_R[0] == doctest::Approx(0.37));
  CHECK(d.u_nu[0] == doctest::Approx(1.0));
}

TEST_CASE("build_derived: gamma 0 removes the transition term") {
  Rng g(7);
  const TabularMdp mdp = random_mdp(3, 2, 0.0, g);
  const BehaviorDistribution mu = uniform_behavior(3, 2);
  const DataModel model = exact_model(mdp, mu);
  const FeatureMaps f = random_features(3, 2, 3, 4, 2);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(3, 2, 1.0, g);
  const DerivedMatrices d = build_derived(f, model, pi, 0.0);
  const Mat expected = f.phi_w.transpose() * model.d.asDiagonal() * f.phi_q;
  CHECK((d.M_pi - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("build_derived: matrix form matches the elementwise summation oracle") {
  Rng g(13);
  const TabularMdp mdp = random_mdp(4, 2, 0.7, g);
  const BehaviorDistribution mu = uniform_behavior(4, 2);
  const DataModel model = exact_model(mdp, mu);
  const FeatureMaps f = random_features(4, 2, 3, 3, 4);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(4, 2, 1.5, g);
  const DerivedMatrices d = build_derived(f, model, pi, mdp.gamma);

  const Mat probs = pi.action_probs();
  Mat m_ref = Mat::Zero(3, 3);
  Mat kw_ref = Mat::Zero(3, 3);
  Vec ur_ref = Vec::Zero(3);
  Vec unu_ref = Vec::Zero(3);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      const int sa = mdp.sa(s, a);
      const Vec fw = f.phi_w.row(sa).transpose();
      Vec next = Vec::Zero(3);
      for (int s2 = 0; s2 < 4; ++s2)
        for (int a2 = 0; a2 < 2; ++a2)
          next += mdp.transition(sa, s2) * probs(s2, a2) *
                  f.phi_q.row(mdp.sa(s2, a2)).transpose();
      m_ref += model.d[sa] * fw *
               (f.phi_q.row(sa).transpose() - mdp.gamma * next).transpose();
      kw_ref += model.d[sa] * fw * fw.transpose();
      ur_ref += model.d[sa] * mdp.reward_mean(s, a) * fw;
      unu_ref += mdp.nu0[s] * probs(s, a) * f.phi_q.row(sa).transpose();
    }
  CHECK((d.M_pi - m_ref).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((d.K_w - kw_ref).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((d.u_R - ur_ref).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((d.u_nu - unu_ref).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("singular_floors: diagonal covariance exposes the smallest weight") {
  DataModel m;
  m.n_states = 2;
  m.n_actions = 2;
  m.d = Vec(4);
  m.d << 0.5, 0.1, 0.2, 0.2;
  m.nu = Vec::Constant(2, 0.5);
  m.trans = Mat::Constant(4, 2, 0.5);
  m.reward_mean = Mat::Constant(2, 2, 0.5);
  m.reward_outcomes.assign(4, {{0.5, 1.0}});
  m.joint_ss = m.d.asDiagonal() * m.trans;
  const FeatureMaps f = onehot_features(2, 2);
  const SoftmaxPolicy pi = SoftmaxPolicy::uniform(2, 2);
  const SingularFloors floors =
      singular_floors(f, m, 0.0, std::span<const SoftmaxPolicy>(&pi, 1));
  CHECK(floors.v_w == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(floors.v_Q == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(floors.v_M == doctest::Approx(0.1).epsilon(1e-10));  // gamma=0, one-hot: M = diag(d)
}

TEST_CASE("singular_floors: cross-checked against inverse power iteration") {
  Rng g(21);
  const TabularMdp mdp = random_mdp(3, 2, 0.6, g);
  const BehaviorDistribution mu = uniform_behavior(3, 2);
  const DataModel model = exact_model(mdp, mu);
  const FeatureMaps f = random_features(3, 2, 3, 3, 9);
  std::vector<SoftmaxPolicy> probes;
  for (int i = 0; i < 5; ++i) probes.push_back(SoftmaxPolicy::random(3, 2, 1.0, g));
  const SingularFloors floors = singular_floors(f, model, mdp.gamma, probes);
  const DerivedMatrices d0 = build_derived(f, model, probes[0], mdp.gamma);
  CHECK(floors.v_w == doctest::Approx(tu::smin_power(d0.K_w)).epsilon(1e-10));
  CHECK(floors.v_Q == doctest::Approx(tu::smin_power(d0.K_Q)).epsilon(1e-10));
  double vm = 1e300;
  for (const auto& pi : probes)
    vm = std::min(vm, tu::smin_power(build_derived(f, model, pi, mdp.gamma).M_pi));
  CHECK(floors.v_M == doctest::Approx(vm).epsilon(1e-8));
}

TEST_CASE("singular_floors: a dead feature direction raises assumption B") {
  const DataModel m = tiny_model();
  FeatureMaps f = onehot_features(1, 1);
  f.phi_w = Mat::Zero(1, 1);
  const SoftmaxPolicy pi = SoftmaxPolicy::uniform(1, 1);
  CHECK_THROWS_AS(singular_floors(f, m, 0.0, std::span<const SoftmaxPolicy>(&pi, 1)),
                  AssumptionViolation);
}

TEST_CASE("saddle_radii: direct substitution") {
  const Radii r = saddle_radii(1, 1, 1, 1, 1, 0);
  CHECK(r.R_zeta == doctest::Approx(1.0));
  CHECK(r.R_xi == doctest::Approx(1.0));
  CHECK(r.R_0 == doctest::Approx(2.0));
  CHECK(r.R_prime == doctest::Approx(16.0));
}

TEST_CASE("saddle_radii: gamma to 1 limit kills the (1-gamma^2) term") {
  const Radii r = saddle_radii(1, 1, 1, 1, 1, 1.0 - 1e-9);
  CHECK(r.R_zeta == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("saddle_radii: rejects non-positive inputs") {
  CHECK_THROWS_AS(saddle_radii(0, 1, 1, 1, 1, 0.5), InvalidInput);
  CHECK_THROWS_AS(saddle_radii(1, 1, 1, 1, 0, 0.5), InvalidInput);
}

TEST_CASE("saddle_radii: closed-form saddles of 50 random policies stay inside the balls") {
  const Problem p = tu::balanced_problem(3, 2, 0.6, 0.5, 40, 31);
  Rng g(37);
  for (int i = 0; i < 50; ++i) {
    const SoftmaxPolicy pi = SoftmaxPolicy::random(3, 2, 2.0, g);
    const ClosedFormSaddle s = p.saddle(pi);
    CHECK(s.zeta.norm() <= p.constants.R_zeta + 1e-9);
    CHECK(s.xi.norm() <= p.constants.R_xi + 1e-9);
  }
}

TEST_CASE("smoothness_constant: direct substitution and monotonicity") {
  CHECK(smoothness_constant(1, 1, 1, 1, 1, 0, 1, 1) == doctest::Approx(3.0));
  const double base = smoothness_constant(1, 1, 1, 1, 2, 0, 1, 1);
  const double bigger = smoothness_constant(1, 1, 1, 1, 4, 0, 1, 1);
  CHECK(bigger > base);
  // the dominating branch grows linearly in C_Q with slope C_W (G L_pi + H) = 2
  CHECK(bigger - base == doctest::Approx(2.0 * 2.0).epsilon(1e-12));
}

TEST_CASE("smoothness_constant: empirical gradient-Lipschitz ratio never exceeds L") {
  const Problem p = tu::balanced_problem(3, 2, 0.5, 0.5, 40, 43);
  const ProblemConstants& c = p.constants;
  Rng g(47);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const SoftmaxPolicy pi1 = SoftmaxPolicy::random(3, 2, 1.5, g);
    SoftmaxPolicy pi2 = pi1;
    for (int k = 0; k < pi2.theta.size(); ++k) pi2.theta[k] += 0.2 * (2 * uniform01(g) - 1);
    const Vec z1 = sample_in_ball(p.dim_z(), c.C_W, g);
    const Vec x1 = sample_in_ball(p.dim_xi(), c.C_Q, g);
    const Vec z2 = project_ball(z1 + sample_in_ball(p.dim_z(), 0.2, g), c.C_W);
    const Vec x2 = project_ball(x1 + sample_in_ball(p.dim_xi(), 0.2, g), c.C_Q);
    const GradientTriple g1 = p.grad_exact(pi1, z1, x1);
    const GradientTriple g2 = p.grad_exact(pi2, z2, x2);
    const double num = (g1.g_theta - g2.g_theta).norm() + (g1.g_zeta - g2.g_zeta).norm() +
                       (g1.g_xi - g2.g_xi).norm();
    const double den = (pi1.theta - pi2.theta).norm() + (z1 - z2).norm() + (x1 - x2).norm();
    if (den > 1e-12) worst = std::max(worst, num / den);
  }
  CHECK(worst <= c.L);
}

TEST_CASE("variance_constants: point-mass support kills sigma_K, sigma_M, sigma_R") {
  // one tuple, gamma = 0 so the next-action draw does not enter M
  OfflineDataset d;
  d.n_states = 2;
  d.n_actions = 2;
  d.tuples.push_back({0, 1, 0.6, 1});
  const DataModel model = data_model_from(empirical_model(d), 2, 2);
  const FeatureMaps f = random_features(2, 2, 2, 2, 11);
  Rng g(3);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(2, 2, 1.0, g);
  const VarianceConstants v =
      variance_constants(f, model, pi, 2.0, 2.0, std::sqrt(2.0), 0.0, 0.5, 0.5);
  CHECK(v.sigma_K == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sigma_M == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sigma_R == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("variance_constants: all-zero inputs propagate to the gradient sigmas") {
  // a single action also makes a0 and a' deterministic, so sigma_nu vanishes
  OfflineDataset d;
  d.n_states = 2;
  d.n_actions = 1;
  d.tuples.push_back({0, 0, 0.6, 1});
  const DataModel model = data_model_from(empirical_model(d), 2, 1);
  const FeatureMaps f = onehot_features(2, 1);
  const SoftmaxPolicy pi = SoftmaxPolicy::uniform(2, 1);
  const VarianceConstants v =
      variance_constants(f, model, pi, 2.0, 2.0, std::sqrt(2.0), 0.0, 0.5, 0.5);
  CHECK(v.sigma_nu == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sigma_theta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sigma_zeta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sigma_xi == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sigma == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("variance_constants: matches a direct enumeration oracle") {
  const Problem p = tu::balanced_problem(3, 2, 0.55, 0.4, 6, 53, BallRegime::saddle,
                                         /*onehot=*/false, /*dim=*/3);
  Rng g(59);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(3, 2, 1.0, g);
  const double C_W = p.constants.C_W, C_Q = p.constants.C_Q, G = p.constants.G;
  const VarianceConstants v = variance_constants(p.features, p.model, pi, C_W, C_Q, G,
                                                 p.gamma(), p.lambda_w, p.lambda_Q);

  const DerivedMatrices der = build_derived(p.features, p.model, pi, p.gamma());
  const Mat probs = pi.action_probs();
  double var_kw = 0, var_kq = 0, var_r = 0, var_nu = 0, var_m = 0;
  for (int sa = 0; sa < 6; ++sa) {
    const double w = p.model.d[sa];
    if (w == 0) continue;
    const Vec fw = p.features.phi_w.row(sa).transpose();
    const Vec fq = p.features.phi_q.row(sa).transpose();
    var_kw += w * std::pow(tu::op_norm_power(der.K_w - fw * fw.transpose()), 2);
    var_kq += w * std::pow(tu::op_norm_power(der.K_Q - fq * fq.transpose()), 2);
    for (const auto& [value, prob] : p.model.reward_outcomes[sa])
      var_r += w * prob * (der.u_R - fw * value).squaredNorm();
    for (int s2 = 0; s2 < 3; ++s2) {
      const double pj = p.model.joint_ss(sa, s2);
      if (pj == 0) continue;
      for (int a2 = 0; a2 < 2; ++a2) {
        const Vec col = p.features.phi_q.row(sa).transpose() -
                        p.gamma() * p.features.phi_q.row(s2 * 2 + a2).transpose();
        var_m += pj * probs(s2, a2) *
                 std::pow(tu::op_norm_power(der.M_pi - fw * col.transpose()), 2);
      }
    }
  }
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a)
      var_nu += p.model.nu[s] * probs(s, a) *
                (der.u_nu - p.features.phi_q.row(s * 2 + a).transpose()).squaredNorm();

  CHECK(v.sigma_K == doctest::Approx(std::sqrt(std::max(var_kw, var_kq))).epsilon(1e-8));
  CHECK(v.sigma_R == doctest::Approx(std::sqrt(var_r)).epsilon(1e-8));
  CHECK(v.sigma_nu == doctest::Approx(std::sqrt(var_nu)).epsilon(1e-8));
  CHECK(v.sigma_M == doctest::Approx(std::sqrt(var_m)).epsilon(1e-8));

  const double og = 1.0 - p.gamma();
  CHECK(v.sigma_theta ==
        doctest::Approx(std::sqrt(2 * og * og * var_nu * G * G * C_Q * C_Q +
                                  2 * p.gamma() * p.gamma() * var_m * G * G * C_W * C_W *
                                      C_Q * C_Q))
            .epsilon(1e-6));
  CHECK(v.sigma_zeta ==
        doctest::Approx(std::sqrt(3 * var_r + 3 * var_m * C_Q * C_Q +
                                  3 * p.lambda_w * p.lambda_w * var_kw * C_W * C_W))
            .epsilon(1e-6));
  CHECK(v.sigma_xi ==
        doctest::Approx(std::sqrt(3 * og * og * var_nu + 3 * var_m * C_W * C_W +
                                  3 * p.lambda_Q * p.lambda_Q * var_kq * C_Q * C_Q))
            .epsilon(1e-6));
  CHECK(v.sigma == doctest::Approx(std::max({v.sigma_theta, v.sigma_zeta, v.sigma_xi})));
}

TEST_CASE("stochastic_smoothness: direct substitutions") {
  CHECK(stochastic_smoothness(1, 1, 1, 1, 0).first == doctest::Approx(4.0));
  CHECK(stochastic_smoothness(1, 1, 1, 1, 1).first == doctest::Approx(10.0));
  const auto [lz, lx] = stochastic_smoothness(0.3, 0.7, 0.2, 0.4, 0.5);
  CHECK(lz == doctest::Approx(lx));
}

TEST_CASE("stochastic_smoothness: both inequalities hold with full-batch gradients") {
  const Problem p = tu::balanced_problem(3, 2, 0.5, 0.6, 30, 61);
  const double lbar = p.constants.L_bar_zeta;
  Rng g(67);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(3, 2, 1.0, g);
  const DerivedMatrices d = p.derived_for(pi);
  for (int i = 0; i < 1000; ++i) {
    const Vec z1 = sample_in_ball(p.dim_z(), p.constants.R_zeta, g);
    const Vec z2 = sample_in_ball(p.dim_z(), p.constants.R_zeta, g);
    const Vec x1 = sample_in_ball(p.dim_xi(), p.constants.R_xi, g);
    const Vec x2 = sample_in_ball(p.dim_xi(), p.constants.R_xi, g);
    const Vec dz = grad_zeta(d, z1, x1, p.lambda_w) - grad_zeta(d, z2, x2, p.lambda_w);
    const Vec dx = grad_xi(d, z1, x1, p.lambda_Q, p.gamma()) -
                   grad_xi(d, z2, x2, p.lambda_Q, p.gamma());
    const double lhs = dz.squaredNorm() + dx.squaredNorm();
    CHECK(lhs <= lbar * lbar * ((z1 - z2).squaredNorm() + (x1 - x2).squaredNorm()) + 1e-9);
    CHECK(lhs <= lbar * (dz.dot(z2 - z1) + dx.dot(x1 - x2)) + 1e-9);
  }
}

TEST_CASE("ospim_constants: direct substitution and quartic scaling") {
  const OspimComposites c = ospim_constants(1, 1, 1);
  CHECK(c.C_zeta_xi == doctest::Approx(8.0));
  CHECK(c.L_zeta_xi == doctest::Approx(5.0));
  const OspimComposites doubled = ospim_constants(2, 2, 1);
  CHECK(doubled.C_zeta_xi < 16.0 * c.C_zeta_xi);
}

TEST_CASE("ospim_constants: saddle-shift lemma on 100 random policy pairs") {
  const Problem p = tu::balanced_problem(3, 2, 0.5, 0.7, 30, 71);
  const double kz = p.constants.kappa_zeta;
  const double kx = p.constants.kappa_xi;
  Rng g(73);
  for (int i = 0; i < 100; ++i) {
    const SoftmaxPolicy p1 = SoftmaxPolicy::random(3, 2, 1.0, g);
    SoftmaxPolicy p2 = p1;
    for (int k = 0; k < p2.theta.size(); ++k) p2.theta[k] += 0.05 * (2 * uniform01(g) - 1);
    const ClosedFormSaddle s1 = p.saddle(p1);
    const ClosedFormSaddle s2 = p.saddle(p2);
    const double dtheta = (p1.theta - p2.theta).norm();
    CHECK((s1.zeta - s2.zeta).norm() <= kz * (kx + 1) * dtheta + 1e-12);
    CHECK((s1.xi - s2.xi).norm() <= kx * (kz + 1) * dtheta + 1e-12);
  }
}

TEST_CASE("hessian blocks equal the regularized covariances") {
  const Problem p = tu::balanced_problem(3, 2, 0.5, 0.45, 30, 79);
  Rng g(83);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(3, 2, 1.0, g);
  const DerivedMatrices d = p.derived_for(pi);
  const Vec z = sample_in_ball(p.dim_z(), 1.0, g);
  const Vec x = sample_in_ball(p.dim_xi(), 1.0, g);
  for (int k = 0; k < p.dim_xi(); ++k) {
    Vec e = Vec::Zero(p.dim_xi());
    e[k] = 1.0;
    const Vec col = grad_xi(d, z, x + e, p.lambda_Q, p.gamma()) -
                    grad_xi(d, z, x, p.lambda_Q, p.gamma());
    CHECK((col - p.lambda_Q * d.K_Q.col(k)).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (int k = 0; k < p.dim_z(); ++k) {
    Vec e = Vec::Zero(p.dim_z());
    e[k] = 1.0;
    const Vec col = grad_zeta(d, z + e, x, p.lambda_w) - grad_zeta(d, z, x, p.lambda_w);
    CHECK((col + p.lambda_w * d.K_w.col(k)).cwiseAbs().maxCoeff() < 1e-12);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(p.lambda_Q * d.K_Q, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= p.lambda_Q * p.constants.v_Q - 1e-10);
}

TEST_CASE("one-hot features: K_w equals diag of the data weights") {
  const Problem p = tu::balanced_problem(2, 2, 0.5, 0.5, 25, 89);
  CHECK((p.K_w - Mat(p.model.d.asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("M_pi is a (1+gamma)-bounded operator in both directions") {
  const Problem p = tu::balanced_problem(3, 2, 0.8, 0.5, 30, 97);
  Rng g(101);
  const SoftmaxPolicy pi = SoftmaxPolicy::random(3, 2, 1.2, g);
  const DerivedMatrices d = p.derived_for(pi);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = sample_on_sphere(p.dim_xi(), 1.0 + uniform01(g), g);
    const Vec y = sample_on_sphere(p.dim_z(), 1.0 + uniform01(g), g);
    CHECK((d.M_pi * x).norm() <= (1.0 + p.gamma()) * x.norm() + 1e-12);
    CHECK((d.M_pi.transpose() * y).norm() <= (1.0 + p.gamma()) * y.norm() + 1e-12);
  }
}

TEST_CASE("feature validation rejects row norms above 1") {
  FeatureMaps f = onehot_features(2, 2);
  f.phi_w(0, 0) = 1.0 + 1e-6;
  CHECK_THROWS_AS(f.validate(), InvalidInput);
}

TEST_CASE("random_features: deterministic per seed and norm-bounded") {
  const FeatureMaps a = random_features(3, 2, 4, 3, 17);
  const FeatureMaps b = random_features(3, 2, 4, 3, 17);
  CHECK((a.phi_w - b.phi_w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.phi_q - b.phi_q).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < a.phi_w.rows(); ++i) {
    CHECK(a.phi_w.row(i).norm() <= 1.0 + 1e-12);
    CHECK(a.phi_q.row(i).norm() <= 1.0 + 1e-12);
  }
}
