#include "opsaddle/linear_model.hpp"

#include <algorithm>
#include <cmath>

#include "opsaddle/errors.hpp"

namespace opsaddle {

namespace {

double smallest_singular_value(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

// Largest singular value via the Gram matrix on the smaller side.
double operator_norm(const Mat& m) {
  const bool tall = m.rows() >= m.cols();
  const Mat gram = tall ? Mat(m.transpose() * m) : Mat(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace

void FeatureMaps::validate() const {
  if (phi_w.rows() != phi_q.rows()) throw InvalidInput("features: row count mismatch");
  if (phi_w.cols() < 1 || phi_q.cols() < 1) throw InvalidInput("features: empty");
  for (int i = 0; i < phi_w.rows(); ++i) {
    if (phi_w.row(i).norm() > 1.0 + 1e-12)
      throw InvalidInput("features: phi_w row norm exceeds 1");
    if (phi_q.row(i).norm() > 1.0 + 1e-12)
      throw InvalidInput("features: phi_q row norm exceeds 1");
  }
}

FeatureMaps onehot_features(int n_states, int n_actions) {
  const int n_sa = n_states * n_actions;
  FeatureMaps f{Mat::Identity(n_sa, n_sa), Mat::Identity(n_sa, n_sa)};
  f.validate();
  return f;
}

FeatureMaps random_features(int n_states, int n_actions, int dim_z, int dim_xi,
                            std::uint64_t seed) {
  const int n_sa = n_states * n_actions;
  if (dim_z < 1 || dim_xi < 1) throw InvalidInput("random_features: dims must be >= 1");
  Rng g(seed);
  auto fill = [&](int dim) {
    Mat m(n_sa, dim);
    for (int i = 0; i < n_sa; ++i) {
      Vec row(dim);
      for (int j = 0; j < dim; ++j) row[j] = sample_normal(g);
      const double scale = 0.5 + 0.5 * uniform01(g);
      m.row(i) = (row * (scale / row.norm())).transpose();
    }
    return m;
  };
  FeatureMaps f{fill(dim_z), fill(dim_xi)};
  f.validate();
  return f;
}

Vec DataModel::reward_sa() const {
  Vec r(n_sa());
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) r[s * n_actions + a] = reward_mean(s, a);
  return r;
}

DataModel exact_model(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                      RewardMode mode) {
  mdp.validate();
  behavior.validate();
  DataModel m;
  m.n_states = mdp.n_states;
  m.n_actions = mdp.n_actions;
  m.d = behavior.mu;
  m.nu = mdp.nu0;
  m.trans = mdp.transition;
  m.reward_mean = mdp.reward_mean;
  m.joint_ss = behavior.mu.asDiagonal() * mdp.transition;
  m.reward_outcomes.resize(m.n_sa());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      auto& outcomes = m.reward_outcomes[mdp.sa(s, a)];
      const double mean = mdp.reward_mean(s, a);
      if (mode == RewardMode::deterministic) {
        outcomes.push_back({mean, 1.0});
      } else {
        if (mean < 1.0) outcomes.push_back({0.0, 1.0 - mean});
        if (mean > 0.0) outcomes.push_back({1.0, mean});
      }
    }
  m.exact = true;
  return m;
}

DataModel data_model_from(const EmpiricalModel& empirical, int n_states, int n_actions) {
  DataModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.d = empirical.d;
  m.nu = empirical.nu;
  m.trans = empirical.trans;
  m.reward_mean = empirical.reward;
  m.joint_ss = empirical.joint_ss;
  m.reward_outcomes.resize(m.n_sa());
  for (int sa = 0; sa < m.n_sa(); ++sa)
    for (const auto& [value, prob] : empirical.reward_dist[sa])
      m.reward_outcomes[sa].push_back({value, prob});
  m.exact = false;
  return m;
}

DerivedMatrices build_derived(const FeatureMaps& features, const DataModel& model,
                              const SoftmaxPolicy& policy, double gamma) {
  const Mat probs = policy.action_probs();
  const int S = model.n_states;
  const int A = model.n_actions;
  // pi-averaged Q features per state, then pulled back through the transition.
  Mat avg_q(S, features.dim_xi());
  for (int s = 0; s < S; ++s) {
    Vec row = Vec::Zero(features.dim_xi());
    for (int a = 0; a < A; ++a) row += probs(s, a) * features.phi_q.row(s * A + a).transpose();
    avg_q.row(s) = row.transpose();
  }
  const Mat next_q = model.trans * avg_q;  // (S*A) x dim_xi
  const Mat weighted_w = model.d.asDiagonal() * features.phi_w;

  DerivedMatrices out;
  out.K_w = features.phi_w.transpose() * weighted_w;
  out.K_Q = features.phi_q.transpose() * (model.d.asDiagonal() * features.phi_q);
  out.M_pi = weighted_w.transpose() * (features.phi_q - gamma * next_q);
  out.u_R = weighted_w.transpose() * model.reward_sa();
  out.u_nu = features.phi_q.transpose() * lift_to_state_action(policy, model.nu);
  out.exact = model.exact;
  return out;
}

SingularFloors singular_floors(const FeatureMaps& features, const DataModel& model,
                               double gamma, std::span<const SoftmaxPolicy> probes) {
  if (probes.empty()) throw InvalidInput("singular_floors: need at least one probe policy");
  const DerivedMatrices base = build_derived(features, model, probes.front(), gamma);
  SingularFloors f;
  f.v_w = smallest_singular_value(base.K_w);
  f.v_Q = smallest_singular_value(base.K_Q);
  f.v_M = smallest_singular_value(base.M_pi);
  int worst = 0;
  for (int i = 1; i < static_cast<int>(probes.size()); ++i) {
    const DerivedMatrices d = build_derived(features, model, probes[i], gamma);
    const double v = smallest_singular_value(d.M_pi);
    if (v < f.v_M) {
      f.v_M = v;
      worst = i;
    }
  }
  f.worst_policy_note = "v_M attained at probe policy " + std::to_string(worst);
  if (f.v_w <= 1e-12) throw AssumptionViolation('B', "singular K_w (v_w <= 1e-12)");
  if (f.v_Q <= 1e-12) throw AssumptionViolation('B', "singular K_Q (v_Q <= 1e-12)");
  if (f.v_M <= 1e-12) throw AssumptionViolation('B', "singular M_pi (v_M <= 1e-12)");
  return f;
}

Radii saddle_radii(double lambda_w, double lambda_Q, double v_w, double v_Q,
                   double v_M, double gamma) {
  if (!(lambda_w > 0 && lambda_Q > 0 && v_w > 0 && v_Q > 0 && v_M > 0))
    throw InvalidInput("saddle_radii: all inputs must be positive");
  Radii r;
  r.R_zeta = ((1.0 - gamma * gamma) / v_Q + lambda_Q) / (lambda_w * lambda_Q * v_w + v_M * v_M);
  r.R_xi = ((1.0 - gamma) * lambda_w + (1.0 + gamma) / v_w) / (lambda_w * lambda_Q * v_Q + v_M * v_M);
  r.R_0 = (1.0 + (1.0 + gamma) * r.R_xi) / (lambda_w * v_w);
  r.R_prime = 8.0 * std::max(r.R_0, 1.0);
  return r;
}

double smoothness_constant(double G, double H, double L_pi, double C_W, double C_Q,
                           double gamma, double lambda_w, double lambda_Q) {
  const double theta_branch = C_W * C_Q * (G * L_pi + H) + gamma * (C_Q + C_W) * L_pi;
  const double zeta_branch = G * C_Q + (1.0 + gamma) + lambda_w;
  const double xi_branch = G * C_W + (1.0 + gamma) + lambda_Q;
  return std::max({theta_branch, zeta_branch, xi_branch});
}

VarianceConstants variance_constants(const FeatureMaps& features, const DataModel& model,
                                     const SoftmaxPolicy& policy, double C_W, double C_Q,
                                     double G, double gamma, double lambda_w,
                                     double lambda_Q) {
  const DerivedMatrices der = build_derived(features, model, policy, gamma);
  const Mat probs = policy.action_probs();
  const int S = model.n_states;
  const int A = model.n_actions;

  VarianceConstants v{};

  // sigma_K: covariance deviation of both feature families, in operator norm.
  double var_kw = 0.0, var_kq = 0.0;
  for (int sa = 0; sa < model.n_sa(); ++sa) {
    const double p = model.d[sa];
    if (p == 0.0) continue;
    const Vec fw = features.phi_w.row(sa).transpose();
    const Vec fq = features.phi_q.row(sa).transpose();
    var_kw += p * std::pow(operator_norm(der.K_w - fw * fw.transpose()), 2);
    var_kq += p * std::pow(operator_norm(der.K_Q - fq * fq.transpose()), 2);
  }
  v.sigma_K = std::sqrt(std::max(var_kw, var_kq));

  // sigma_R over the reward outcome distribution.
  double var_r = 0.0;
  for (int sa = 0; sa < model.n_sa(); ++sa) {
    const double p = model.d[sa];
    if (p == 0.0) continue;
    const Vec fw = features.phi_w.row(sa).transpose();
    for (const auto& [value, prob] : model.reward_outcomes[sa])
      var_r += p * prob * (der.u_R - fw * value).squaredNorm();
  }
  v.sigma_R = std::sqrt(var_r);

  // sigma_nu over s0 ~ nu, a0 ~ pi.
  double var_nu = 0.0;
  for (int s = 0; s < S; ++s) {
    if (model.nu[s] == 0.0) continue;
    for (int a = 0; a < A; ++a) {
      const double p = model.nu[s] * probs(s, a);
      if (p == 0.0) continue;
      var_nu += p * (der.u_nu - features.phi_q.row(s * A + a).transpose()).squaredNorm();
    }
  }
  v.sigma_nu = std::sqrt(var_nu);

  // sigma_M over (s,a,s') ~ joint, a' ~ pi, in operator norm.
  double var_m = 0.0;
  for (int sa = 0; sa < model.n_sa(); ++sa) {
    const Vec fw = features.phi_w.row(sa).transpose();
    for (int s2 = 0; s2 < S; ++s2) {
      const double p_ss = model.joint_ss(sa, s2);
      if (p_ss == 0.0) continue;
      for (int a2 = 0; a2 < A; ++a2) {
        const double p = p_ss * probs(s2, a2);
        if (p == 0.0) continue;
        const Vec fq = features.phi_q.row(sa).transpose() -
                       gamma * features.phi_q.row(s2 * A + a2).transpose();
        var_m += p * std::pow(operator_norm(der.M_pi - fw * fq.transpose()), 2);
      }
    }
  }
  v.sigma_M = std::sqrt(var_m);

  const double one_minus_g = 1.0 - gamma;
  v.sigma_theta = std::sqrt(2.0 * one_minus_g * one_minus_g * var_nu * G * G * C_Q * C_Q +
                            2.0 * gamma * gamma * var_m * G * G * C_W * C_W * C_Q * C_Q);
  v.sigma_zeta = std::sqrt(3.0 * var_r + 3.0 * var_m * C_Q * C_Q +
                           3.0 * lambda_w * lambda_w * var_kw * C_W * C_W);
  v.sigma_xi = std::sqrt(3.0 * one_minus_g * one_minus_g * var_nu + 3.0 * var_m * C_W * C_W +
                         3.0 * lambda_Q * lambda_Q * var_kq * C_Q * C_Q);
  v.sigma = std::max({v.sigma_theta, v.sigma_zeta, v.sigma_xi});
  return v;
}

std::pair<double, double> stochastic_smoothness(double lambda_w, double lambda_Q,
                                                double v_w, double v_Q, double gamma) {
  if (!(lambda_w > 0 && lambda_Q > 0 && v_w > 0 && v_Q > 0))
    throw InvalidInput("stochastic_smoothness: inputs must be positive");
  const double top = 2.0 * std::max(lambda_w * lambda_w, lambda_Q * lambda_Q) +
                     2.0 * (1.0 + gamma) * (1.0 + gamma);
  const double value = std::max(top / std::min(lambda_w * v_w, lambda_Q * v_Q), std::sqrt(top));
  return {value, value};
}

OspimComposites ospim_constants(double kappa_zeta, double kappa_xi, double L) {
  if (!(kappa_zeta >= 1.0 && kappa_xi >= 1.0))
    throw InvalidInput("ospim_constants: condition numbers must be >= 1");
  OspimComposites c;
  c.C_zeta_xi = kappa_zeta * kappa_zeta * (kappa_xi + 1.0) * (kappa_xi + 1.0) +
                kappa_xi * kappa_xi * (kappa_zeta + 1.0) * (kappa_zeta + 1.0);
  c.L_zeta_xi = L * (1.0 + kappa_zeta * (kappa_xi + 1.0) + kappa_zeta * (kappa_zeta + 1.0));
  return c;
}

ProblemConstants build_constants(const FeatureMaps& features, const DataModel& model,
                                 double lambda_w, double lambda_Q, double gamma,
                                 BallRegime regime,
                                 std::span<const SoftmaxPolicy> anchor_policies,
                                 int probe_policies, std::uint64_t probe_seed) {
  features.validate();
  if (!(lambda_w > 0 && lambda_Q > 0))
    throw InvalidInput("build_constants: regularization weights must be positive");

  std::vector<SoftmaxPolicy> probes(anchor_policies.begin(), anchor_policies.end());
  Rng g(probe_seed);
  for (int i = 0; i < probe_policies; ++i)
    probes.push_back(SoftmaxPolicy::random(model.n_states, model.n_actions, 2.0, g));
  if (probes.empty()) probes.push_back(SoftmaxPolicy::uniform(model.n_states, model.n_actions));

  ProblemConstants c;
  const PolicyConstants pc = policy_constants();
  c.G = pc.G;
  c.H = pc.H;
  c.L_pi = pc.L_pi;
  c.gamma = gamma;
  c.lambda_w = lambda_w;
  c.lambda_Q = lambda_Q;

  const SingularFloors floors = singular_floors(features, model, gamma, probes);
  c.v_w = floors.v_w;
  c.v_Q = floors.v_Q;
  c.v_M = floors.v_M;

  const Radii r = saddle_radii(lambda_w, lambda_Q, c.v_w, c.v_Q, c.v_M, gamma);
  c.R_zeta = r.R_zeta;
  c.R_xi = r.R_xi;
  c.R_0 = r.R_0;
  c.R_prime = r.R_prime;
  c.C_W = std::max(1.0, c.zeta_radius(regime));
  c.C_Q = r.R_xi;

  c.mu_zeta = lambda_w * c.v_w;
  c.mu_xi = lambda_Q * c.v_Q;
  c.L = smoothness_constant(c.G, c.H, c.L_pi, c.C_W, c.C_Q, gamma, lambda_w, lambda_Q);
  c.kappa_zeta = c.L / c.mu_zeta;
  c.kappa_xi = c.L / c.mu_xi;

  // Variance constants certified over the same probe set (max aggregation,
  // mirroring the v_M probe certificate). A handful of probes suffices; the
  // policy enters only through a' ~ pi and a0 ~ pi.
  const int sigma_probes = std::min<int>(static_cast<int>(probes.size()),
                                         static_cast<int>(anchor_policies.size()) + 8);
  VarianceConstants worst{};
  for (int i = 0; i < sigma_probes; ++i) {
    const VarianceConstants v = variance_constants(features, model, probes[i], c.C_W, c.C_Q,
                                                   c.G, gamma, lambda_w, lambda_Q);
    worst.sigma_K = std::max(worst.sigma_K, v.sigma_K);
    worst.sigma_M = std::max(worst.sigma_M, v.sigma_M);
    worst.sigma_R = std::max(worst.sigma_R, v.sigma_R);
    worst.sigma_nu = std::max(worst.sigma_nu, v.sigma_nu);
    worst.sigma_theta = std::max(worst.sigma_theta, v.sigma_theta);
    worst.sigma_zeta = std::max(worst.sigma_zeta, v.sigma_zeta);
    worst.sigma_xi = std::max(worst.sigma_xi, v.sigma_xi);
  }
  worst.sigma = std::max({worst.sigma_theta, worst.sigma_zeta, worst.sigma_xi});
  c.sigma_K = worst.sigma_K;
  c.sigma_M = worst.sigma_M;
  c.sigma_R = worst.sigma_R;
  c.sigma_nu = worst.sigma_nu;
  c.sigma_theta = worst.sigma_theta;
  c.sigma_zeta = worst.sigma_zeta;
  c.sigma_xi = worst.sigma_xi;
  c.sigma = worst.sigma;

  const auto [lbz, lbx] = stochastic_smoothness(lambda_w, lambda_Q, c.v_w, c.v_Q, gamma);
  c.L_bar_zeta = lbz;
  c.L_bar_xi = lbx;
  const OspimComposites oc = ospim_constants(c.kappa_zeta, c.kappa_xi, c.L);
  c.C_zeta_xi = oc.C_zeta_xi;
  c.L_zeta_xi = oc.L_zeta_xi;
  return c;
}

}  // namespace opsaddle
