#include "opsaddle/bias.hpp"

#include <cmath>

#include "opsaddle/errors.hpp"

namespace opsaddle {

namespace {

Vec flatten(const Mat& table, int n_states, int n_actions) {
  Vec v(static_cast<Eigen::Index>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) v[s * n_actions + a] = table(s, a);
  return v;
}

// Minimum-norm weighted least squares: min_x || sqrt(Lambda) (Phi x - y) ||^2,
// returning the squared residual in the Lambda norm.
double wls_residual_sq(const Mat& phi, const Vec& y, const Vec& mu) {
  const Vec sqrt_mu = mu.cwiseSqrt();
  const Mat a = sqrt_mu.asDiagonal() * phi;
  const Vec b = sqrt_mu.cwiseProduct(y);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
  const Vec x = cod.solve(b);
  return (a * x - b).squaredNorm();
}

}  // namespace

double lambda_norm(const Vec& x, const Vec& mu) {
  return std::sqrt(mu.cwiseProduct(x.cwiseAbs2()).sum());
}

RegularizedFixedPoints regularized_fixed_points(const TabularMdp& mdp,
                                                const BehaviorDistribution& behavior,
                                                const SoftmaxPolicy& policy, double lambda_w,
                                                double lambda_Q) {
  behavior.validate();
  const int n = mdp.n_sa();
  const Mat p_pi = policy_transition(mdp, policy);
  const Mat eye = Mat::Identity(n, n);
  const Mat forward = eye - mdp.gamma * p_pi;              // I - gamma P^pi
  const Mat backward = eye - mdp.gamma * p_pi.transpose(); // I - gamma P^pi_*
  const Vec mu = behavior.mu;
  const Vec mu_inv = mu.cwiseInverse();

  RegularizedFixedPoints out;
  const Vec nu0_pi = lift_to_state_action(policy, mdp.nu0);
  const Vec d_pi = occupancy(mdp, policy, nu0_pi);
  out.w_pi = d_pi.cwiseQuotient(mu);
  out.q_pi = flatten(q_function(mdp, policy), mdp.n_states, mdp.n_actions);
  const Vec r = flatten(mdp.reward_mean, mdp.n_states, mdp.n_actions);

  const Mat a_w = lambda_w * lambda_Q * eye +
                  forward * mu_inv.asDiagonal() * backward * Mat(mu.asDiagonal());
  out.w_L = out.w_pi + Eigen::PartialPivLU<Mat>(a_w).solve(
                           Vec(lambda_Q * r - lambda_Q * lambda_w * out.w_pi));

  const Mat a_q = lambda_w * lambda_Q * eye +
                  mu_inv.asDiagonal() * backward * Mat(mu.asDiagonal()) * forward;
  out.q_L = out.q_pi -
            Eigen::PartialPivLU<Mat>(a_q).solve(
                Vec(lambda_w * lambda_Q * out.q_pi +
                    lambda_w * (1.0 - mdp.gamma) * mu_inv.cwiseProduct(nu0_pi)));

  // Intermediate line of the same derivation; kept as a cross-check target.
  const Mat a_q_alt =
      lambda_w * lambda_Q * Eigen::PartialPivLU<Mat>(backward).solve(Mat(mu.asDiagonal())) +
      Mat(mu.asDiagonal()) * forward;
  out.q_L_alt = Eigen::PartialPivLU<Mat>(a_q_alt).solve(
      Vec(mu.cwiseProduct(r) - lambda_w * mu.cwiseProduct(out.w_pi)));
  return out;
}

std::vector<RegBiasRow> reg_bias_vs_lambda(const TabularMdp& mdp,
                                           const BehaviorDistribution& behavior,
                                           const SoftmaxPolicy& policy,
                                           const std::vector<double>& lambdas) {
  const double c = concentrability(mdp, behavior, std::span<const SoftmaxPolicy>(&policy, 1));
  const double one_minus_g = 1.0 - mdp.gamma;
  std::vector<RegBiasRow> rows;
  for (const double lambda : lambdas) {
    if (lambda < 0.0) throw InvalidInput("reg_bias_vs_lambda: lambda must be >= 0");
    const RegularizedFixedPoints fp =
        regularized_fixed_points(mdp, behavior, policy, lambda, lambda);
    RegBiasRow row;
    row.lambda = lambda;
    row.w_dist = lambda_norm(fp.w_pi - fp.w_L, behavior.mu);
    row.q_dist = lambda_norm(fp.q_pi - fp.q_L, behavior.mu);
    row.w_bound = c * (lambda + lambda * lambda * c) / (one_minus_g * one_minus_g);
    row.q_bound = c / one_minus_g * (lambda * lambda / one_minus_g + lambda);
    rows.push_back(row);
  }
  return rows;
}

MisspecResult misspecification(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                               const FeatureMaps& features,
                               std::span<const SoftmaxPolicy> probe_policies,
                               std::span<const Vec> probe_zetas, double lambda_w,
                               double lambda_Q, double v_w) {
  if (probe_policies.empty()) throw InvalidInput("misspecification: no probe policies");
  if (!(lambda_w > 0.0 && lambda_Q > 0.0))
    throw InvalidInput("misspecification: lambdas must be positive");
  const Vec mu = behavior.mu;
  const Vec mu_inv = mu.cwiseInverse();
  const int n = mdp.n_sa();
  const Mat eye = Mat::Identity(n, n);

  MisspecResult res{0.0, 0.0, 0.0, 0.0};
  for (const auto& pi : probe_policies) {
    const RegularizedFixedPoints fp =
        regularized_fixed_points(mdp, behavior, pi, lambda_w, lambda_Q);
    res.eps1 = std::max(res.eps1, wls_residual_sq(features.phi_w, fp.w_L, mu));

    const Mat backward = eye - mdp.gamma * policy_transition(mdp, pi).transpose();
    const Vec nu0_pi = lift_to_state_action(pi, mdp.nu0);
    for (const auto& zeta : probe_zetas) {
      const Vec w = features.phi_w * zeta;
      // Unconstrained inner minimizer of the population Lagrangian over Q.
      const Vec q_w = mu_inv.cwiseProduct(backward * mu.cwiseProduct(w) -
                                          (1.0 - mdp.gamma) * nu0_pi) /
                      lambda_Q;
      res.eps2 = std::max(res.eps2, wls_residual_sq(features.phi_q, q_w, mu));
    }
  }

  const double lambda_max = std::max(lambda_w, lambda_Q);
  const double mu_zeta = lambda_w * v_w;
  res.eps_W = 4.0 * lambda_max * lambda_max / (lambda_Q * lambda_w) * res.eps1 +
              2.0 * lambda_max / mu_zeta * res.eps2;
  res.eps_Q = 8.0 * std::pow(lambda_max, 3) / (lambda_Q * lambda_Q * lambda_w) * res.eps1 +
              (2.0 + 4.0 * lambda_max * lambda_max / (lambda_Q * mu_zeta)) * res.eps2;
  return res;
}

BiasBounds bias_bounds(double G, double gamma, double C, double C_W, double C_Q,
                       double kappa_zeta, double kappa_xi, double lambda_w, double lambda_Q,
                       double eps_W, double eps_Q, double eps_data_bar) {
  if (eps_W < 0 || eps_Q < 0 || eps_data_bar < 0)
    throw InvalidInput("bias_bounds: inputs must be nonnegative");
  const double og = 1.0 - gamma;
  BiasBounds b;
  b.eps_func = G / og *
               (std::sqrt(C * eps_Q) + C_W * std::sqrt(gamma * eps_Q * C / og) +
                std::sqrt(gamma * eps_Q * eps_W * C / og) + gamma * C_Q * std::sqrt(eps_W));
  const double reg_w = lambda_w * lambda_Q / og + lambda_w;
  const double reg_q = lambda_Q + lambda_Q * lambda_w * C;
  b.eps_reg = G / og *
              (C * C / og * reg_w + gamma * C * reg_q / std::pow(og, 3) +
               C * C * reg_q / std::pow(og, 3) * reg_w * std::sqrt(gamma * C / og));
  b.eps_data = (2.0 * kappa_zeta * kappa_xi + 2.0 * kappa_zeta + 2.0 * kappa_xi +
                std::sqrt(2.0) / 2.0) *
               std::sqrt(2.0 * eps_data_bar);
  return b;
}

double measured_gap(const Problem& problem, const SoftmaxPolicy& policy) {
  // The bias decomposition compares against grad J = E_{d^pi}[Q grad log pi]
  // / (1-gamma); the surrogate's literal theta-gradient converges to
  // (1-gamma) grad J at the unregularized fixed points, so the comparison is
  // made in the same normalization.
  const Vec surrogate = problem.surrogate_policy_grad(policy) / (1.0 - problem.gamma());
  const Vec truth = policy_gradient(problem.mdp, policy);
  return (surrogate - truth).norm();
}

double data_deviation_probe(const Problem& empirical, const Problem& population,
                            int n_probes, std::uint64_t probe_seed) {
  if (n_probes < 1) throw InvalidInput("data_deviation_probe: need at least one probe");
  Rng g(probe_seed);
  double worst = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    const SoftmaxPolicy pi =
        SoftmaxPolicy::random(empirical.mdp.n_states, empirical.mdp.n_actions, 2.0, g);
    const Vec zeta = sample_in_ball(empirical.dim_z(), empirical.zeta_radius(), g);
    const Vec xi = sample_in_ball(empirical.dim_xi(), empirical.xi_radius(), g);
    worst = std::max(worst,
                     std::abs(population.loss(pi, zeta, xi) - empirical.loss(pi, zeta, xi)));

    // Gradient deviation at the population saddle for this policy.
    const ClosedFormSaddle star = population.saddle(pi);
    const Vec z_star = project_ball(star.zeta, empirical.zeta_radius());
    const Vec x_star = project_ball(star.xi, empirical.xi_radius());
    const Vec g_pop = grad_theta_exact(population.features, population.model, pi, z_star,
                                       x_star, population.gamma());
    const Vec g_emp = grad_theta_exact(empirical.features, empirical.model, pi, z_star,
                                       x_star, empirical.gamma());
    // same 1/(1-gamma) normalization as measured_gap, so the deviation feeds
    // the bias decomposition coherently
    worst = std::max(worst,
                     (g_pop - g_emp).squaredNorm() /
                         std::pow(1.0 - population.gamma(), 2));
  }
  return worst;
}

}  // namespace opsaddle
