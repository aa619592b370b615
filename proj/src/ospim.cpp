#include "opsaddle/ospim.hpp"

#include <cmath>

#include "opsaddle/errors.hpp"
#include "opsaddle/psreda.hpp"

namespace opsaddle {

namespace {

constexpr double kBudgetCap = 1e9;

SoftmaxPolicy policy_of(const Problem& p, const Vec& theta) {
  return SoftmaxPolicy{p.mdp.n_states, p.mdp.n_actions, theta};
}

Vec batch_theta_grad(const Problem& p, const SoftmaxPolicy& policy, const Vec& zeta,
                     const Vec& xi, std::int64_t n, Rng& g) {
  if (n <= 0) {
    return grad_theta_exact(p.features, p.model, policy, zeta, xi, p.gamma());
  }
  const TupleSampler sampler(p, policy);
  Vec sum = Vec::Zero(p.dim_theta());
  for (std::int64_t i = 0; i < n; ++i) {
    const SampleTuple t = sampler.draw(g);
    add_grad_sample_theta(t, p.features, sampler.action_probs(), zeta, xi, p.gamma(), sum);
  }
  return sum / static_cast<double>(n);
}

}  // namespace

OspimConfig OspimConfig::from_theorem(const ProblemConstants& c, double epsilon,
                                      OracleKind kind) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  OspimConfig cfg;
  cfg.epsilon = epsilon;
  cfg.oracle_kind = kind;
  cfg.alpha = 0.5;
  const double lambda = 2.0 * std::pow(1.0 - cfg.alpha, 2);  // = 0.5
  const double d = std::max(c.C_W, c.C_Q);
  // The theorem's beta additionally clamped by the lemma precondition
  // beta <= (1-alpha)^2 / 2.
  cfg.beta = std::min({epsilon * epsilon / (c.L * c.L * d * d),
                       std::pow(1.0 - lambda, 2), 0.5,
                       std::pow(1.0 - cfg.alpha, 2) / 2.0});
  cfg.c = epsilon * epsilon / (128.0 * c.L * c.L);
  cfg.eta_theta = std::min(1.0 / (2.0 * c.L_zeta_xi),
                           std::sqrt((1.0 - lambda) /
                                     (6.0 * c.L * c.L * (14.0 * c.C_zeta_xi + 1.0))));
  const double delta = loss_range_bound(c);
  cfg.outer_iters = std::ceil(std::max(
      {96.0, 16.0 * delta * c.L_zeta_xi / (epsilon * epsilon),
       16.0 * delta * c.L * std::sqrt(28.0 * c.C_zeta_xi + 2.0) / (epsilon * epsilon)}));
  cfg.batch_size = std::ceil(36.0 * c.sigma * c.sigma / (epsilon * epsilon));
  return cfg;
}

void OspimConfig::validate_for_run() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("ospim: alpha must lie in (0,1]");
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidInput("ospim: beta must lie in [0,1)");
  if (beta > std::pow(1.0 - alpha, 2) / 2.0 + 1e-15)
    throw InvalidInput("ospim: beta must satisfy beta <= (1-alpha)^2/2");
  if (!(c > 0.0)) throw InvalidInput("ospim: oracle additive target c must be positive");
  if (!(eta_theta >= 0.0)) throw InvalidInput("ospim: eta_theta must be >= 0");
  if (outer_iters < 0.0 || outer_iters > kBudgetCap || batch_size < 0.0 ||
      batch_size > kBudgetCap)
    throw InvalidInput(
        "ospim: a schedule constant exceeds the practical budget cap; pin it via overrides");
}

double ospim_expected_samples(const OspimConfig& config, std::int64_t oracle_samples_per_call) {
  return config.batch_size * (config.outer_iters + 1.0) +
         static_cast<double>(oracle_samples_per_call) * (config.outer_iters + 1.0);
}

Vec momentum_mix(const Vec& g_prev, const Vec& batch_grad, double alpha) {
  return (1.0 - alpha) * g_prev + alpha * batch_grad;
}

void ospim_step(const Problem& problem, OspimState& state, const OspimConfig& config,
                const SaddleOracle& oracle, Rng& g) {
  state.theta += config.eta_theta * state.g_theta;
  const SoftmaxPolicy policy = policy_of(problem, state.theta);

  SaddleIterate warm{state.zeta, state.xi, problem.zeta_radius(), problem.xi_radius()};
  const SaddleIterate critic = oracle.solve(policy, warm, g);
  state.zeta = critic.zeta;
  state.xi = critic.xi;
  state.samples += oracle.samples_per_call();
  critic.check();

  const auto b = static_cast<std::int64_t>(config.batch_size);
  const Vec batch_grad = batch_theta_grad(problem, policy, state.zeta, state.xi, b, g);
  state.samples += b;
  state.g_theta = momentum_mix(state.g_theta, batch_grad, config.alpha);
  state.t += 1;
}

OspimRun run_ospim(const Problem& problem, const OspimConfig& config, std::uint64_t seed) {
  config.validate_for_run();
  Rng g(seed);

  const OracleBudget budget =
      oracle_budget(config.oracle_kind == OracleKind::svreb ? config.beta : 0.0, config.c,
                    problem.constants, std::max(problem.dim_z(), problem.dim_xi()),
                    config.oracle_kind, config.ls_multiplier);
  const OracleContract contract{config.oracle_kind == OracleKind::svreb ? config.beta : 0.0,
                                config.c};
  const auto oracle = make_oracle(problem, budget, contract);

  OspimRun run;
  run.trace.columns = {"iter",    "samples",        "g_norm", "exact_J_grad_norm",
                       "exact_envelope_grad_norm", "critic_dist", "J_value"};
  run.trace.meta.seed = seed;

  OspimState state;
  state.theta = Vec::Zero(problem.dim_theta());
  state.zeta = Vec::Zero(problem.dim_z());
  state.xi = Vec::Zero(problem.dim_xi());

  // Oracle.init treated as a standard invocation from the (zeta_-1, xi_-1)
  // start, followed by the B_0 momentum batch.
  {
    const SoftmaxPolicy policy0 = policy_of(problem, state.theta);
    SaddleIterate warm{state.zeta, state.xi, problem.zeta_radius(), problem.xi_radius()};
    const SaddleIterate critic = oracle->solve(policy0, warm, g);
    state.zeta = critic.zeta;
    state.xi = critic.xi;
    state.samples += oracle->samples_per_call();
    const auto b = static_cast<std::int64_t>(config.batch_size);
    state.g_theta = batch_theta_grad(problem, policy0, state.zeta, state.xi, b, g);
    state.samples += b;
  }

  std::vector<Vec> thetas;
  auto record = [&](const OspimState& s) {
    const SoftmaxPolicy pol = policy_of(problem, s.theta);
    const ClosedFormSaddle star = problem.saddle(pol);
    const double critic_dist = std::sqrt((s.zeta - star.zeta).squaredNorm() +
                                         (s.xi - star.xi).squaredNorm());
    const double env_norm =
        grad_theta_exact(problem.features, problem.model, pol, star.zeta, star.xi,
                         problem.gamma())
            .norm();
    const double j_grad = policy_gradient(problem.mdp, pol).norm();
    const double j_val = expected_return(problem.mdp, pol);
    run.trace.add_row({static_cast<double>(s.t), static_cast<double>(s.samples),
                       s.g_theta.norm(), j_grad, env_norm, critic_dist, j_val});
    run.zetas.push_back(s.zeta);
    run.xis.push_back(s.xi);
    run.g_sq_norms.push_back(s.g_theta.squaredNorm());
    thetas.push_back(s.theta);
  };

  record(state);
  const std::int64_t iters = config.iters();
  for (std::int64_t t = 0; t < iters; ++t) {
    ospim_step(problem, state, config, *oracle, g);
    record(state);
  }

  const auto count = static_cast<std::int64_t>(thetas.size());
  const auto pick = static_cast<std::int64_t>(uniform01(g) * static_cast<double>(count));
  run.theta_hat = thetas[static_cast<std::size_t>(std::min(pick, count - 1))];
  return run;
}

CriticShiftReport critic_shift_check(std::span<const OspimRun> runs, const OspimConfig& config,
                                     const ProblemConstants& constants) {
  if (runs.empty()) throw InvalidInput("critic_shift_check: no runs");
  const std::size_t steps = runs.front().zetas.size();
  for (const auto& r : runs)
    if (r.zetas.size() != steps) throw InvalidInput("critic_shift_check: ragged runs");
  if (steps < 2) throw InvalidInput("critic_shift_check: need at least one step");

  const double d = std::max(constants.C_W, constants.C_Q);
  const double beta = config.beta;
  const double eta2c = 6.0 * config.eta_theta * config.eta_theta * constants.C_zeta_xi;

  CriticShiftReport report;
  int satisfied = 0;
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    double mean = 0.0, mean_sq = 0.0;
    for (const auto& r : runs) {
      const double shift = (r.zetas[t + 1] - r.zetas[t]).squaredNorm() +
                           (r.xis[t + 1] - r.xis[t]).squaredNorm();
      mean += shift;
      mean_sq += shift * shift;
    }
    mean /= runs.size();
    mean_sq /= runs.size();
    const double se =
        runs.size() > 1
            ? std::sqrt(std::max(0.0, mean_sq - mean * mean) / (runs.size() - 1.0))
            : 0.0;

    // sum_{tau=0}^{t} beta^{t-tau} E||g_tau||^2 (0^0 = 1 so the tau = t term
    // survives a beta = 0 oracle).
    double g_sum = 0.0;
    for (std::size_t tau = 0; tau <= t; ++tau) {
      double mean_g = 0.0;
      for (const auto& r : runs) mean_g += r.g_sq_norms[tau];
      mean_g /= runs.size();
      const double weight = (t == tau) ? 1.0 : std::pow(beta, static_cast<double>(t - tau));
      g_sum += weight * mean_g;
    }
    CriticShiftRow row;
    row.t = static_cast<int>(t);
    row.measured = mean;
    row.bound = 6.0 * std::pow(beta, static_cast<double>(t + 1)) * d * d + eta2c * g_sum +
                6.0 * config.c / (1.0 - beta);
    row.ok = mean <= row.bound + 2.0 * se;
    satisfied += row.ok ? 1 : 0;
    report.rows.push_back(row);
  }
  report.satisfied_fraction =
      report.rows.empty() ? 1.0 : static_cast<double>(satisfied) / report.rows.size();
  return report;
}

}  // namespace opsaddle
