#include "opsaddle/psreda.hpp"

#include <cmath>
#include <vector>

#include "opsaddle/errors.hpp"

namespace opsaddle {

namespace {

constexpr double kBudgetCap = 1e9;

// L^D_- = -L^D lives here: P-SREDA descends (theta, zeta) and ascends xi on
// the negated objective. This is the one sign flip in the codebase.
struct MinusGrads {
  Vec v_theta;
  Vec v_zeta;
  Vec u;
};

MinusGrads minus_exact(const Problem& p, const SoftmaxPolicy& policy, const Vec& zeta,
                       const Vec& xi) {
  GradientTriple g = p.grad_exact(policy, zeta, xi);
  return {-g.g_theta, -g.g_zeta, -g.g_xi};
}

MinusGrads minus_batch(const Problem& p, const TupleSampler& sampler, const Vec& zeta,
                       const Vec& xi, std::int64_t n, Rng& g) {
  Vec gt = Vec::Zero(p.dim_theta());
  Vec gz = Vec::Zero(p.dim_z());
  Vec gx = Vec::Zero(p.dim_xi());
  const int A = p.mdp.n_actions;
  for (std::int64_t i = 0; i < n; ++i) {
    const SampleTuple t = sampler.draw(g);
    add_grad_sample_theta(t, p.features, sampler.action_probs(), zeta, xi, p.gamma(), gt);
    gz += grad_sample_zeta(t, p.features, A, zeta, xi, p.lambda_w, p.gamma());
    gx += grad_sample_xi(t, p.features, A, zeta, xi, p.lambda_Q, p.gamma());
  }
  const double scale = -1.0 / static_cast<double>(n);
  return {gt * scale, gz * scale, gx * scale};
}

SoftmaxPolicy policy_of(const Problem& p, const Vec& theta) {
  return SoftmaxPolicy{p.mdp.n_states, p.mdp.n_actions, theta};
}

}  // namespace

double loss_range_bound(const ProblemConstants& c) {
  const double peak = (1.0 - c.gamma) * c.C_Q + c.C_W + (1.0 + c.gamma) * c.C_W * c.C_Q +
                      0.5 * c.lambda_Q * c.C_Q * c.C_Q + 0.5 * c.lambda_w * c.C_W * c.C_W;
  return 2.0 * peak;
}

PsredaConfig PsredaConfig::from_theorem(const ProblemConstants& c, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must be < 1");
  PsredaConfig cfg;
  cfg.epsilon = epsilon;
  const double delta = loss_range_bound(c);
  cfg.outer_iters = std::ceil(50.0 * c.kappa_xi * c.L * delta / (epsilon * epsilon));
  cfg.refresh_period = std::ceil(1.0 / epsilon);
  cfg.big_batch =
      std::ceil(2250.0 / 19.0 * c.sigma * c.sigma * c.kappa_xi * c.kappa_xi /
                (epsilon * epsilon));
  cfg.inner_batch = std::ceil(3687.0 / 76.0 * c.kappa_xi * cfg.refresh_period);
  cfg.inner_iters = std::ceil(1024.0 * c.kappa_xi);
  cfg.lambda_inner = 1.0 / (8.0 * c.L);
  cfg.step_denom = c.kappa_xi * c.L;
  // Noiseless contraction (1 - mu_xi * lambda_inner)^K0 from the xi-ball
  // diameter down to the eps/(10 kappa_xi L) init target.
  cfg.init_iters = std::ceil(8.0 * c.kappa_xi *
                             std::log(20.0 * c.kappa_xi * c.L * std::max(c.R_xi, 1.0) / epsilon));
  return cfg;
}

void PsredaConfig::validate_for_run() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must be < 1");
  if (!(step_denom >= 1.0))
    throw InvalidInput("psreda: step_denom must be >= 1 (small-angle precondition)");
  if (!(lambda_inner > 0.0)) throw InvalidInput("psreda: lambda_inner must be positive");
  if (!(refresh_period >= 1.0)) throw InvalidInput("psreda: refresh period must be >= 1");
  for (const double b : {outer_iters, refresh_period, big_batch, inner_batch, inner_iters,
                         init_iters}) {
    if (b < 0.0 || b > kBudgetCap)
      throw InvalidInput(
          "psreda: a schedule constant exceeds the practical budget cap; pin it via overrides");
  }
}

double psreda_expected_samples(const PsredaConfig& c) {
  const double refreshes = std::ceil(c.outer_iters / c.refresh_period);
  return refreshes * c.big_batch + c.outer_iters * c.inner_iters * 2.0 * c.inner_batch;
}

InitResult psreda_init_xi(const Problem& problem, const SoftmaxPolicy& policy,
                          const Vec& zeta0, const PsredaConfig& config, Rng& g) {
  InitResult out;
  if (config.init_mode == PsredaConfig::InitMode::exact) {
    const DerivedMatrices d = problem.derived_for(policy);
    out.xi = project_ball(best_response_xi(d, zeta0, problem.lambda_Q, problem.gamma()),
                          problem.xi_radius());
    return out;
  }
  Vec xi = Vec::Zero(problem.dim_xi());
  const TupleSampler sampler(problem, policy);
  const auto iters = static_cast<std::int64_t>(config.init_iters);
  const auto batch = static_cast<std::int64_t>(config.inner_batch);
  for (std::int64_t i = 0; i < iters; ++i) {
    MinusGrads mg;
    if (batch > 0) {
      mg = minus_batch(problem, sampler, zeta0, xi, batch, g);
      out.samples += batch;
    } else {
      mg = minus_exact(problem, policy, zeta0, xi);
    }
    xi = project_ball(xi + config.lambda_inner * mg.u, problem.xi_radius());
  }
  out.xi = xi;
  return out;
}

MaximizerResult concave_maximizer(const Problem& problem, const SoftmaxPolicy& policy_prev,
                                  const Vec& zeta_prev, const SoftmaxPolicy& policy_next,
                                  const Vec& zeta_next, const Vec& xi, const Vec& v_theta,
                                  const Vec& v_zeta, const Vec& u,
                                  const PsredaConfig& config, Rng& g) {
  MaximizerResult r;
  r.xi = xi;
  r.v_theta = v_theta;
  r.v_zeta = v_zeta;
  r.u = u;
  const auto m = static_cast<std::int64_t>(config.inner_iters);
  const auto s2 = static_cast<std::int64_t>(config.inner_batch);

  const TupleSampler sampler_next(problem, policy_next);
  const TupleSampler sampler_prev(problem, policy_prev);
  const int A = problem.mdp.n_actions;

  Vec xi_prev_pt = xi;
  for (std::int64_t t = 0; t < m; ++t) {
    const bool shift_step = (t == 0);  // tracks the x_prev -> x_next move
    const SoftmaxPolicy& pol_lo = shift_step ? policy_prev : policy_next;
    const Vec& zeta_lo = shift_step ? zeta_prev : zeta_next;
    const Vec& xi_lo = xi_prev_pt;
    const Vec& xi_hi = r.xi;

    if (s2 > 0) {
      Vec dt = Vec::Zero(problem.dim_theta());
      Vec dz = Vec::Zero(problem.dim_z());
      Vec dx = Vec::Zero(problem.dim_xi());
      for (std::int64_t i = 0; i < s2; ++i) {
        const SampleTuple tup = sampler_next.draw(g);
        add_grad_sample_theta(tup, problem.features, sampler_next.action_probs(), zeta_next,
                              xi_hi, problem.gamma(), dt);
        dz += grad_sample_zeta(tup, problem.features, A, zeta_next, xi_hi, problem.lambda_w,
                               problem.gamma());
        dx += grad_sample_xi(tup, problem.features, A, zeta_next, xi_hi, problem.lambda_Q,
                             problem.gamma());
        // At the shift step the two evaluation points carry different
        // policies; the policy-action draws are refreshed under the old one
        // so both sides stay unbiased at their own point.
        SampleTuple lo_tup = tup;
        if (shift_step) {
          double u = uniform01(g);
          for (int a = 0; a < A; ++a) {
            lo_tup.a_next = a;
            if (u < sampler_prev.action_probs()(tup.s_next, a)) break;
            u -= sampler_prev.action_probs()(tup.s_next, a);
          }
          u = uniform01(g);
          for (int a = 0; a < A; ++a) {
            lo_tup.a0 = a;
            if (u < sampler_prev.action_probs()(tup.s0, a)) break;
            u -= sampler_prev.action_probs()(tup.s0, a);
          }
        }
        const Mat& lo_probs =
            shift_step ? sampler_prev.action_probs() : sampler_next.action_probs();
        Vec lt = Vec::Zero(problem.dim_theta());
        add_grad_sample_theta(lo_tup, problem.features, lo_probs, zeta_lo, xi_lo,
                              problem.gamma(), lt);
        dt -= lt;
        dz -= grad_sample_zeta(lo_tup, problem.features, A, zeta_lo, xi_lo,
                               problem.lambda_w, problem.gamma());
        dx -= grad_sample_xi(lo_tup, problem.features, A, zeta_lo, xi_lo, problem.lambda_Q,
                             problem.gamma());
      }
      // difference of grad L_- = -(difference of grad L)
      const double scale = -1.0 / static_cast<double>(s2);
      r.v_theta += scale * dt;
      r.v_zeta += scale * dz;
      r.u += scale * dx;
      r.samples += 2 * s2;
    } else {
      const MinusGrads hi = minus_exact(problem, policy_next, zeta_next, xi_hi);
      const MinusGrads lo = minus_exact(problem, pol_lo, zeta_lo, xi_lo);
      r.v_theta += hi.v_theta - lo.v_theta;
      r.v_zeta += hi.v_zeta - lo.v_zeta;
      r.u += hi.u - lo.u;
    }
    xi_prev_pt = r.xi;
    r.xi = project_ball(r.xi + config.lambda_inner * r.u, problem.xi_radius());
  }
  return r;
}

StepInfo psreda_step(const Problem& problem, PsredaState& state, const PsredaConfig& config,
                     Rng& g) {
  const SoftmaxPolicy policy = policy_of(problem, state.theta);
  const auto q = static_cast<std::int64_t>(config.refresh_period);
  const auto s1 = static_cast<std::int64_t>(config.big_batch);

  if (state.k % q == 0) {
    MinusGrads mg;
    if (s1 > 0) {
      const TupleSampler sampler(problem, policy);
      mg = minus_batch(problem, sampler, state.zeta, state.xi, s1, g);
      state.samples += s1;
    } else {
      mg = minus_exact(problem, policy, state.zeta, state.xi);
    }
    state.v_theta = mg.v_theta;
    state.v_zeta = mg.v_zeta;
    state.u = mg.u;
  }

  StepInfo info;
  const double v_norm =
      std::sqrt(state.v_theta.squaredNorm() + state.v_zeta.squaredNorm());
  info.v_norm = v_norm;
  const double cap = 1.0 / (10.0 * config.step_denom);
  info.eta = v_norm > 0.0
                 ? std::min(config.epsilon / (5.0 * config.step_denom * v_norm), cap)
                 : cap;

  const Vec theta_next = state.theta - info.eta * state.v_theta;
  const Vec zeta_plus = state.zeta - info.eta * state.v_zeta;
  info.projection_active = zeta_plus.norm() > problem.zeta_radius();
  const Vec zeta_next =
      info.projection_active ? project_ball(zeta_plus, problem.zeta_radius()) : zeta_plus;

  // Movement bound implied by the step-size rule.
  const double move_sq = (theta_next - state.theta).squaredNorm() +
                         (zeta_plus - state.zeta).squaredNorm();
  const double move_cap = std::pow(config.epsilon / (5.0 * config.step_denom), 2);
  if (move_sq > move_cap * (1.0 + 1e-9) + 1e-15)
    throw NumericalError("psreda: per-step movement bound violated");

  if (info.projection_active) {
    // Small-angle inequality, checked with the exact gradient of L_-.
    const GradientTriple exact = problem.grad_exact(policy, state.zeta, state.xi);
    const Vec minus_grad_zeta = -exact.g_zeta;
    const double lhs = minus_grad_zeta.dot(zeta_next - zeta_plus);
    const double rhs =
        info.eta / 4.0 * minus_grad_zeta.norm() * state.v_zeta.norm();
    if (lhs > rhs + 1e-10)
      throw NumericalError("psreda: small-angle projection inequality violated");
  }

  const SoftmaxPolicy policy_next = policy_of(problem, theta_next);
  MaximizerResult inner =
      concave_maximizer(problem, policy, state.zeta, policy_next, zeta_next, state.xi,
                        state.v_theta, state.v_zeta, state.u, config, g);
  state.samples += inner.samples;

  state.theta = theta_next;
  state.zeta = zeta_next;
  state.xi = inner.xi;
  state.v_theta = inner.v_theta;
  state.v_zeta = inner.v_zeta;
  state.u = inner.u;
  state.k += 1;

  if (state.zeta.norm() > problem.zeta_radius() + 1e-9 ||
      state.xi.norm() > problem.xi_radius() + 1e-9)
    throw NumericalError("psreda: iterate escaped its ball");
  return info;
}

PsredaRun run_psreda(const Problem& problem, const PsredaConfig& config, std::uint64_t seed) {
  config.validate_for_run();
  Rng g(seed);

  PsredaRun run;
  run.trace.columns = {"iter",        "samples", "eta",
                       "v_norm",      "proj_active",
                       "exact_envelope_grad_norm", "loss"};
  run.trace.meta.seed = seed;

  PsredaState state;
  state.theta = Vec::Zero(problem.dim_theta());
  state.zeta = Vec::Zero(problem.dim_z());
  const InitResult init =
      psreda_init_xi(problem, policy_of(problem, state.theta), state.zeta, config, g);
  state.xi = init.xi;
  state.samples = init.samples;
  state.v_theta = Vec::Zero(problem.dim_theta());
  state.v_zeta = Vec::Zero(problem.dim_z());
  state.u = Vec::Zero(problem.dim_xi());

  const std::int64_t iters = config.iters();
  std::vector<Vec> thetas, zetas;
  thetas.reserve(iters);
  zetas.reserve(iters);
  for (std::int64_t k = 0; k < iters; ++k) {
    thetas.push_back(state.theta);
    zetas.push_back(state.zeta);
    const SoftmaxPolicy pol = policy_of(problem, state.theta);
    const Problem::JointEnvelope env = problem.joint_envelope(pol, state.zeta);
    const double env_norm =
        std::sqrt(env.g_theta.squaredNorm() + env.g_zeta.squaredNorm());
    const double loss = problem.loss(pol, state.zeta, state.xi);
    const StepInfo info = psreda_step(problem, state, config, g);
    run.trace.add_row({static_cast<double>(k), static_cast<double>(state.samples), info.eta,
                       info.v_norm, info.projection_active ? 1.0 : 0.0, env_norm, loss});
  }

  if (iters == 0) {
    run.theta_hat = state.theta;
    run.zeta_hat = state.zeta;
  } else {
    const auto pick = static_cast<std::int64_t>(uniform01(g) * static_cast<double>(iters));
    const auto idx = std::min<std::int64_t>(pick, iters - 1);
    run.theta_hat = thetas[static_cast<std::size_t>(idx)];
    run.zeta_hat = zetas[static_cast<std::size_t>(idx)];
  }
  run.final_state = state;
  return run;
}

}  // namespace opsaddle
