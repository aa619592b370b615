#pragma once

#include <cstdint>

#include "opsaddle/problem.hpp"
#include "opsaddle/trace.hpp"

namespace opsaddle {

// Upper bound on the objective's range over the balls; over-estimating it only
// enlarges the theorem iteration count.
double loss_range_bound(const ProblemConstants& c);

struct PsredaConfig {
  double epsilon = 0.0;

  // Theorem schedule. Stored as doubles: on realistic instances several of
  // these are astronomically large, and runs are expected to pin practical
  // values through the override surface.
  double outer_iters = 0;     // K
  double refresh_period = 0;  // q
  double big_batch = 0;       // S1 (0 = exact refresh gradients)
  double inner_batch = 0;     // S2 (0 = exact inner gradients)
  double inner_iters = 0;     // m
  double init_iters = 0;      // K0 (stochastic init mode only)
  double lambda_inner = 0.0;  // inner step size
  double step_denom = 0.0;    // the kappa_xi * L product in the eta_k rule

  enum class InitMode { exact, stochastic };
  InitMode init_mode = InitMode::exact;

  static PsredaConfig from_theorem(const ProblemConstants& c, double epsilon);

  // Checks epsilon < 1, step_denom >= 1, and that every budget fits a
  // practical cap so the run can actually execute.
  void validate_for_run() const;

  std::int64_t iters() const { return static_cast<std::int64_t>(outer_iters); }
};

// Expected number of single-sample gradient evaluations of a full run:
// ceil(K/q) * S1 refresh evaluations plus K * m * 2 * S2 inner evaluations
// (each inner sample is evaluated at the current and the previous point).
double psreda_expected_samples(const PsredaConfig& config);

struct PsredaState {
  Vec theta;
  Vec zeta;
  Vec xi;
  Vec v_theta;  // recursive estimate of the (theta) block of grad L_-
  Vec v_zeta;   // recursive estimate of the (zeta) block of grad L_-
  Vec u;        // recursive estimate of grad_xi L_-
  std::int64_t k = 0;
  std::int64_t samples = 0;
};

// xi_0 initializer: `exact` projects the closed-form best response at
// (theta_0, zeta_0); `stochastic` runs K0 projected gradient steps on xi with
// S2-sample batches.
struct InitResult {
  Vec xi;
  std::int64_t samples = 0;
};
InitResult psreda_init_xi(const Problem& problem, const SoftmaxPolicy& policy,
                          const Vec& zeta0, const PsredaConfig& config, Rng& g);

struct MaximizerResult {
  Vec xi;
  Vec v_theta;
  Vec v_zeta;
  Vec u;
  std::int64_t samples = 0;
};

// m inner steps of projected SARAH-style ascent on xi for L_-(x_next, .).
// The first difference update tracks the x_prev -> x_next shift; afterwards
// the recursive estimators follow the moving xi. The returned estimators are
// anchored at x_next and lag the returned xi by one inner step; the periodic
// large-batch refresh resets them.
MaximizerResult concave_maximizer(const Problem& problem, const SoftmaxPolicy& policy_prev,
                                  const Vec& zeta_prev, const SoftmaxPolicy& policy_next,
                                  const Vec& zeta_next, const Vec& xi, const Vec& v_theta,
                                  const Vec& v_zeta, const Vec& u,
                                  const PsredaConfig& config, Rng& g);

struct StepInfo {
  double eta = 0.0;
  double v_norm = 0.0;
  bool projection_active = false;
};

// One outer iteration: refresh-or-carry estimates, simultaneous (theta, zeta)
// descent with ball projection on zeta, then the inner maximizer. Enforces the
// boundedness and, at every active projection, the small-angle inequality.
StepInfo psreda_step(const Problem& problem, PsredaState& state, const PsredaConfig& config,
                     Rng& g);

struct PsredaRun {
  Vec theta_hat;
  Vec zeta_hat;
  RunTrace trace;
  PsredaState final_state;
};

PsredaRun run_psreda(const Problem& problem, const PsredaConfig& config, std::uint64_t seed);

}  // namespace opsaddle
