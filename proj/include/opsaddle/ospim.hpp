#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "opsaddle/oracles.hpp"
#include "opsaddle/problem.hpp"
#include "opsaddle/trace.hpp"

namespace opsaddle {

struct OspimConfig {
  double epsilon = 0.0;
  double outer_iters = 0;   // T (double: theorem values can overflow practical budgets)
  double batch_size = 0;    // |B| (0 = exact batch gradients, diagnostics only)
  double alpha = 0.5;       // momentum mixing
  double beta = 0.0;        // oracle contraction target
  double c = 0.0;           // oracle additive target
  double eta_theta = 0.0;   // actor step size
  OracleKind oracle_kind = OracleKind::least_square;
  double c_oracle = 8.0;        // svreb iteration constant, exposed for calibration
  double ls_multiplier = 8.0;   // least-square budget multiplier (C_LS is symbolic)

  static OspimConfig from_theorem(const ProblemConstants& c, double epsilon,
                                  OracleKind kind);
  void validate_for_run() const;
  std::int64_t iters() const { return static_cast<std::int64_t>(outer_iters); }
};

// Actor-loop sample draws implied by the config plus the oracle budget
// (|B| * (T + 1) momentum batches + (T + 1) oracle invocations).
double ospim_expected_samples(const OspimConfig& config, std::int64_t oracle_samples_per_call);

struct OspimState {
  Vec theta;
  Vec zeta;
  Vec xi;
  Vec g_theta;  // momentum gradient accumulator
  std::int64_t t = 0;
  std::int64_t samples = 0;
};

Vec momentum_mix(const Vec& g_prev, const Vec& batch_grad, double alpha);

// One iteration: actor ascent step, oracle critic call warm-started at the
// previous critic pair, then the momentum update from a fresh batch.
void ospim_step(const Problem& problem, OspimState& state, const OspimConfig& config,
                const SaddleOracle& oracle, Rng& g);

struct OspimRun {
  Vec theta_hat;
  RunTrace trace;
  // Per-iterate history (t = 0..T) kept for the critic-shift audit.
  std::vector<Vec> zetas;
  std::vector<Vec> xis;
  std::vector<double> g_sq_norms;
};

OspimRun run_ospim(const Problem& problem, const OspimConfig& config, std::uint64_t seed);

struct CriticShiftRow {
  int t = 0;
  double measured = 0.0;  // seed-mean of ||zeta_{t+1}-zeta_t||^2 + ||xi_{t+1}-xi_t||^2
  double bound = 0.0;     // the recursion bound built from beta, c, eta_theta, C_zeta_xi
  bool ok = false;
};

struct CriticShiftReport {
  std::vector<CriticShiftRow> rows;
  double satisfied_fraction = 0.0;
};

// Audits the critic-shift recursion across seeds:
// E[shift_t] <= 6 beta^{t+1} d^2 + 6 eta^2 C_{zeta,xi} sum_tau beta^{t-tau} E||g_tau||^2
//               + 6c/(1-beta),
// flagging steps whose measured mean exceeds the bound by more than the
// cross-seed standard error.
CriticShiftReport critic_shift_check(std::span<const OspimRun> runs, const OspimConfig& config,
                                     const ProblemConstants& constants);

}  // namespace opsaddle
