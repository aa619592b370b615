#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "opsaddle/problem.hpp"

namespace opsaddle {

// Contract every critic subroutine must satisfy: starting from any
// (zeta_bar, xi_bar) in the balls,
//   E ||out - saddle||^2 <= (beta/2) E ||start - saddle||^2 + c.
struct OracleContract {
  double beta = 0.0;  // contraction factor in [0, 1)
  double c = 0.0;     // additive error >= 0
};

struct LsqConfig {
  std::int64_t n_all = 0;  // samples drawn per invocation; 0 = exact-matrix mode
};

// Projected least-square critic: estimates the derived matrices from n_all
// fresh samples and plugs them into the closed-form saddle, then projects.
// With n_all = 0 the exact derived matrices are used (infinite-data mode,
// beta = 0, c = 0). Throws EstimationError when an empirical covariance is
// singular; the caller may raise n_all and retry.
SaddleIterate least_square_oracle(const Problem& problem, const SoftmaxPolicy& policy,
                                  const LsqConfig& config, Rng& g);

struct SvrebConfig {
  std::int64_t iters = 0;       // K; the output is omega_K
  double eta_zeta = 0.0;
  double eta_xi = 0.0;
  std::int64_t batch_size = 0;  // |N|; 0 = noiseless full-gradient mode (diagnostics)
  // Diagnostics hook, called as (k, zeta_k, xi_k) for k = 0..K.
  std::function<void(std::int64_t, const Vec&, const Vec&)> on_iterate;

  // Theorem step-size preconditions; throws InvalidInput when violated.
  void validate(const ProblemConstants& c) const;
};

// Variance-reduced extragradient with anchored batch gradients. Ascends in
// zeta, descends in xi, projecting each half-step into the balls.
SaddleIterate svreb(const Problem& problem, const SoftmaxPolicy& policy,
                    const SvrebConfig& config, const SaddleIterate& init, Rng& g);

// Sample draws consumed by one svreb invocation with these settings.
std::int64_t svreb_samples(const SvrebConfig& config);

double svreb_default_eta_zeta(const ProblemConstants& c);
double svreb_default_eta_xi(const ProblemConstants& c);

// Theorem-2 upper bound on E||omega_K - omega*||^2 from a starting distance.
double svreb_error_bound(const ProblemConstants& c, const SvrebConfig& config,
                         double initial_sq_distance);

enum class OracleKind { least_square, svreb };

struct OracleBudget {
  OracleKind kind;
  std::int64_t n_all = 0;       // least-square
  std::int64_t iters = 0;       // svreb
  std::int64_t batch_size = 0;  // svreb
  std::int64_t samples_per_call() const;
};

// Raw least-square budget value ls_multiplier * 20 * d / c, kept as a double
// so theorem-schedule arithmetic works even when the value is impractically
// large.
double least_square_budget(double c, int feature_dim, double ls_multiplier);

// Inverts the oracle guarantees for a Condition-1 target (beta, c).
// For the least-square oracle the paper's constant is symbolic, so n_all is
// ls_multiplier * 20 * d / c with the multiplier calibrated empirically.
// Throws InvalidInput when a budget exceeds the practical integer range.
OracleBudget oracle_budget(double beta, double c, const ProblemConstants& constants,
                           int feature_dim, OracleKind kind, double ls_multiplier = 8.0);

// Uniform interface consumed by the actor loop.
class SaddleOracle {
 public:
  virtual ~SaddleOracle() = default;
  virtual SaddleIterate solve(const SoftmaxPolicy& policy, const SaddleIterate& warm,
                              Rng& g) const = 0;
  virtual std::int64_t samples_per_call() const = 0;
  virtual OracleContract contract() const = 0;
};

std::unique_ptr<SaddleOracle> make_oracle(const Problem& problem, const OracleBudget& budget,
                                          const OracleContract& contract,
                                          double eta_zeta = 0.0, double eta_xi = 0.0);

struct OracleComparisonRow {
  std::string oracle;
  std::int64_t n_samples = 0;
  double mean_err = 0.0;
  double std_err = 0.0;
  double wall_ms = 0.0;
};

// Appendix-style comparison: root-mean-square saddle distance per oracle per
// sample budget, averaged over seeds. SVREB splits each budget into
// iterations x batches using its theorem step sizes.
std::vector<OracleComparisonRow> compare_oracles(const Problem& problem,
                                                 const SoftmaxPolicy& policy,
                                                 const std::vector<std::int64_t>& budgets,
                                                 int n_seeds, std::uint64_t base_seed,
                                                 bool deterministic_clock = false);

}  // namespace opsaddle
