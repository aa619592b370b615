#pragma once

#include <span>
#include <vector>

#include "opsaddle/problem.hpp"

namespace opsaddle {

// Closed forms of the population Lagrangian's unconstrained stationary point.
// w_L_alt carries the derivation's intermediate line for Q (diagnostic).
struct RegularizedFixedPoints {
  Vec w_pi;    // true density ratio d^pi / mu
  Vec q_pi;    // true Q function, flattened
  Vec w_L;
  Vec q_L;
  Vec q_L_alt;
};

RegularizedFixedPoints regularized_fixed_points(const TabularMdp& mdp,
                                                const BehaviorDistribution& behavior,
                                                const SoftmaxPolicy& policy, double lambda_w,
                                                double lambda_Q);

// ||x||_Lambda^2 = sum_sa mu(s,a) x(s,a)^2.
double lambda_norm(const Vec& x, const Vec& mu);

struct RegBiasRow {
  double lambda;
  double w_dist;    // ||w - w_L||_Lambda
  double q_dist;    // ||Q - Q_L||_Lambda
  double w_bound;
  double q_bound;
};

// Sweep with lambda_w = lambda_Q = lambda; bounds use the per-policy
// concentrability constant.
std::vector<RegBiasRow> reg_bias_vs_lambda(const TabularMdp& mdp,
                                           const BehaviorDistribution& behavior,
                                           const SoftmaxPolicy& policy,
                                           const std::vector<double>& lambdas);

struct MisspecResult {
  double eps1;
  double eps2;
  double eps_W;
  double eps_Q;
};

// eps1/eps2 are probe maxima of exact weighted-least-squares residuals; the
// inner projections are minimum-norm solves, robust to rank deficiency.
MisspecResult misspecification(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                               const FeatureMaps& features,
                               std::span<const SoftmaxPolicy> probe_policies,
                               std::span<const Vec> probe_zetas, double lambda_w,
                               double lambda_Q, double v_w);

struct BiasBounds {
  double eps_reg;
  double eps_func;
  double eps_data;
};

BiasBounds bias_bounds(double G, double gamma, double C, double C_W, double C_Q,
                       double kappa_zeta, double kappa_xi, double lambda_w, double lambda_Q,
                       double eps_W, double eps_Q, double eps_data_bar);

// || grad_theta max min L^D - grad_theta J || at the given policy; the
// quantity the bias decomposition bounds.
double measured_gap(const Problem& problem, const SoftmaxPolicy& policy);

// Probe-based lower bound on the uniform deviation between the population and
// D-slot objectives: max over random feasible points of |L - L^D| and of
// ||grad_theta L - grad_theta L^D||^2 at the population saddle.
double data_deviation_probe(const Problem& empirical, const Problem& population,
                            int n_probes, std::uint64_t probe_seed);

struct BiasReport {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps_W = 0.0;
  double eps_Q = 0.0;
  double eps_data_bar_probe = 0.0;  // probe lower bound on the uniform deviation
  double eps_reg = 0.0;
  double eps_func = 0.0;
  double eps_data = 0.0;            // assembled from the probe lower bound
  double exact_gap = 0.0;
  double bound_sum = 0.0;
  double slack = 0.0;               // bound_sum - exact_gap, reported signed
};

}  // namespace opsaddle
