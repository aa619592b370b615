#pragma once

#include <map>
#include <span>
#include <vector>

#include "opsaddle/rng.hpp"
#include "opsaddle/types.hpp"

namespace opsaddle {

// Finite MDP with known dynamics; the ground-truth oracle behind every
// diagnostic in this library. State-action pairs are flattened row-major:
// sa = s * n_actions + a.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  Mat transition;    // (S*A) x S, row sa is P(.|s,a)
  Mat reward_mean;   // S x A, entries in [0, 1]
  double gamma = 0.0;
  Vec nu0;           // length S

  int sa(int s, int a) const { return s * n_actions + a; }
  int n_sa() const { return n_states * n_actions; }

  // Throws InvalidInput when stochasticity/range invariants fail.
  void validate() const;
};

TabularMdp random_mdp(int n_states, int n_actions, double gamma, Rng& g);

// Per-state softmax over action logits. Satisfies the smoothness bounds
// returned by policy_constants() for any theta.
struct SoftmaxPolicy {
  int n_states = 0;
  int n_actions = 0;
  Vec theta;  // length S*A

  Mat action_probs() const;                    // S x A, rows sum to 1
  Vec prob_row(int s) const;                   // length A
  Vec log_policy_grad(int s, int a) const;     // length S*A
  Mat log_policy_hessian(int s, int a) const;  // (S*A) x (S*A)

  static SoftmaxPolicy uniform(int n_states, int n_actions);
  static SoftmaxPolicy random(int n_states, int n_actions, double scale, Rng& g);
};

// Explicit state-action data distribution. Full support keeps the
// concentrability constant finite.
struct BehaviorDistribution {
  Vec mu;  // length S*A, entries > 0, sums to 1
  void validate() const;
};

BehaviorDistribution uniform_behavior(int n_states, int n_actions);

struct SampleRow {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

enum class RewardMode { deterministic, bernoulli };

struct OfflineDataset {
  int n_states = 0;
  int n_actions = 0;
  std::vector<SampleRow> tuples;

  Vec counts() const;  // length S*A histogram
  int n() const { return static_cast<int>(tuples.size()); }

  // Throws InvalidInput when a tuple's indices are out of range, a transition
  // has zero probability under the mdp, or a reward falls outside the reward
  // distribution's support.
  void validate_against(const TabularMdp& mdp, RewardMode mode) const;
};

// nu^pi(s,a) = nu(s) * pi(a|s).
Vec lift_to_state_action(const SoftmaxPolicy& policy, const Vec& state_dist);

// P^pi[(s,a),(s',a')] = P(s'|s,a) * pi(a'|s').
Mat policy_transition(const TabularMdp& mdp, const SoftmaxPolicy& policy);
Mat policy_transition_from(const Mat& trans_sa_to_s, const SoftmaxPolicy& policy);

// Normalized discounted occupancy started from a state-action distribution:
// solves d = (1-gamma) * init + gamma * P^pi_* d.
Vec occupancy(const TabularMdp& mdp, const SoftmaxPolicy& policy, const Vec& init_sa);

Mat q_function(const TabularMdp& mdp, const SoftmaxPolicy& policy);  // S x A

double expected_return(const TabularMdp& mdp, const SoftmaxPolicy& policy);

// Exact gradient of expected_return with respect to theta.
Vec policy_gradient(const TabularMdp& mdp, const SoftmaxPolicy& policy);

struct PolicyConstants {
  double G;     // bound on ||grad log pi||
  double H;     // bound on ||hess log pi||
  double L_pi;  // per-state total-variation Lipschitz constant
};

// Analytic bounds for the tabular softmax family: (sqrt(2), 1, 2).
PolicyConstants policy_constants();

OfflineDataset sample_dataset(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                              int n, std::uint64_t seed,
                              RewardMode mode = RewardMode::deterministic);

// Empirical quantities induced by a dataset. Rows of `trans` for unseen
// (s,a) are uniform; they carry zero weight in every loss term.
struct EmpiricalModel {
  Vec d;       // length S*A, tuple frequencies
  Vec nu;      // length S, empirical state marginal (initial-state probe)
  Mat trans;   // (S*A) x S
  Mat reward;  // S x A empirical mean rewards (0 where unseen)
  std::vector<std::map<double, double>> reward_dist;  // per sa, value -> prob
  Mat joint_ss;  // (S*A) x S, joint empirical P(s,a,s') (sums to 1)
  long n = 0;

  Mat sa_transition(const SoftmaxPolicy& policy) const;  // P^pi_D, (S*A) x (S*A)
};

EmpiricalModel empirical_model(const OfflineDataset& dataset);

// max over the probe policies and (s,a) of max(d^pi/mu, d^pi_mu/mu), where
// d^pi_mu treats mu itself as the initial state-action distribution.
double concentrability(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                       std::span<const SoftmaxPolicy> policies);

}  // namespace opsaddle
