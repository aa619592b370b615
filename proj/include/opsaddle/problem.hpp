#pragma once

#include <optional>

#include "opsaddle/lagrangian.hpp"
#include "opsaddle/linear_model.hpp"
#include "opsaddle/mdp.hpp"

namespace opsaddle {

// Everything one optimization run needs, with the policy-independent pieces
// (K_w, K_Q, u_R) cached. Immutable after construction.
struct Problem {
  TabularMdp mdp;
  BehaviorDistribution behavior;
  FeatureMaps features;
  DataModel model;
  std::optional<OfflineDataset> dataset;  // present when model is empirical
  double lambda_w = 0.0;
  double lambda_Q = 0.0;
  BallRegime regime = BallRegime::saddle;
  ProblemConstants constants;

  Mat K_w, K_Q;
  Vec u_R;

  double gamma() const { return mdp.gamma; }
  int dim_z() const { return features.dim_z(); }
  int dim_xi() const { return features.dim_xi(); }
  int dim_theta() const { return mdp.n_sa(); }
  double zeta_radius() const { return constants.zeta_radius(regime); }
  double xi_radius() const { return constants.R_xi; }

  DerivedMatrices derived_for(const SoftmaxPolicy& policy) const;

  SampleTuple draw(const SoftmaxPolicy& policy, Rng& g) const;

  GradientTriple grad_exact(const SoftmaxPolicy& policy, const Vec& zeta,
                            const Vec& xi) const;
  GradientTriple grad_exact(const DerivedMatrices& derived, const SoftmaxPolicy& policy,
                            const Vec& zeta, const Vec& xi) const;

  double loss(const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi) const;

  ClosedFormSaddle saddle(const SoftmaxPolicy& policy) const;

  // Danskin gradient of theta -> max_zeta min_xi L^D at the exact saddle.
  Vec surrogate_policy_grad(const SoftmaxPolicy& policy) const;

  struct JointEnvelope {
    double value;
    Vec g_theta;
    Vec g_zeta;
    bool projection_active;
  };
  // Envelope of (theta, zeta) -> min_xi L^D via the projected best response.
  JointEnvelope joint_envelope(const SoftmaxPolicy& policy, const Vec& zeta) const;
};

// Draws SampleTuples for a fixed policy with the action probabilities cached;
// the per-draw cost is what the optimizer inner loops pay.
class TupleSampler {
 public:
  TupleSampler(const Problem& problem, const SoftmaxPolicy& policy);
  SampleTuple draw(Rng& g) const;
  const Mat& action_probs() const { return probs_; }

 private:
  const Problem& problem_;
  Mat probs_;  // S x A
};

struct ProblemOptions {
  int probe_policies = 64;
  std::uint64_t probe_seed = 2024;
  RewardMode reward_mode = RewardMode::deterministic;
};

// Empirical instance: samples a dataset from the behavior distribution and
// freezes the constants for it.
Problem make_problem(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                     FeatureMaps features, double lambda_w, double lambda_Q,
                     BallRegime regime, int dataset_n, std::uint64_t dataset_seed,
                     const ProblemOptions& options = {});

// Infinite-data instance: the population quantities fill the D-slots.
Problem make_exact_problem(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                           FeatureMaps features, double lambda_w, double lambda_Q,
                           BallRegime regime, const ProblemOptions& options = {});

}  // namespace opsaddle
