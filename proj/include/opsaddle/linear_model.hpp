#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opsaddle/mdp.hpp"
#include "opsaddle/types.hpp"

namespace opsaddle {

// Row-per-(s,a) feature matrices for the density-ratio class (w) and the
// value class (Q). Every row must have Euclidean norm <= 1.
struct FeatureMaps {
  Mat phi_w;  // (S*A) x dim_z
  Mat phi_q;  // (S*A) x dim_xi

  int dim_z() const { return static_cast<int>(phi_w.cols()); }
  int dim_xi() const { return static_cast<int>(phi_q.cols()); }
  void validate() const;  // throws InvalidInput on a row norm > 1 + 1e-12
};

// Well-specified family: one (s,a) indicator per row.
FeatureMaps onehot_features(int n_states, int n_actions);

// Mis-specified family: seeded random projections, rows rescaled to norm <= 1.
FeatureMaps random_features(int n_states, int n_actions, int dim_z, int dim_xi,
                            std::uint64_t seed);

// The "D-slots" of the objective: either the empirical quantities of a dataset
// or the exact population quantities (infinite-data mode).
struct DataModel {
  Vec d;            // length S*A, weight of each pair (Lambda diagonal)
  Vec nu;           // length S, initial-state probe distribution
  Mat trans;        // (S*A) x S next-state distribution
  Mat reward_mean;  // S x A
  std::vector<std::vector<std::pair<double, double>>> reward_outcomes;  // (value, prob) per sa
  Mat joint_ss;     // (S*A) x S joint over (s,a,s')
  int n_states = 0;
  int n_actions = 0;
  bool exact = false;

  int n_sa() const { return n_states * n_actions; }
  Vec reward_sa() const;  // mean rewards flattened to length S*A
};

DataModel exact_model(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                      RewardMode mode = RewardMode::deterministic);
DataModel data_model_from(const EmpiricalModel& empirical, int n_states, int n_actions);

// The five matrix-form ingredients of the objective for one policy.
struct DerivedMatrices {
  Mat K_w;   // dim_z x dim_z
  Mat K_Q;   // dim_xi x dim_xi
  Mat M_pi;  // dim_z x dim_xi
  Vec u_R;   // dim_z
  Vec u_nu;  // dim_xi
  bool exact = false;
};

DerivedMatrices build_derived(const FeatureMaps& features, const DataModel& model,
                              const SoftmaxPolicy& policy, double gamma);

struct SingularFloors {
  double v_w;
  double v_Q;
  double v_M;  // min over the probed policies
  std::string worst_policy_note;
};

// Throws AssumptionViolation('B', ...) naming the failing matrix when a floor
// is <= 1e-12. v_M is a probe-based certificate over the given policies.
SingularFloors singular_floors(const FeatureMaps& features, const DataModel& model,
                               double gamma, std::span<const SoftmaxPolicy> probes);

struct Radii {
  double R_zeta;
  double R_xi;
  double R_0;
  double R_prime;
};

Radii saddle_radii(double lambda_w, double lambda_Q, double v_w, double v_Q,
                   double v_M, double gamma);

double smoothness_constant(double G, double H, double L_pi, double C_W, double C_Q,
                           double gamma, double lambda_w, double lambda_Q);

struct VarianceConstants {
  double sigma_K;
  double sigma_M;
  double sigma_R;
  double sigma_nu;
  double sigma_theta;
  double sigma_zeta;
  double sigma_xi;
  double sigma;
};

// Assumption-style variance constants, enumerated exactly over the model's
// finite support (tuple distribution x policy actions).
VarianceConstants variance_constants(const FeatureMaps& features, const DataModel& model,
                                     const SoftmaxPolicy& policy, double C_W, double C_Q,
                                     double G, double gamma, double lambda_w,
                                     double lambda_Q);

std::pair<double, double> stochastic_smoothness(double lambda_w, double lambda_Q,
                                                double v_w, double v_Q, double gamma);

struct OspimComposites {
  double C_zeta_xi;
  double L_zeta_xi;
};

OspimComposites ospim_constants(double kappa_zeta, double kappa_xi, double L);

// Which balls the parameter sets use. O-SPIM constrains to the saddle balls
// (Z0, Xi0); P-SREDA enlarges Z to radius R' = 8 max(R_0, 1).
enum class BallRegime { saddle, expanded };

struct ProblemConstants {
  // policy family
  double G = 0, H = 0, L_pi = 0;
  double gamma = 0;
  // regularization
  double lambda_w = 0, lambda_Q = 0;
  // singular floors
  double v_w = 0, v_Q = 0, v_M = 0;
  // moduli / smoothness / condition numbers
  double mu_zeta = 0, mu_xi = 0;
  double L = 0;
  double kappa_zeta = 0, kappa_xi = 0;
  // radii and diameters
  double R_zeta = 0, R_xi = 0, R_0 = 0, R_prime = 0;
  double C_W = 0, C_Q = 0;
  // variance constants
  double sigma_K = 0, sigma_M = 0, sigma_R = 0, sigma_nu = 0;
  double sigma_theta = 0, sigma_zeta = 0, sigma_xi = 0, sigma = 0;
  // stochastic smoothness and O-SPIM composites
  double L_bar_zeta = 0, L_bar_xi = 0;
  double C_zeta_xi = 0, L_zeta_xi = 0;

  double zeta_radius(BallRegime regime) const {
    return regime == BallRegime::expanded ? R_prime : R_zeta;
  }
};

// Freezes every theorem constant for one (model, features, lambda)
// configuration. v_M and the sigma constants are certified over
// `probe_policies` random policies plus the provided anchors.
ProblemConstants build_constants(const FeatureMaps& features, const DataModel& model,
                                 double lambda_w, double lambda_Q, double gamma,
                                 BallRegime regime,
                                 std::span<const SoftmaxPolicy> anchor_policies,
                                 int probe_policies = 64, std::uint64_t probe_seed = 2024);

}  // namespace opsaddle
