#pragma once

#include <span>

#include "opsaddle/linear_model.hpp"
#include "opsaddle/types.hpp"

namespace opsaddle {

// Radial projection onto the centered ball; identity inside.
Vec project_ball(const Vec& x, double radius);

// Paired critic parameters with their ball constraints.
struct SaddleIterate {
  Vec zeta;
  Vec xi;
  double z_radius = 0.0;
  double xi_radius = 0.0;

  void project();  // clamps both blocks into their balls
  void check() const;  // throws NumericalError when a block escaped its ball
};

// One stochastic observation: a dataset tuple plus the three policy draws
// (a' at s_next, and an initial-state pair (s0, a0)).
struct SampleTuple {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
  int a_next = 0;
  int s0 = 0;
  int a0 = 0;
};

struct GradientTriple {
  Vec g_theta;
  Vec g_zeta;
  Vec g_xi;
};

// L = (1-gamma) u_nu . xi + zeta . u_R - zeta . M xi
//     + (lambda_Q/2) xi . K_Q xi - (lambda_w/2) zeta . K_w zeta
double loss_value(const DerivedMatrices& d, const Vec& zeta, const Vec& xi,
                  double lambda_w, double lambda_Q, double gamma);

Vec grad_zeta(const DerivedMatrices& d, const Vec& zeta, const Vec& xi, double lambda_w);
Vec grad_xi(const DerivedMatrices& d, const Vec& zeta, const Vec& xi, double lambda_Q,
            double gamma);

// Exact theta-gradient of the objective, enumerating the model support and
// the policy's action distribution (no sampling).
Vec grad_theta_exact(const FeatureMaps& features, const DataModel& model,
                     const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi,
                     double gamma);

// Single-sample estimators of all three gradients.
GradientTriple grad_sample(const SampleTuple& t, const FeatureMaps& features,
                           const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi,
                           double lambda_w, double lambda_Q, double gamma);

// Arithmetic mean of grad_sample over the batch, summed in batch order.
GradientTriple grad_batch(std::span<const SampleTuple> batch, const FeatureMaps& features,
                          const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi,
                          double lambda_w, double lambda_Q, double gamma);

// Single-component estimators for the optimizer hot loops. The zeta and xi
// blocks never touch the policy; the theta block takes the cached action
// probabilities and accumulates into `out`.
Vec grad_sample_zeta(const SampleTuple& t, const FeatureMaps& features, int n_actions,
                     const Vec& zeta, const Vec& xi, double lambda_w, double gamma);
Vec grad_sample_xi(const SampleTuple& t, const FeatureMaps& features, int n_actions,
                   const Vec& zeta, const Vec& xi, double lambda_Q, double gamma);
void add_grad_sample_theta(const SampleTuple& t, const FeatureMaps& features,
                           const Mat& action_probs, const Vec& zeta, const Vec& xi,
                           double gamma, Vec& out);

// Unconstrained inner minimizer over xi given zeta.
Vec best_response_xi(const DerivedMatrices& d, const Vec& zeta, double lambda_Q,
                     double gamma);

// Unconstrained inner maximizer over zeta given xi.
Vec best_response_zeta(const DerivedMatrices& d, const Vec& xi, double lambda_w);

struct ClosedFormSaddle {
  Vec zeta;
  Vec xi;
  Vec xi_alt;  // same point through the pre-inverse-lemma route; diagnostic
};

ClosedFormSaddle closed_form_saddle(const DerivedMatrices& d, double lambda_w,
                                    double lambda_Q, double gamma);

struct EnvelopeZeta {
  double value;          // Phi(zeta) = min over xi in the ball
  Vec grad;              // Danskin gradient in zeta
  bool projection_active;
};

// Inner minimizer taken as the projected closed-form best response; an active
// projection is surfaced as a diagnostic flag.
EnvelopeZeta envelope_zeta(const DerivedMatrices& d, const Vec& zeta, double lambda_w,
                           double lambda_Q, double gamma, double xi_radius);

struct EnvelopeXi {
  double value;  // Psi(xi) = max over zeta in the ball
  Vec grad;      // Danskin gradient in xi
  bool projection_active;
};

EnvelopeXi envelope_xi(const DerivedMatrices& d, const Vec& xi, double lambda_w,
                       double lambda_Q, double gamma, double zeta_radius);

}  // namespace opsaddle
