#include "opsaddle/problem.hpp"

#include <utility>

#include "opsaddle/errors.hpp"

namespace opsaddle {

DerivedMatrices Problem::derived_for(const SoftmaxPolicy& policy) const {
  const Mat probs = policy.action_probs();
  const int S = model.n_states;
  const int A = model.n_actions;
  Mat avg_q(S, features.dim_xi());
  for (int s = 0; s < S; ++s) {
    Vec row = Vec::Zero(features.dim_xi());
    for (int a = 0; a < A; ++a) row += probs(s, a) * features.phi_q.row(s * A + a).transpose();
    avg_q.row(s) = row.transpose();
  }
  DerivedMatrices d;
  d.K_w = K_w;
  d.K_Q = K_Q;
  d.u_R = u_R;
  const Mat next_q = model.trans * avg_q;
  d.M_pi = features.phi_w.transpose() *
           (model.d.asDiagonal() * (features.phi_q - gamma() * next_q));
  d.u_nu = features.phi_q.transpose() * lift_to_state_action(policy, model.nu);
  d.exact = model.exact;
  return d;
}

namespace {

int sample_row(const Mat& probs, int row, Rng& g) {
  double u = uniform01(g);
  int last = 0;
  for (int a = 0; a < probs.cols(); ++a) {
    const double w = probs(row, a);
    if (w <= 0.0) continue;
    last = a;
    if (u < w) return a;
    u -= w;
  }
  return last;
}

SampleTuple draw_with_probs(const Problem& problem, const Mat& probs, Rng& g) {
  SampleTuple t;
  const DataModel& model = problem.model;
  if (problem.dataset.has_value()) {
    const auto& tuples = problem.dataset->tuples;
    const auto idx =
        static_cast<std::size_t>(uniform01(g) * static_cast<double>(tuples.size()));
    const SampleRow& row = tuples[std::min(idx, tuples.size() - 1)];
    t.s = row.s;
    t.a = row.a;
    t.r = row.r;
    t.s_next = row.s_next;
  } else {
    const int sa = sample_categorical(model.d, g);
    t.s = sa / model.n_actions;
    t.a = sa % model.n_actions;
    const auto& outcomes = model.reward_outcomes[sa];
    if (outcomes.size() == 1) {
      t.r = outcomes.front().first;
    } else {
      double u = uniform01(g);
      t.r = outcomes.back().first;
      for (const auto& [value, prob] : outcomes) {
        if (u < prob) {
          t.r = value;
          break;
        }
        u -= prob;
      }
    }
    t.s_next = sample_row(model.trans, sa, g);
  }
  t.a_next = sample_row(probs, t.s_next, g);
  t.s0 = sample_categorical(model.nu, g);
  t.a0 = sample_row(probs, t.s0, g);
  return t;
}

}  // namespace

SampleTuple Problem::draw(const SoftmaxPolicy& policy, Rng& g) const {
  return draw_with_probs(*this, policy.action_probs(), g);
}

TupleSampler::TupleSampler(const Problem& problem, const SoftmaxPolicy& policy)
    : problem_(problem), probs_(policy.action_probs()) {}

SampleTuple TupleSampler::draw(Rng& g) const {
  return draw_with_probs(problem_, probs_, g);
}

GradientTriple Problem::grad_exact(const SoftmaxPolicy& policy, const Vec& zeta,
                                   const Vec& xi) const {
  return grad_exact(derived_for(policy), policy, zeta, xi);
}

GradientTriple Problem::grad_exact(const DerivedMatrices& derived,
                                   const SoftmaxPolicy& policy, const Vec& zeta,
                                   const Vec& xi) const {
  GradientTriple g;
  g.g_theta = grad_theta_exact(features, model, policy, zeta, xi, gamma());
  g.g_zeta = grad_zeta(derived, zeta, xi, lambda_w);
  g.g_xi = grad_xi(derived, zeta, xi, lambda_Q, gamma());
  return g;
}

double Problem::loss(const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi) const {
  return loss_value(derived_for(policy), zeta, xi, lambda_w, lambda_Q, gamma());
}

ClosedFormSaddle Problem::saddle(const SoftmaxPolicy& policy) const {
  return closed_form_saddle(derived_for(policy), lambda_w, lambda_Q, gamma());
}

Vec Problem::surrogate_policy_grad(const SoftmaxPolicy& policy) const {
  const ClosedFormSaddle s = saddle(policy);
  return grad_theta_exact(features, model, policy, s.zeta, s.xi, gamma());
}

Problem::JointEnvelope Problem::joint_envelope(const SoftmaxPolicy& policy,
                                               const Vec& zeta) const {
  const DerivedMatrices d = derived_for(policy);
  const Vec br = best_response_xi(d, zeta, lambda_Q, gamma());
  JointEnvelope env;
  env.projection_active = br.norm() > xi_radius();
  const Vec xi = env.projection_active ? project_ball(br, xi_radius()) : br;
  env.value = loss_value(d, zeta, xi, lambda_w, lambda_Q, gamma());
  env.g_zeta = grad_zeta(d, zeta, xi, lambda_w);
  env.g_theta = grad_theta_exact(features, model, policy, zeta, xi, gamma());
  return env;
}

namespace {

Problem finish_problem(TabularMdp mdp, BehaviorDistribution behavior, FeatureMaps features,
                       DataModel model, std::optional<OfflineDataset> dataset,
                       double lambda_w, double lambda_Q, BallRegime regime,
                       const ProblemOptions& options) {
  Problem p;
  p.mdp = std::move(mdp);
  p.behavior = std::move(behavior);
  p.features = std::move(features);
  p.model = std::move(model);
  p.dataset = std::move(dataset);
  p.lambda_w = lambda_w;
  p.lambda_Q = lambda_Q;
  p.regime = regime;
  const SoftmaxPolicy anchor = SoftmaxPolicy::uniform(p.mdp.n_states, p.mdp.n_actions);
  p.constants = build_constants(p.features, p.model, lambda_w, lambda_Q, p.mdp.gamma, regime,
                                std::span<const SoftmaxPolicy>(&anchor, 1),
                                options.probe_policies, options.probe_seed);
  const DerivedMatrices base = build_derived(p.features, p.model, anchor, p.mdp.gamma);
  p.K_w = base.K_w;
  p.K_Q = base.K_Q;
  p.u_R = base.u_R;
  return p;
}

}  // namespace

Problem make_problem(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                     FeatureMaps features, double lambda_w, double lambda_Q,
                     BallRegime regime, int dataset_n, std::uint64_t dataset_seed,
                     const ProblemOptions& options) {
  mdp.validate();
  OfflineDataset data = sample_dataset(mdp, behavior, dataset_n, dataset_seed,
                                       options.reward_mode);
  DataModel model = data_model_from(empirical_model(data), mdp.n_states, mdp.n_actions);
  return finish_problem(mdp, behavior, std::move(features), std::move(model), std::move(data),
                        lambda_w, lambda_Q, regime, options);
}

Problem make_exact_problem(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                           FeatureMaps features, double lambda_w, double lambda_Q,
                           BallRegime regime, const ProblemOptions& options) {
  mdp.validate();
  DataModel model = exact_model(mdp, behavior, options.reward_mode);
  return finish_problem(mdp, behavior, std::move(features), std::move(model), std::nullopt,
                        lambda_w, lambda_Q, regime, options);
}

}  // namespace opsaddle
