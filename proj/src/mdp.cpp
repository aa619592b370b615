#include "opsaddle/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "opsaddle/errors.hpp"

namespace opsaddle {

namespace {
constexpr double kDistTol = 1e-12;
}

void TabularMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw InvalidInput("mdp: empty state or action space");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("mdp: gamma must lie in [0,1)");
  if (transition.rows() != n_sa() || transition.cols() != n_states)
    throw InvalidInput("mdp: transition shape mismatch");
  if (reward_mean.rows() != n_states || reward_mean.cols() != n_actions)
    throw InvalidInput("mdp: reward shape mismatch");
  if (nu0.size() != n_states) throw InvalidInput("mdp: nu0 length mismatch");
  for (int i = 0; i < transition.rows(); ++i) {
    if (transition.row(i).minCoeff() < 0.0)
      throw InvalidInput("mdp: negative transition probability");
    if (std::abs(transition.row(i).sum() - 1.0) > kDistTol)
      throw InvalidInput("mdp: transition row does not sum to 1");
  }
  if (nu0.minCoeff() < 0.0 || std::abs(nu0.sum() - 1.0) > kDistTol)
    throw InvalidInput("mdp: nu0 is not a distribution");
  if (reward_mean.minCoeff() < 0.0 || reward_mean.maxCoeff() > 1.0)
    throw InvalidInput("mdp: rewards must lie in [0,1]");
}

TabularMdp random_mdp(int n_states, int n_actions, double gamma, Rng& g) {
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.transition = Mat(n_states * n_actions, n_states);
  for (int i = 0; i < mdp.transition.rows(); ++i) {
    Vec row(n_states);
    for (int s = 0; s < n_states; ++s) row[s] = -std::log(1.0 - uniform01(g));
    mdp.transition.row(i) = (row / row.sum()).transpose();
  }
  mdp.reward_mean = Mat(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) mdp.reward_mean(s, a) = uniform01(g);
  Vec nu(n_states);
  for (int s = 0; s < n_states; ++s) nu[s] = -std::log(1.0 - uniform01(g));
  mdp.nu0 = nu / nu.sum();
  mdp.validate();
  return mdp;
}

Mat SoftmaxPolicy::action_probs() const {
  Mat probs(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    const auto logits = theta.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions);
    const double shift = logits.maxCoeff();
    Vec ex = (logits.array() - shift).exp();
    probs.row(s) = (ex / ex.sum()).transpose();
  }
  return probs;
}

Vec SoftmaxPolicy::prob_row(int s) const {
  const auto logits = theta.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions);
  const double shift = logits.maxCoeff();
  Vec ex = (logits.array() - shift).exp();
  return ex / ex.sum();
}

Vec SoftmaxPolicy::log_policy_grad(int s, int a) const {
  Vec grad = Vec::Zero(theta.size());
  const Vec pi_s = prob_row(s);
  grad.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions) = -pi_s;
  grad[static_cast<Eigen::Index>(s) * n_actions + a] += 1.0;
  return grad;
}

Mat SoftmaxPolicy::log_policy_hessian(int s, int /*a*/) const {
  // hess log pi(a|s) = -(diag(pi_s) - pi_s pi_s^T) on the s-block, independent of a.
  Mat hess = Mat::Zero(theta.size(), theta.size());
  const Vec pi_s = prob_row(s);
  Mat block = -(Mat(pi_s.asDiagonal()) - pi_s * pi_s.transpose());
  hess.block(static_cast<Eigen::Index>(s) * n_actions,
             static_cast<Eigen::Index>(s) * n_actions, n_actions, n_actions) = block;
  return hess;
}

SoftmaxPolicy SoftmaxPolicy::uniform(int n_states, int n_actions) {
  return SoftmaxPolicy{n_states, n_actions, Vec::Zero(static_cast<Eigen::Index>(n_states) * n_actions)};
}

SoftmaxPolicy SoftmaxPolicy::random(int n_states, int n_actions, double scale, Rng& g) {
  Vec theta(static_cast<Eigen::Index>(n_states) * n_actions);
  for (int i = 0; i < theta.size(); ++i) theta[i] = scale * (2.0 * uniform01(g) - 1.0);
  return SoftmaxPolicy{n_states, n_actions, std::move(theta)};
}

void BehaviorDistribution::validate() const {
  if (mu.size() == 0) throw InvalidInput("behavior: empty");
  if (mu.minCoeff() <= 0.0)
    throw InvalidInput("behavior support must cover every state-action pair");
  if (std::abs(mu.sum() - 1.0) > kDistTol)
    throw InvalidInput("behavior distribution does not sum to 1");
}

BehaviorDistribution uniform_behavior(int n_states, int n_actions) {
  const Eigen::Index n = static_cast<Eigen::Index>(n_states) * n_actions;
  return BehaviorDistribution{Vec::Constant(n, 1.0 / static_cast<double>(n))};
}

Vec OfflineDataset::counts() const {
  Vec c = Vec::Zero(static_cast<Eigen::Index>(n_states) * n_actions);
  for (const auto& t : tuples) c[static_cast<Eigen::Index>(t.s) * n_actions + t.a] += 1.0;
  return c;
}

void OfflineDataset::validate_against(const TabularMdp& mdp, RewardMode mode) const {
  if (n_states != mdp.n_states || n_actions != mdp.n_actions)
    throw InvalidInput("dataset: dimension mismatch with the mdp");
  for (const auto& t : tuples) {
    if (t.s < 0 || t.s >= n_states || t.a < 0 || t.a >= n_actions || t.s_next < 0 ||
        t.s_next >= n_states)
      throw InvalidInput("dataset: tuple index out of range");
    if (!(mdp.transition(mdp.sa(t.s, t.a), t.s_next) > 0.0))
      throw InvalidInput("dataset: tuple transition has zero probability");
    if (mode == RewardMode::deterministic) {
      if (std::abs(t.r - mdp.reward_mean(t.s, t.a)) > 1e-12)
        throw InvalidInput("dataset: reward outside the deterministic support");
    } else if (t.r != 0.0 && t.r != 1.0) {
      throw InvalidInput("dataset: reward outside the bernoulli support");
    }
  }
}

Vec lift_to_state_action(const SoftmaxPolicy& policy, const Vec& state_dist) {
  const Mat probs = policy.action_probs();
  Vec out(static_cast<Eigen::Index>(policy.n_states) * policy.n_actions);
  for (int s = 0; s < policy.n_states; ++s)
    for (int a = 0; a < policy.n_actions; ++a)
      out[static_cast<Eigen::Index>(s) * policy.n_actions + a] = state_dist[s] * probs(s, a);
  return out;
}

Mat policy_transition_from(const Mat& trans_sa_to_s, const SoftmaxPolicy& policy) {
  const int n_sa = static_cast<int>(trans_sa_to_s.rows());
  const int n_states = static_cast<int>(trans_sa_to_s.cols());
  const int n_actions = policy.n_actions;
  const Mat probs = policy.action_probs();
  Mat p(n_sa, n_sa);
  for (int i = 0; i < n_sa; ++i)
    for (int s2 = 0; s2 < n_states; ++s2)
      for (int a2 = 0; a2 < n_actions; ++a2)
        p(i, s2 * n_actions + a2) = trans_sa_to_s(i, s2) * probs(s2, a2);
  return p;
}

Mat policy_transition(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
  return policy_transition_from(mdp.transition, policy);
}

Vec occupancy(const TabularMdp& mdp, const SoftmaxPolicy& policy, const Vec& init_sa) {
  if (init_sa.size() != mdp.n_sa()) throw InvalidInput("occupancy: init length mismatch");
  if (init_sa.minCoeff() < -kDistTol || std::abs(init_sa.sum() - 1.0) > 1e-10)
    throw InvalidInput("occupancy: init is not a distribution");
  const Mat p_pi = policy_transition(mdp, policy);
  const Mat system = Mat::Identity(mdp.n_sa(), mdp.n_sa()) - mdp.gamma * p_pi.transpose();
  Eigen::PartialPivLU<Mat> lu(system);
  Vec d = lu.solve((1.0 - mdp.gamma) * init_sa);
  const double residual = (system * d - (1.0 - mdp.gamma) * init_sa).norm();
  if (!(residual < 1e-9)) throw NumericalError("occupancy: linear solve failed");
  // Clamp solver dust; true occupancies are nonnegative for gamma < 1.
  d = d.cwiseMax(0.0);
  return d;
}

Mat q_function(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
  const Mat p_pi = policy_transition(mdp, policy);
  const Mat system = Mat::Identity(mdp.n_sa(), mdp.n_sa()) - mdp.gamma * p_pi;
  Vec r(mdp.n_sa());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) r[mdp.sa(s, a)] = mdp.reward_mean(s, a);
  Vec q = Eigen::PartialPivLU<Mat>(system).solve(r);
  if (!((system * q - r).lpNorm<Eigen::Infinity>() < 1e-9))
    throw NumericalError("q_function: linear solve failed");
  Mat out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) out(s, a) = q[mdp.sa(s, a)];
  return out;
}

double expected_return(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
  const Mat q = q_function(mdp, policy);
  const Mat probs = policy.action_probs();
  double j = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) j += mdp.nu0[s] * probs(s, a) * q(s, a);
  return j;
}

Vec policy_gradient(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
  const Vec init = lift_to_state_action(policy, mdp.nu0);
  const Vec d = occupancy(mdp, policy, init);
  const Mat q = q_function(mdp, policy);
  Vec grad = Vec::Zero(policy.theta.size());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double weight = d[mdp.sa(s, a)] * q(s, a);
      if (weight == 0.0) continue;
      grad += weight * policy.log_policy_grad(s, a);
    }
  return grad / (1.0 - mdp.gamma);
}

PolicyConstants policy_constants() { return {std::sqrt(2.0), 1.0, 2.0}; }

OfflineDataset sample_dataset(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                              int n, std::uint64_t seed, RewardMode mode) {
  if (n < 1) throw InvalidInput("sample_dataset: n must be >= 1");
  behavior.validate();
  if (behavior.mu.size() != mdp.n_sa()) throw InvalidInput("sample_dataset: behavior size mismatch");
  Rng g(seed);
  OfflineDataset data;
  data.n_states = mdp.n_states;
  data.n_actions = mdp.n_actions;
  data.tuples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int sa = sample_categorical(behavior.mu, g);
    const int s = sa / mdp.n_actions;
    const int a = sa % mdp.n_actions;
    double r = mdp.reward_mean(s, a);
    if (mode == RewardMode::bernoulli) r = uniform01(g) < r ? 1.0 : 0.0;
    const int s_next = sample_categorical(mdp.transition.row(sa).transpose(), g);
    data.tuples.push_back({s, a, r, s_next});
  }
  return data;
}

Mat EmpiricalModel::sa_transition(const SoftmaxPolicy& policy) const {
  return policy_transition_from(trans, policy);
}

EmpiricalModel empirical_model(const OfflineDataset& dataset) {
  if (dataset.tuples.empty()) throw InvalidInput("empirical_model: empty dataset");
  const int n_states = dataset.n_states;
  const int n_actions = dataset.n_actions;
  const int n_sa = n_states * n_actions;
  EmpiricalModel m;
  m.n = dataset.n();
  m.d = Vec::Zero(n_sa);
  m.nu = Vec::Zero(n_states);
  m.joint_ss = Mat::Zero(n_sa, n_states);
  m.reward = Mat::Zero(n_states, n_actions);
  m.reward_dist.resize(n_sa);
  for (const auto& t : dataset.tuples) {
    const int sa = t.s * n_actions + t.a;
    m.d[sa] += 1.0;
    m.nu[t.s] += 1.0;
    m.joint_ss(sa, t.s_next) += 1.0;
    m.reward(t.s, t.a) += t.r;
    m.reward_dist[sa][t.r] += 1.0;
  }
  m.trans = Mat::Constant(n_sa, n_states, 1.0 / n_states);
  for (int sa = 0; sa < n_sa; ++sa) {
    const double count = m.d[sa];
    if (count > 0.0) {
      m.trans.row(sa) = m.joint_ss.row(sa) / count;
      m.reward(sa / n_actions, sa % n_actions) /= count;
      for (auto& [value, weight] : m.reward_dist[sa]) weight /= count;
    }
  }
  const double n = static_cast<double>(m.n);
  m.d /= n;
  m.nu /= n;
  m.joint_ss /= n;
  return m;
}

double concentrability(const TabularMdp& mdp, const BehaviorDistribution& behavior,
                       std::span<const SoftmaxPolicy> policies) {
  behavior.validate();
  double c = 0.0;
  for (const auto& pi : policies) {
    const Vec d_pi = occupancy(mdp, pi, lift_to_state_action(pi, mdp.nu0));
    const Vec d_pi_mu = occupancy(mdp, pi, behavior.mu);
    for (int i = 0; i < mdp.n_sa(); ++i) {
      c = std::max(c, d_pi[i] / behavior.mu[i]);
      c = std::max(c, d_pi_mu[i] / behavior.mu[i]);
    }
  }
  return c;
}

}  // namespace opsaddle
