#include "opsaddle/lagrangian.hpp"

#include <cmath>

#include "opsaddle/errors.hpp"

namespace opsaddle {

Vec project_ball(const Vec& x, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("project_ball: radius must be positive");
  const double n = x.norm();
  if (n <= radius) return x;
  return x * (radius / n);
}

void SaddleIterate::project() {
  zeta = project_ball(zeta, z_radius);
  xi = project_ball(xi, xi_radius);
}

void SaddleIterate::check() const {
  if (zeta.norm() > z_radius + 1e-9 || xi.norm() > xi_radius + 1e-9)
    throw NumericalError("saddle iterate escaped its ball constraint");
}

double loss_value(const DerivedMatrices& d, const Vec& zeta, const Vec& xi,
                  double lambda_w, double lambda_Q, double gamma) {
  if (zeta.size() != d.K_w.rows() || xi.size() != d.K_Q.rows())
    throw InvalidInput("loss_value: dimension mismatch");
  return (1.0 - gamma) * d.u_nu.dot(xi) + zeta.dot(d.u_R) - zeta.dot(d.M_pi * xi) +
         0.5 * lambda_Q * xi.dot(d.K_Q * xi) - 0.5 * lambda_w * zeta.dot(d.K_w * zeta);
}

Vec grad_zeta(const DerivedMatrices& d, const Vec& zeta, const Vec& xi, double lambda_w) {
  return d.u_R - d.M_pi * xi - lambda_w * (d.K_w * zeta);
}

Vec grad_xi(const DerivedMatrices& d, const Vec& zeta, const Vec& xi, double lambda_Q,
            double gamma) {
  return (1.0 - gamma) * d.u_nu - d.M_pi.transpose() * zeta + lambda_Q * (d.K_Q * xi);
}

Vec grad_theta_exact(const FeatureMaps& features, const DataModel& model,
                     const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi,
                     double gamma) {
  const int S = model.n_states;
  const int A = model.n_actions;
  const Mat probs = policy.action_probs();
  const Vec w_values = features.phi_w * zeta;  // S*A
  const Vec q_values = features.phi_q * xi;    // S*A

  // inflow(s') = sum_{s,a} d(s,a) w(s,a) P(s'|s,a)
  const Vec inflow = model.trans.transpose() * model.d.cwiseProduct(w_values);

  Vec grad = Vec::Zero(policy.theta.size());
  for (int s = 0; s < S; ++s) {
    Vec coeff(A);
    for (int a = 0; a < A; ++a) {
      const double q = q_values[s * A + a];
      coeff[a] = probs(s, a) * q * ((1.0 - gamma) * model.nu[s] + gamma * inflow[s]);
    }
    // sum_a coeff_a * (e_a - pi(.|s)) done blockwise
    grad.segment(static_cast<Eigen::Index>(s) * A, A) =
        coeff - coeff.sum() * probs.row(s).transpose();
  }
  return grad;
}

GradientTriple grad_sample(const SampleTuple& t, const FeatureMaps& features,
                           const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi,
                           double lambda_w, double lambda_Q, double gamma) {
  const int A = policy.n_actions;
  const int sa = t.s * A + t.a;
  const int sa_next = t.s_next * A + t.a_next;
  const int sa0 = t.s0 * A + t.a0;

  const Vec fw = features.phi_w.row(sa).transpose();
  const Vec fq = features.phi_q.row(sa).transpose();
  const Vec fq_next = features.phi_q.row(sa_next).transpose();
  const Vec fq0 = features.phi_q.row(sa0).transpose();

  const double w = fw.dot(zeta);
  const double q = fq.dot(xi);
  const double q_next = fq_next.dot(xi);
  const double q0 = fq0.dot(xi);

  GradientTriple g;
  g.g_theta = (1.0 - gamma) * q0 * policy.log_policy_grad(t.s0, t.a0) +
              gamma * w * q_next * policy.log_policy_grad(t.s_next, t.a_next);
  g.g_zeta = (t.r + gamma * q_next - q) * fw - lambda_w * w * fw;
  g.g_xi = (1.0 - gamma) * fq0 + w * (gamma * fq_next - fq) + lambda_Q * q * fq;
  return g;
}

GradientTriple grad_batch(std::span<const SampleTuple> batch, const FeatureMaps& features,
                          const SoftmaxPolicy& policy, const Vec& zeta, const Vec& xi,
                          double lambda_w, double lambda_Q, double gamma) {
  if (batch.empty()) throw InvalidInput("grad_batch: empty batch");
  GradientTriple sum;
  sum.g_theta = Vec::Zero(policy.theta.size());
  sum.g_zeta = Vec::Zero(zeta.size());
  sum.g_xi = Vec::Zero(xi.size());
  for (const auto& t : batch) {
    const GradientTriple g = grad_sample(t, features, policy, zeta, xi, lambda_w, lambda_Q, gamma);
    sum.g_theta += g.g_theta;
    sum.g_zeta += g.g_zeta;
    sum.g_xi += g.g_xi;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  sum.g_theta *= inv;
  sum.g_zeta *= inv;
  sum.g_xi *= inv;
  return sum;
}

Vec grad_sample_zeta(const SampleTuple& t, const FeatureMaps& features, int n_actions,
                     const Vec& zeta, const Vec& xi, double lambda_w, double gamma) {
  const auto fw = features.phi_w.row(t.s * n_actions + t.a);
  const auto fq = features.phi_q.row(t.s * n_actions + t.a);
  const auto fq_next = features.phi_q.row(t.s_next * n_actions + t.a_next);
  const double w = fw.dot(zeta);
  const double q = fq.dot(xi);
  const double q_next = fq_next.dot(xi);
  return (t.r + gamma * q_next - q - lambda_w * w) * fw.transpose();
}

Vec grad_sample_xi(const SampleTuple& t, const FeatureMaps& features, int n_actions,
                   const Vec& zeta, const Vec& xi, double lambda_Q, double gamma) {
  const auto fw = features.phi_w.row(t.s * n_actions + t.a);
  const auto fq = features.phi_q.row(t.s * n_actions + t.a);
  const auto fq_next = features.phi_q.row(t.s_next * n_actions + t.a_next);
  const auto fq0 = features.phi_q.row(t.s0 * n_actions + t.a0);
  const double w = fw.dot(zeta);
  const double q = fq.dot(xi);
  Vec out = (1.0 - gamma) * fq0.transpose();
  out += w * (gamma * fq_next.transpose() - fq.transpose());
  out += lambda_Q * q * fq.transpose();
  return out;
}

void add_grad_sample_theta(const SampleTuple& t, const FeatureMaps& features,
                           const Mat& action_probs, const Vec& zeta, const Vec& xi,
                           double gamma, Vec& out) {
  const int A = static_cast<int>(action_probs.cols());
  const auto fw = features.phi_w.row(t.s * A + t.a);
  const auto fq_next = features.phi_q.row(t.s_next * A + t.a_next);
  const auto fq0 = features.phi_q.row(t.s0 * A + t.a0);
  const double c0 = (1.0 - gamma) * fq0.dot(xi);
  const double c1 = gamma * fw.dot(zeta) * fq_next.dot(xi);
  out.segment(static_cast<Eigen::Index>(t.s0) * A, A) -=
      c0 * action_probs.row(t.s0).transpose();
  out[static_cast<Eigen::Index>(t.s0) * A + t.a0] += c0;
  out.segment(static_cast<Eigen::Index>(t.s_next) * A, A) -=
      c1 * action_probs.row(t.s_next).transpose();
  out[static_cast<Eigen::Index>(t.s_next) * A + t.a_next] += c1;
}

Vec best_response_xi(const DerivedMatrices& d, const Vec& zeta, double lambda_Q,
                     double gamma) {
  Eigen::LDLT<Mat> solver(d.K_Q);
  if (solver.info() != Eigen::Success)
    throw NumericalError("best_response_xi: K_Q factorization failed");
  return solver.solve(d.M_pi.transpose() * zeta - (1.0 - gamma) * d.u_nu) / lambda_Q;
}

Vec best_response_zeta(const DerivedMatrices& d, const Vec& xi, double lambda_w) {
  Eigen::LDLT<Mat> solver(d.K_w);
  if (solver.info() != Eigen::Success)
    throw NumericalError("best_response_zeta: K_w factorization failed");
  return solver.solve(d.u_R - d.M_pi * xi) / lambda_w;
}

ClosedFormSaddle closed_form_saddle(const DerivedMatrices& d, double lambda_w,
                                    double lambda_Q, double gamma) {
  const double ll = lambda_w * lambda_Q;
  Eigen::LDLT<Mat> kq(d.K_Q);
  Eigen::LDLT<Mat> kw(d.K_w);
  if (kq.info() != Eigen::Success || kw.info() != Eigen::Success)
    throw NumericalError("closed_form_saddle: covariance factorization failed");

  // Right-hand sides carry +M K_Q^{-1} u_nu for zeta and -lambda_w u_nu for
  // xi: these are the signs the stationarity conditions of the quadratic
  // actually produce (substituting the inner best response and
  // differentiating), and the only ones under which the output zeroes both
  // gradients.
  const Mat kq_inv_mt = kq.solve(d.M_pi.transpose());  // K_Q^{-1} M^T
  const Mat a_zeta = ll * d.K_w + d.M_pi * kq_inv_mt;
  const Vec b_zeta = (1.0 - gamma) * (d.M_pi * kq.solve(d.u_nu)) + lambda_Q * d.u_R;

  const Mat kw_inv_m = kw.solve(d.M_pi);  // K_w^{-1} M
  const Mat a_xi = ll * d.K_Q + d.M_pi.transpose() * kw_inv_m;
  const Vec b_xi = -(1.0 - gamma) * lambda_w * d.u_nu + d.M_pi.transpose() * kw.solve(d.u_R);

  ClosedFormSaddle out;
  out.zeta = Eigen::LDLT<Mat>(a_zeta).solve(b_zeta);
  out.xi = Eigen::LDLT<Mat>(a_xi).solve(b_xi);
  out.xi_alt = kq.solve(d.M_pi.transpose() * out.zeta - (1.0 - gamma) * d.u_nu) / lambda_Q;
  return out;
}

EnvelopeZeta envelope_zeta(const DerivedMatrices& d, const Vec& zeta, double lambda_w,
                           double lambda_Q, double gamma, double xi_radius) {
  const Vec br = best_response_xi(d, zeta, lambda_Q, gamma);
  EnvelopeZeta env;
  env.projection_active = br.norm() > xi_radius;
  const Vec xi = env.projection_active ? project_ball(br, xi_radius) : br;
  env.value = loss_value(d, zeta, xi, lambda_w, lambda_Q, gamma);
  env.grad = grad_zeta(d, zeta, xi, lambda_w);
  return env;
}

EnvelopeXi envelope_xi(const DerivedMatrices& d, const Vec& xi, double lambda_w,
                       double lambda_Q, double gamma, double zeta_radius) {
  const Vec br = best_response_zeta(d, xi, lambda_w);
  EnvelopeXi env;
  env.projection_active = br.norm() > zeta_radius;
  const Vec zeta = env.projection_active ? project_ball(br, zeta_radius) : br;
  env.value = loss_value(d, zeta, xi, lambda_w, lambda_Q, gamma);
  env.grad = grad_xi(d, zeta, xi, lambda_Q, gamma);
  return env;
}

}  // namespace opsaddle
