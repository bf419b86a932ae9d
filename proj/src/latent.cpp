#include "sgasmix/latent.hpp"

#include <algorithm>
#include <cmath>

#include "sgasmix/errors.hpp"

namespace sgasmix {

namespace {
constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kAlphaLo = 0.02;
constexpr double kAlphaHi = 1.98;
}  // namespace

std::vector<int> assign_groups(const Eigen::MatrixXd& e1) {
  std::vector<int> labels(e1.rows());
  for (int i = 0; i < e1.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < e1.cols(); ++j)
      if (e1(i, j) > e1(i, best)) best = j;
    labels[i] = best;
  }
  return labels;
}

double simulate_weibull_v(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw input_error("weibull shape must be positive");
  return rng.weibull(alpha);
}

double weibull_sup_distance(std::vector<double> draws, double shape) {
  if (draws.empty()) throw input_error("empty sample");
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    double f = -std::expm1(-std::pow(draws[i], shape));
    sup = std::max(sup, std::max(std::abs((i + 1) / n - f), std::abs(i / n - f)));
  }
  return sup;
}

double rejection_bound(int d, double q, double log_det) {
  return std::exp(0.5 * d * (std::log(static_cast<double>(d)) - std::log(q) - 1.0) -
                  0.5 * d * kLog2Pi - 0.5 * log_det);
}

double sample_v_posterior(const Eigen::VectorXd& caly_row, double alpha,
                          const ComponentKernel& kernel, Rng& rng) {
  const int d = static_cast<int>(caly_row.size());
  const double q = kernel.mahalanobis(caly_row);
  if (!(q > 0.0)) throw input_error("degenerate transformed row: q <= 0");
  const double log_norm = -0.5 * d * kLog2Pi - 0.5 * kernel.log_det();
  const double log_b =
      0.5 * d * (std::log(static_cast<double>(d)) - std::log(q) - 1.0) + log_norm;
  const long budget = 100000;
  for (long it = 0; it < budget; ++it) {
    double v = rng.weibull(alpha);          // step 1: proposal draw
    double u = rng.uniform();               // step 2: u ~ U(0, b), scaled form
    // step 3: accept when u * b <= v^d exp(-q v^2 / 2) * norm
    double log_lik = d * std::log(v) - 0.5 * q * v * v + log_norm;
    if (std::log(u) + log_b <= log_lik) return v;
  }
  throw numerical_error("posterior v sampler exhausted its retry budget");
}

double sample_v_posterior(const Eigen::VectorXd& caly_row, double alpha,
                          const Eigen::MatrixXd& sigma, Rng& rng) {
  ComponentKernel kernel(sigma);
  return sample_v_posterior(caly_row, alpha, kernel, rng);
}

Eigen::MatrixXd update_sigma(const GroupData& group, const std::vector<double>& v) {
  const int n = group.size();
  const int d = static_cast<int>(group.caly.cols());
  if (static_cast<int>(v.size()) != n)
    throw input_error("latent vector length disagrees with group size");
  if (n < d + 1) throw numerical_error("group too small for a covariance update");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = group.caly.row(i).transpose() * v[i];
    s.noalias() += row * row.transpose();
  }
  s /= static_cast<double>(n);
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw numerical_error("covariance update is rank-deficient");
  for (int i = 0; i < d; ++i)
    if (!(llt.matrixL()(i, i) > 1e-154))
      throw numerical_error("covariance update is rank-deficient");
  return s;
}

namespace {
double score_h(const std::vector<double>& v, double alpha, double sum_log) {
  double s = static_cast<double>(v.size()) / alpha + sum_log;
  for (double x : v) s -= std::pow(x, alpha) * std::log(x);
  return s;
}

double score_hprime(const std::vector<double>& v, double alpha) {
  double s = -static_cast<double>(v.size()) / (alpha * alpha);
  for (double x : v) {
    double lx = std::log(x);
    s -= std::pow(x, alpha) * lx * lx;
  }
  return s;
}
}  // namespace

double update_alpha(const std::vector<double>& v, bool* clamped) {
  if (v.size() < 2) throw input_error("need at least two latent values");
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw input_error("latent values must be positive");
  const double n = static_cast<double>(v.size());
  double sum_log = 0.0;
  for (double x : v) sum_log += std::log(x);

  double lo = kAlphaLo, hi = kAlphaHi;
  double h_lo = score_h(v, lo, sum_log), h_hi = score_h(v, hi, sum_log);
  if (!(h_lo > 0.0 && h_hi < 0.0))
    throw bracket_error("score h(alpha) has no sign change on (0.02, 1.98)");

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double h = score_h(v, x, sum_log);
    if (std::abs(h) <= 1e-8 * n) break;
    (h > 0.0 ? lo : hi) = x;
    double step = h / score_hprime(v, x);
    double cand = x - step;
    x = (cand > lo && cand < hi) ? cand : 0.5 * (lo + hi);
    if (hi - lo < 1e-14) break;
  }
  if (clamped) *clamped = (x - kAlphaLo < 1e-6) || (kAlphaHi - x < 1e-6);
  return x;
}

double group_loglik(const GroupData& group, const std::vector<double>& v,
                    double alpha, const Eigen::MatrixXd& sigma) {
  const int n = group.size();
  ComponentKernel kernel(sigma);
  double s = n * std::log(alpha) - 0.5 * n * kernel.log_det();
  for (int i = 0; i < n; ++i) {
    double lv = std::log(v[i]);
    s += alpha * lv - std::pow(v[i], alpha) -
         0.5 * v[i] * v[i] * kernel.mahalanobis(group.caly.row(i).transpose());
  }
  return s;
}

}  // namespace sgasmix
