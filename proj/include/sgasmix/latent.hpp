#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sgasmix/rng.hpp"
#include "sgasmix/sgas.hpp"

namespace sgasmix {

// One CM group: member indices and the transformed rows
// calY_i = (y_i - mu_j) / sqrt(E_i) with fresh unit-exponential E_i.
struct GroupData {
  std::vector<int> members;
  Eigen::MatrixXd caly;  // n_j x d

  int size() const { return static_cast<int>(members.size()); }
};

// hard assignment by responsibility argmax; ties go to the lowest index
std::vector<int> assign_groups(const Eigen::MatrixXd& e1);

// prior draw of V = sqrt(E/P) ~ Weibull(shape alpha, scale 1)
double simulate_weibull_v(double alpha, Rng& rng);

// sup distance between the empirical cdf of draws and Weibull(shape, 1)
double weibull_sup_distance(std::vector<double> draws, double shape);

// the rejection bound d^{d/2} q^{-d/2} e^{-d/2} / ((2 pi)^{d/2} |Sigma|^{1/2})
double rejection_bound(int d, double q, double log_det);

// posterior draw of V given one transformed row: density proportional to
// v^{d+alpha-1} exp(-q v^2/2 - v^alpha), q = row' Sigma^-1 row; rejection
// with a Weibull(alpha, 1) proposal. Throws numerical_error after the
// retry budget (1e5) and input_error for q <= 0.
double sample_v_posterior(const Eigen::VectorXd& caly_row, double alpha,
                          const ComponentKernel& kernel, Rng& rng);
double sample_v_posterior(const Eigen::VectorXd& caly_row, double alpha,
                          const Eigen::MatrixXd& sigma, Rng& rng);

// closed-form maximizer of the group likelihood in Sigma:
// (1/n_j) sum v_i^2 calY_i calY_i'; requires n_j >= d+1 and full rank
Eigen::MatrixXd update_sigma(const GroupData& group, const std::vector<double>& v);

// root of h(alpha) = n/alpha + sum log v - sum v^alpha log v on (0.02, 1.98)
// by safeguarded Newton/bisection; |h| <= 1e-8 n at the result. Throws
// bracket_error when h has no sign change on the interval.
double update_alpha(const std::vector<double>& v, bool* clamped = nullptr);

// group likelihood used by the CM steps (up to the constant):
// n log a - n/2 log|S| + a sum log v - sum v^a - 1/2 sum v^2 y'S^-1 y
double group_loglik(const GroupData& group, const std::vector<double>& v,
                    double alpha, const Eigen::MatrixXd& sigma);

}  // namespace sgasmix
