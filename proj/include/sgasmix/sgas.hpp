#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sgasmix/rng.hpp"
#include "sgasmix/stable.hpp"

namespace sgasmix {

// One mixture component: tail index, location, shape matrix, weight.
struct SgasComponent {
  double alpha = 1.5;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double w = 1.0;

  int dim() const { return static_cast<int>(mu.size()); }
  void validate() const;  // throws input_error on any violated invariant
};

// Cholesky-backed Mahalanobis machinery; never forms an explicit inverse.
class ComponentKernel {
 public:
  explicit ComponentKernel(const Eigen::MatrixXd& sigma);

  // (x)' Sigma^-1 (x) for a centered vector
  double mahalanobis(const Eigen::VectorXd& centered) const;
  double log_det() const { return log_det_; }
  const Eigen::MatrixXd& chol_lower() const { return lower_; }

 private:
  Eigen::MatrixXd lower_;
  double log_det_;
};

// Frozen quadrature rule for the two half-line scale-mixture integrals
//   I(delta) = int_0^inf u^{-d/2}   f_P(u) exp(-delta/(2u)) du
//   J(delta) = int_0^inf u^{-d/2-1} f_P(u) exp(-delta/(2u)) du
// at a fixed (alpha, d). Built once, then evaluated for a whole batch of
// Mahalanobis distances: nodes come from adaptive Gauss-Kronrod panels on
// the log scale u = e^t, refined under the delta = 0 and delta = delta_max
// integrands simultaneously, and the mass beyond the last node is restored
// from the series tail of f_P.
class ScaleMixtureRule {
 public:
  ScaleMixtureRule(const PositiveStableLaw& law, int d, double delta_max);

  double pdf_integral(double delta) const;  // I(delta)
  double cond_inv_p(double delta) const;    // J(delta)/I(delta)
  void eval(double delta, double* i_out, double* j_out) const;

  int dim() const { return d_; }
  int node_count() const { return static_cast<int>(u_.size()); }

 private:
  int d_;
  double half_d_;
  double u_hi_, tail_i_coef_, tail_j_coef_, tail_si_, tail_sj_;
  std::vector<double> u_;        // nodes e^t, ascending
  std::vector<double> base_i_;   // weight * e^{t(1-d/2)} * f_P(e^t)
  std::vector<double> base_j_;   // weight * e^{-t d/2}   * f_P(e^t)
};

// density of the elliptical scale mixture at y
double sgas_log_pdf(const SgasComponent& comp, const Eigen::VectorXd& y);
double sgas_pdf(const SgasComponent& comp, const Eigen::VectorXd& y);

// E[1/P | y] for one observation with Mahalanobis distance delta
double sgas_cond_inv_p(double alpha, int d, double delta);

// n rows of mu + sqrt(P) L z
Eigen::MatrixXd sample_sgas(const SgasComponent& comp, int n, Rng& rng);

}  // namespace sgasmix
