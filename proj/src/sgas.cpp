#include "sgasmix/sgas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgasmix/errors.hpp"
#include "sgasmix/quadrature.hpp"

namespace sgasmix {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2Pi = 1.83787706640934548356;
}  // namespace

void SgasComponent::validate() const {
  if (!(alpha >= PositiveStableLaw::kAlphaMin && alpha <= PositiveStableLaw::kAlphaMax))
    throw input_error("component alpha outside the admissible range");
  if (!(w >= 0.0 && w <= 1.0)) throw input_error("component weight outside [0,1]");
  if (mu.size() == 0) throw input_error("component has empty location");
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size())
    throw input_error("shape matrix dimensions disagree with location");
  double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw input_error("shape matrix is not symmetric");
  ComponentKernel check(sigma);  // throws if not positive definite
  (void)check;
}

ComponentKernel::ComponentKernel(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw numerical_error("shape matrix is not positive definite");
  lower_ = llt.matrixL();
  log_det_ = 0.0;
  for (int i = 0; i < lower_.rows(); ++i) {
    double l = lower_(i, i);
    if (!(l > 0.0) || !std::isfinite(l))
      throw numerical_error("shape matrix is numerically singular");
    log_det_ += 2.0 * std::log(l);
  }
}

double ComponentKernel::mahalanobis(const Eigen::VectorXd& centered) const {
  Eigen::VectorXd x =
      lower_.triangularView<Eigen::Lower>().solve(centered);
  return x.squaredNorm();
}

ScaleMixtureRule::ScaleMixtureRule(const PositiveStableLaw& law, int d,
                                   double delta_max) {
  if (d < 1) throw input_error("dimension must be positive");
  if (!(delta_max >= 0.0) || !std::isfinite(delta_max))
    throw input_error("delta_max must be finite and non-negative");
  d_ = d;
  half_d_ = 0.5 * d;
  const double a = law.index();

  // f_P evaluator: quadrature density inside the supported range, series
  // tail beyond it (the series is the sharper of the two out there)
  const double tail_c =
      std::exp(std::lgamma(a)) * std::sin(kPi * a) / kPi;  // survival coef
  const double series_c = a * tail_c;                      // density coef
  const double hi_switch = law.support_hi();
  auto fp = [&](double u) {
    return u < hi_switch ? law.pdf(u) : series_c * std::pow(u, -a - 1.0);
  };

  const double t_lo = std::log(law.support_lo());
  const double margin = std::max(12.0, 25.0 / (a + half_d_));
  const double t_hi =
      std::max(std::log(std::max(delta_max, 1.0)) + margin, 14.0);

  // integrand of I(delta) in t-space for the refinement objectives
  auto obj = [&](double t, double fpv, double delta, bool j_kind) {
    double u = std::exp(t);
    double e = delta > 0.0 ? delta / (2.0 * u) : 0.0;
    if (e > 745.0) return 0.0;
    double pw = j_kind ? -t * half_d_ : t * (1.0 - half_d_);
    return fpv * std::exp(pw - e);
  };

  struct Panel {
    double a, b;
    double ts[15], fps[15];
    double err[6], kr[6];
  };
  const double deltas[3] = {0.0, std::min(std::max(1.0, delta_max / 100.0), delta_max),
                            delta_max};
  auto fill = [&](Panel& p) {
    gk15::points(p.a, p.b, p.ts);
    for (int i = 0; i < 15; ++i) p.fps[i] = fp(std::exp(p.ts[i]));
    double h = 0.5 * (p.b - p.a);
    for (int m = 0; m < 6; ++m) {
      double fv[15];
      for (int i = 0; i < 15; ++i)
        fv[i] = obj(p.ts[i], p.fps[i], deltas[m % 3], m >= 3);
      double k, g;
      gk15::sums(fv, h, &k, &g);
      p.kr[m] = k;
      p.err[m] = std::abs(k - g);
    }
  };

  std::vector<Panel> panels;
  {
    double span = t_hi - t_lo;
    int n0 = std::min(80, std::max(8, static_cast<int>(span)));
    for (int i = 0; i < n0; ++i) {
      Panel p;
      p.a = t_lo + span * i / n0;
      p.b = t_lo + span * (i + 1) / n0;
      fill(p);
      panels.push_back(p);
    }
  }
  const int max_panels = 500;
  const double rtol = 3e-9;
  for (;;) {
    double tot[6] = {0, 0, 0, 0, 0, 0}, err[6] = {0, 0, 0, 0, 0, 0};
    for (const auto& p : panels)
      for (int m = 0; m < 6; ++m) {
        tot[m] += p.kr[m];
        err[m] += p.err[m];
      }
    bool ok = true;
    for (int m = 0; m < 6; ++m)
      if (err[m] > rtol * std::max(std::abs(tot[m]), 1e-290)) ok = false;
    if (ok || static_cast<int>(panels.size()) >= max_panels) break;
    std::size_t worst = 0;
    double wval = -1.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      double e = 0.0;
      for (int m = 0; m < 6; ++m)
        e += panels[i].err[m] / std::max(std::abs(tot[m]), 1e-290);
      if (e > wval) {
        wval = e;
        worst = i;
      }
    }
    Panel s = panels[worst];
    double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b)) break;
    Panel l, r;
    l.a = s.a;
    l.b = mid;
    r.a = mid;
    r.b = s.b;
    fill(l);
    fill(r);
    panels[worst] = l;
    panels.push_back(r);
  }

  // flatten to (u, base) arrays sorted by node position
  struct Node {
    double t, bi, bj;
  };
  std::vector<Node> nodes;
  nodes.reserve(panels.size() * 15);
  for (const auto& p : panels) {
    double ws[15];
    gk15::weights(p.a, p.b, ws);
    for (int i = 0; i < 15; ++i) {
      double t = p.ts[i];
      nodes.push_back({t, ws[i] * p.fps[i] * std::exp(t * (1.0 - half_d_)),
                       ws[i] * p.fps[i] * std::exp(-t * half_d_)});
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const Node& x, const Node& y) { return x.t < y.t; });
  u_.resize(nodes.size());
  base_i_.resize(nodes.size());
  base_j_.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    u_[i] = std::exp(nodes[i].t);
    base_i_[i] = nodes[i].bi;
    base_j_[i] = nodes[i].bj;
  }

  // analytic mass beyond the last node from f_P ~ series_c u^{-a-1}
  u_hi_ = std::exp(t_hi);
  tail_si_ = half_d_ + a;
  tail_sj_ = half_d_ + a + 1.0;
  tail_i_coef_ = series_c * std::pow(u_hi_, -tail_si_) / tail_si_;
  tail_j_coef_ = series_c * std::pow(u_hi_, -tail_sj_) / tail_sj_;
}

void ScaleMixtureRule::eval(double delta, double* i_out, double* j_out) const {
  if (!(delta >= 0.0)) throw input_error("negative Mahalanobis distance");
  // skip nodes where exp(-delta/(2u)) underflows; u_ is ascending
  std::size_t first = 0;
  if (delta > 0.0) {
    double u_min = delta / (2.0 * 745.0);
    first = std::lower_bound(u_.begin(), u_.end(), u_min) - u_.begin();
  }
  double si = 0.0, sj = 0.0;
  for (std::size_t k = first; k < u_.size(); ++k) {
    double e = std::exp(-delta / (2.0 * u_[k]));
    si += base_i_[k] * e;
    sj += base_j_[k] * e;
  }
  double damp = std::exp(-delta / (2.0 * u_hi_));
  si += tail_i_coef_ * damp;
  sj += tail_j_coef_ * damp;
  *i_out = si;
  *j_out = sj;
}

double ScaleMixtureRule::pdf_integral(double delta) const {
  double i, j;
  eval(delta, &i, &j);
  return i;
}

double ScaleMixtureRule::cond_inv_p(double delta) const {
  double i, j;
  eval(delta, &i, &j);
  if (!(i > 0.0)) throw numerical_error("scale-mixture integral vanished");
  return j / i;
}

double sgas_log_pdf(const SgasComponent& comp, const Eigen::VectorXd& y) {
  comp.validate();
  if (y.size() != comp.mu.size())
    throw input_error("observation dimension disagrees with component");
  ComponentKernel kernel(comp.sigma);
  double delta = kernel.mahalanobis(y - comp.mu);
  PositiveStableLaw law(comp.alpha);
  ScaleMixtureRule rule(law, comp.dim(), delta);
  double i = rule.pdf_integral(delta);
  return -0.5 * comp.dim() * kLog2Pi - 0.5 * kernel.log_det() + std::log(i);
}

double sgas_pdf(const SgasComponent& comp, const Eigen::VectorXd& y) {
  return std::exp(sgas_log_pdf(comp, y));
}

double sgas_cond_inv_p(double alpha, int d, double delta) {
  PositiveStableLaw law(alpha);
  ScaleMixtureRule rule(law, d, delta);
  return rule.cond_inv_p(delta);
}

Eigen::MatrixXd sample_sgas(const SgasComponent& comp, int n, Rng& rng) {
  comp.validate();
  if (n < 0) throw input_error("sample size must be non-negative");
  ComponentKernel kernel(comp.sigma);
  PositiveStableLaw law(comp.alpha);
  const int d = comp.dim();
  Eigen::MatrixXd out(n, d);
  Eigen::VectorXd z(d);
  for (int i = 0; i < n; ++i) {
    double p = law.sample(rng);
    for (int k = 0; k < d; ++k) z(k) = rng.normal();
    out.row(i) =
        (comp.mu + std::sqrt(p) * (kernel.chol_lower() * z)).transpose();
  }
  return out;
}

}  // namespace sgasmix
