#pragma once

#include "sgasmix/rng.hpp"

namespace sgasmix {

// Totally right-skewed positive stable law with stability index a = alpha/2
// and the scale fixed by the Laplace transform E[exp(-s P)] = exp(-s^{a}).
// Equivalently S(alpha/2, (cos(pi alpha/4))^{2/alpha}, 1, 0): the mixing law
// that turns a Gaussian kernel into the sub-Gaussian alpha-stable family.
class PositiveStableLaw {
 public:
  static constexpr double kAlphaMin = 0.02;
  static constexpr double kAlphaMax = 1.999;

  explicit PositiveStableLaw(double alpha);

  double alpha() const { return alpha_; }
  double index() const { return a_; }   // a = alpha/2
  double gamma() const { return gamma_; }

  // density of P; exactly the Levy closed form at alpha == 1
  double pdf(double p) const;

  // one draw via the Kanter construction (angular variable + exponential)
  double sample(Rng& rng) const;

  // log of Zolotarev's angular function A(u), u in (0, pi); increasing
  double log_a(double u) const;

  // density is treated as zero outside [support_lo, support_hi]; the
  // cutoffs depend on alpha and clip less than ~1e-11 of the mass
  double support_lo() const { return p_lo_; }
  double support_hi() const { return p_hi_; }

 private:
  double zolotarev_integral(double p) const;

  double alpha_, a_, r_, gamma_;
  double log_a_min_;  // limit of log_a at u -> 0+
  double p_lo_, p_hi_;
};

}  // namespace sgasmix
