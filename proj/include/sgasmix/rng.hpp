#pragma once

#include <cmath>
#include <cstdint>

namespace sgasmix {

// 64-bit finalizer (splitmix64 style); used to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic, platform-independent generator (splitmix64 stream).
// Substreams keyed by (seed, a, b) decouple draws from loop order and
// thread scheduling: every (iteration, observation) pair gets its own
// stream, so results do not depend on the worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    s = mix64(s ^ mix64(a ^ 0xbb67ae8584caa73bULL));
    s = mix64(s ^ mix64(b ^ 0x3c6ef372fe94f82bULL));
    Rng r(0);
    r.state_ = s;
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on [0,1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1)
  double uniform_pos() {
    for (;;) {
      double u = uniform();
      if (u > 0.0) return u;
    }
  }

  // standard exponential
  double exponential() { return -std::log1p(-uniform()); }

  // standard normal, Box-Muller pair with one value cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  // Weibull(shape k, scale 1) via the exponential transform E^{1/k}
  double weibull(double shape) { return std::pow(exponential(), 1.0 / shape); }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sgasmix
