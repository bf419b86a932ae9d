#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace sgasmix {

// 15-point Kronrod rule with embedded 7-point Gauss (classic QUADPACK pair).
namespace gk15 {

inline constexpr double xgk[8] = {
    0.99145537112081263920685469752632851664204433837038,
    0.94910791234275852452618968404785126240077093767062,
    0.86486442335976907278971278864092620121097230707409,
    0.74153118559939443986386477328078840707414764714139,
    0.58608723546769113029414483825872959843678075060436,
    0.40584515137739716690660641207696146334738201409937,
    0.20778495500789846760068940377324491347978440714517,
    0.0};

inline constexpr double wgk[8] = {
    0.02293532201052922496373200805896959199356081127575,
    0.06309209262997855329070066318920428666507115721155,
    0.10479001032225018383987632254151801744375665421383,
    0.14065325971552591874518959051023792039988975724800,
    0.16900472663926790282658342659855028410624490030294,
    0.19035057806478540991325640242101368282607807545536,
    0.20443294007529889241416199923464908471651760418072,
    0.20948214108472782801299917489171426369776208022370};

inline constexpr double wg[4] = {
    0.12948496616886969327061143267908201832858740225995,
    0.27970539148927666790146777142377958248692506522659,
    0.38183005050511894495036977548897513387836508353386,
    0.41795918367346938775510204081632653061224489795918};

// abscissae of one panel [a,b] in evaluation order (center last)
inline void points(double a, double b, double* xs) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int k = 0; k < 7; ++k) {
    xs[2 * k] = c - h * xgk[k];
    xs[2 * k + 1] = c + h * xgk[k];
  }
  xs[14] = c;
}

// Kronrod and Gauss sums from the 15 node values laid out as points() does.
inline void sums(const double* fv, double h, double* kronrod, double* gauss) {
  double sk = wgk[7] * fv[14], sg = wg[3] * fv[14];
  for (int k = 0; k < 7; ++k) {
    double pair = fv[2 * k] + fv[2 * k + 1];
    sk += wgk[k] * pair;
    if (k % 2 == 1) sg += wg[(k - 1) / 2] * pair;
  }
  *kronrod = h * sk;
  *gauss = h * sg;
}

// Kronrod weights of one panel, same layout as points().
inline void weights(double a, double b, double* ws) {
  const double h = 0.5 * (b - a);
  for (int k = 0; k < 7; ++k) {
    ws[2 * k] = h * wgk[k];
    ws[2 * k + 1] = h * wgk[k];
  }
  ws[14] = h * wgk[7];
}

}  // namespace gk15

template <class F>
std::pair<double, double> gk15_eval(F&& f, double a, double b) {
  double xs[15], fv[15];
  gk15::points(a, b, xs);
  for (int i = 0; i < 15; ++i) fv[i] = f(xs[i]);
  double k, g;
  gk15::sums(fv, 0.5 * (b - a), &k, &g);
  return {k, std::abs(k - g)};
}

// Globally adaptive bisection driven by the Kronrod-Gauss error estimate.
template <class F>
double adaptive_gk(F&& f, double a, double b, double rtol = 1e-10,
                   double atol = 0.0, int max_panels = 240) {
  struct Seg {
    double a, b, integral, err;
  };
  std::vector<Seg> segs;
  auto [i0, e0] = gk15_eval(f, a, b);
  segs.push_back({a, b, i0, e0});
  for (;;) {
    double total = 0.0, err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].integral;
      err += segs[i].err;
      if (segs[i].err > segs[worst].err) worst = i;
    }
    if (err <= std::max(atol, rtol * std::abs(total)) ||
        static_cast<int>(segs.size()) >= max_panels)
      return total;
    Seg s = segs[worst];
    double m = 0.5 * (s.a + s.b);
    if (!(m > s.a && m < s.b)) return total;  // interval exhausted
    auto [il, el] = gk15_eval(f, s.a, m);
    auto [ir, er] = gk15_eval(f, m, s.b);
    segs[worst] = {s.a, m, il, el};
    segs.push_back({m, s.b, ir, er});
  }
}

}  // namespace sgasmix
