#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "sgasmix/em.hpp"

namespace sgasmix {

// the three-component benchmark configuration: equal weights, locations
// (0,3), (3,0), (-3,0), and the stated shape matrices
inline MixtureModel example1_truth(double alpha_gen = 1.7,
                                   double mu_scale = 1.0) {
  MixtureModel m;
  m.d = 2;
  m.components.resize(3);
  auto& c = m.components;
  c[0].mu = Eigen::Vector2d(0.0, 3.0) * mu_scale;
  c[1].mu = Eigen::Vector2d(3.0, 0.0) * mu_scale;
  c[2].mu = Eigen::Vector2d(-3.0, 0.0) * mu_scale;
  c[0].sigma = (Eigen::Matrix2d() << 2.0, 0.5, 0.5, 0.5).finished();
  c[1].sigma = Eigen::Matrix2d::Identity();
  c[2].sigma = (Eigen::Matrix2d() << 2.0, -0.5, -0.5, 0.5).finished();
  for (auto& comp : c) {
    comp.alpha = alpha_gen;
    comp.w = 1.0 / 3.0;
  }
  return m;
}

// worst per-component location gap under the best matching permutation
inline double location_match_gap(const MixtureModel& fitted,
                                 const MixtureModel& truth) {
  const int k = truth.k();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (int j = 0; j < k; ++j)
      worst = std::max(worst, (fitted.components[perm[j]].mu -
                               truth.components[j].mu)
                                  .norm());
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace sgasmix
