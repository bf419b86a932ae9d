#pragma once

#include <cstdint>
#include <vector>

namespace sgasmix {

// Hubert-Arabie adjusted Rand index; 1.0 when the denominator vanishes
// (both partitions carry no pair information).
double ari(const std::vector<int>& a, const std::vector<int>& b);

// O(n^2) pairwise reference; bit-identical to ari by construction
double ari_pairwise(const std::vector<int>& a, const std::vector<int>& b);

// contingency counts, rows indexed by distinct values of a (ascending),
// columns by distinct values of b; entries sum to n
std::vector<std::vector<std::int64_t>> confusion_table(
    const std::vector<int>& a, const std::vector<int>& b);

// free parameters of a K-component d-dimensional model:
// (K-1) weights + K * (d locations + d(d+1)/2 shape entries + 1 tail index)
int param_count(int k, int d);

double bic(double loglik, int n, int m);

}  // namespace sgasmix
