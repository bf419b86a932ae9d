#include "sgasmix/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "sgasmix/errors.hpp"

namespace sgasmix {

namespace {

using wide = __int128;

// shared finisher so the contingency and pairwise paths agree bitwise:
// takes the exact pair counts sum_ij C(n_ij,2), sum_a C(a_i,2), sum_b C(b_j,2)
// and the total pair count P
double ari_from_sums(std::int64_t s_ab, std::int64_t s_a, std::int64_t s_b,
                     std::int64_t pairs) {
  wide num = 2 * (wide(pairs) * s_ab - wide(s_a) * s_b);
  wide den = wide(pairs) * (s_a + s_b) - 2 * wide(s_a) * s_b;
  if (den == 0) return 1.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<int> dense_relabel(const std::vector<int>& x, int* k_out) {
  std::unordered_map<int, int> map;
  std::vector<int> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [it, fresh] = map.try_emplace(x[i], static_cast<int>(map.size()));
    (void)fresh;
    out[i] = it->second;
  }
  *k_out = static_cast<int>(map.size());
  return out;
}

std::int64_t choose2(std::int64_t n) { return n * (n - 1) / 2; }

}  // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw input_error("label vectors differ in length");
  if (a.empty()) throw input_error("empty label vectors");
  int ka = 0, kb = 0;
  std::vector<int> ra = dense_relabel(a, &ka), rb = dense_relabel(b, &kb);
  std::vector<std::int64_t> table(static_cast<std::size_t>(ka) * kb, 0);
  std::vector<std::int64_t> rows(ka, 0), cols(kb, 0);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    table[static_cast<std::size_t>(ra[i]) * kb + rb[i]]++;
    rows[ra[i]]++;
    cols[rb[i]]++;
  }
  std::int64_t s_ab = 0, s_a = 0, s_b = 0;
  for (std::int64_t c : table) s_ab += choose2(c);
  for (std::int64_t c : rows) s_a += choose2(c);
  for (std::int64_t c : cols) s_b += choose2(c);
  return ari_from_sums(s_ab, s_a, s_b, choose2(static_cast<std::int64_t>(a.size())));
}

double ari_pairwise(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw input_error("label vectors differ in length");
  if (a.empty()) throw input_error("empty label vectors");
  const std::size_t n = a.size();
  std::int64_t both = 0, in_a = 0, in_b = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      in_a += sa;
      in_b += sb;
    }
  return ari_from_sums(both, in_a, in_b, choose2(static_cast<std::int64_t>(n)));
}

std::vector<std::vector<std::int64_t>> confusion_table(
    const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw input_error("label vectors differ in length");
  if (a.empty()) throw input_error("empty label vectors");
  std::map<int, int> ra, rb;
  for (int v : a) ra.try_emplace(v, 0);
  for (int v : b) rb.try_emplace(v, 0);
  int idx = 0;
  for (auto& [v, slot] : ra) slot = idx++;
  idx = 0;
  for (auto& [v, slot] : rb) slot = idx++;
  std::vector<std::vector<std::int64_t>> table(
      ra.size(), std::vector<std::int64_t>(rb.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) table[ra[a[i]]][rb[b[i]]]++;
  return table;
}

int param_count(int k, int d) {
  if (k < 1 || d < 1) throw input_error("invalid model dimensions");
  return (k - 1) + k * (d + d * (d + 1) / 2 + 1);
}

double bic(double loglik, int n, int m) {
  if (n < 1) throw input_error("empty sample");
  return m * std::log(static_cast<double>(n)) - 2.0 * loglik;
}

}  // namespace sgasmix
