#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sgasmix/errors.hpp"
#include "sgasmix/metrics.hpp"
#include "sgasmix/rng.hpp"

using namespace sgasmix;

TEST_CASE("identical and relabeled partitions score one") {
  std::vector<int> a = {0, 0, 1, 1, 2, 2};
  std::vector<int> b = {5, 5, 9, 9, 1, 1};
  CHECK(ari(a, a) == 1.0);
  CHECK(ari(a, b) == 1.0);
}

TEST_CASE("crossing partitions land below zero at the pairwise value") {
  std::vector<int> a = {1, 1, 2, 2};
  std::vector<int> b = {1, 2, 1, 2};
  double v = ari(a, b);
  CHECK(v == ari_pairwise(a, b));
  CHECK(v == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("degenerate partitions") {
  std::vector<int> ones = {0, 0, 0, 0};
  std::vector<int> singles = {0, 1, 2, 3};
  CHECK(ari(ones, singles) == 0.0);    // chance level exactly
  CHECK(ari(ones, ones) == 1.0);       // zero denominator -> 1
  CHECK(ari(singles, singles) == 1.0); // zero denominator -> 1
}

TEST_CASE("contingency formula equals brute force exactly on random pairs") {
  Rng rng = Rng::stream(53, 0, 0);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform() * 49);
    int ka = 1 + static_cast<int>(rng.uniform() * 5);
    int kb = 1 + static_cast<int>(rng.uniform() * 5);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.uniform() * ka);
      b[i] = static_cast<int>(rng.uniform() * kb);
    }
    CHECK(ari(a, b) == ari_pairwise(a, b));  // exact, not approximate
  }
}

TEST_CASE("ari is symmetric and rejects malformed input") {
  std::vector<int> a = {0, 1, 0, 1, 1};
  std::vector<int> b = {1, 1, 0, 0, 1};
  CHECK(ari(a, b) == ari(b, a));
  CHECK_THROWS_AS(ari({0, 1}, {0}), input_error);
  CHECK_THROWS_AS(ari({}, {}), input_error);
}

TEST_CASE("parameter count enumerates weights, locations, shapes, tails") {
  CHECK(param_count(1, 1) == 3);              // mu, sigma, alpha
  CHECK(param_count(2, 2) == 13);             // 1 + 2 * (2 + 3 + 1)
  CHECK(param_count(3, 2) == 20);
  CHECK_THROWS_AS(param_count(0, 2), input_error);
}

TEST_CASE("bic formula") {
  CHECK(bic(-120.0, 100, 3) ==
        doctest::Approx(3.0 * std::log(100.0) + 240.0).epsilon(1e-14));
}

TEST_CASE("confusion table counts and shapes") {
  std::vector<int> ident = {0, 0, 1, 1};
  auto diag = confusion_table(ident, ident);
  REQUIRE(diag.size() == 2);
  REQUIRE(diag[0].size() == 2);
  CHECK(diag[0][0] == 2);
  CHECK(diag[1][1] == 2);
  CHECK(diag[0][1] == 0);
  CHECK(diag[1][0] == 0);

  std::vector<int> truth = {0, 0, 1, 1, 2};
  std::vector<int> onecol = {7, 7, 7, 7, 7};
  auto col = confusion_table(truth, onecol);
  REQUIRE(col.size() == 3);
  REQUIRE(col[0].size() == 1);
  CHECK(col[0][0] == 2);
  CHECK(col[1][0] == 2);
  CHECK(col[2][0] == 1);

  // 3x3 style table: row sums equal the true class counts, total is n
  Rng rng(99);
  std::vector<int> a(60), b(60);
  for (int i = 0; i < 60; ++i) {
    a[i] = static_cast<int>(rng.uniform() * 3);
    b[i] = static_cast<int>(rng.uniform() * 3);
  }
  auto tab = confusion_table(a, b);
  std::int64_t total = 0;
  for (std::size_t r = 0; r < tab.size(); ++r) {
    std::int64_t row_sum = 0;
    for (std::int64_t v : tab[r]) row_sum += v;
    std::int64_t want = 0;
    for (int v : a) want += (v == static_cast<int>(r));
    CHECK(row_sum == want);
    total += row_sum;
  }
  CHECK(total == 60);
  CHECK_THROWS_AS(confusion_table({0, 1}, {0}), input_error);
}
