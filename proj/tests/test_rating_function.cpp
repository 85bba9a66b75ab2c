#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "collabviz/rating_function.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace collabviz;

namespace {

std::vector<DistanceRating> random_pairs(std::mt19937_64& rng, std::size_t n, std::size_t levels,
                                         bool ties) {
  std::uniform_int_distribution<int> grid(0, 6);
  std::uniform_real_distribution<double> cont(0.0, 3.0);
  std::uniform_int_distribution<std::size_t> level(0, levels - 1);
  std::vector<DistanceRating> out(n);
  for (auto& p : out) {
    p.distance = ties ? 0.5 * grid(rng) : cont(rng);
    p.rating = 1.0 - static_cast<double>(level(rng)) / static_cast<double>(levels - 1);
  }
  return out;
}

}  // namespace

TEST_CASE("eval_f step values") {
  const RatingFunction two({2.0});
  CHECK(eval_f(two, 1.0) == 1.0);
  CHECK(eval_f(two, 3.0) == 0.0);
  const RatingFunction five({1.0, 2.0, 3.0, 4.0});
  CHECK(eval_f(five, 2.5) == 0.5);
  CHECK(eval_f(five, 0.0) == 1.0);
  CHECK(eval_f(five, 4.0) == 0.0);
  CHECK(eval_f(five, 1.0) == 0.75);  // theta_{i-1} <= x: brackets are closed on the left
  CHECK_THROWS(eval_f(five, -0.1));
}

TEST_CASE("rating function invariants are enforced") {
  CHECK_THROWS(RatingFunction(std::vector<double>{}));
  CHECK_THROWS(RatingFunction({1.0, 1.0}));
  CHECK_THROWS(RatingFunction({0.0, 1.0}));
  CHECK_THROWS(RatingFunction({2.0, 1.0}));
}

TEST_CASE("eval_f is non-increasing") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> t(1 + trial % 6);
    for (double& v : t) v = u(rng) + 1e-6;
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    const RatingFunction f(t);
    double prev = 1.0;
    for (double x = 0.0; x < 6.0; x += 0.01) {
      CHECK(f(x) <= prev);
      prev = f(x);
    }
  }
}

TEST_CASE("line serialization round-trips") {
  const RatingFunction f({0.1, 0.30000000000000004, 2.5});
  CHECK(f.to_line().rfind("4 ", 0) == 0);
  CHECK(RatingFunction::from_line(f.to_line()) == f);
  CHECK_THROWS(RatingFunction::from_line("3 1.0"));
  CHECK_THROWS(RatingFunction::from_line("2 x"));
}

TEST_CASE("fit examples") {
  const std::vector<DistanceRating> split{{0.5, 1.0}, {1.5, 0.0}};
  const auto f = fit_rating_function(split, 2);
  CHECK(sse(f, split) == 0.0);
  CHECK(f.thresholds()[0] == 1.0);

  const std::vector<DistanceRating> ones{{0.3, 1.0}, {1.2, 1.0}, {2.0, 1.0}};
  const auto g = fit_rating_function(ones, 2);
  CHECK(g.thresholds()[0] > 2.0);
  CHECK(sse(g, ones) == 0.0);

  const std::vector<DistanceRating> misfit{{1, 1.0}, {2, 0.0}, {3, 1.0}};
  CHECK(sse(fit_rating_function(misfit, 2), misfit) == 1.0);
  CHECK(oracle::brute_fit_sse(misfit, 2) == 1.0);
}

TEST_CASE("sse examples") {
  const RatingFunction f({1.0});
  CHECK(sse(f, {}) == 0.0);
  const std::vector<DistanceRating> exact{{0.5, 1.0}};
  CHECK(sse(f, exact) == 0.0);
  const std::vector<DistanceRating> off{{2.0, 1.0}};
  CHECK(sse(f, off) == 1.0);
}

TEST_CASE("fit errors") {
  const std::vector<DistanceRating> one{{1.0, 1.0}};
  CHECK_THROWS(fit_rating_function(one, 1));
  CHECK_THROWS(fit_rating_function({}, 2));
  const std::vector<DistanceRating> negative{{-1.0, 1.0}};
  CHECK_THROWS(fit_rating_function(negative, 2));
}

TEST_CASE("fit matches exhaustive threshold search") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const std::size_t k = 2 + trial % 3;
    auto pairs = random_pairs(rng, n, k, trial % 2 == 0);
    if (trial % 5 == 0) pairs[0].distance = 0.0;
    if (trial % 7 == 0) {
      for (auto& p : pairs) p.rating = std::uniform_real_distribution<double>(0, 1)(rng);
    }
    const auto f = fit_rating_function(pairs, k);
    CHECK(f.levels() == k);
    CHECK(std::abs(sse(f, pairs) - oracle::brute_fit_sse(pairs, k)) <= 1e-9);
  }
}

TEST_CASE("fit beats arbitrary rating functions") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pairs = random_pairs(rng, 40, 4, false);
    const double best = sse(fit_rating_function(pairs, 4), pairs);
    std::vector<double> t{u(rng), u(rng), u(rng)};
    std::sort(t.begin(), t.end());
    if (t[0] == t[1] || t[1] == t[2]) continue;
    CHECK(best <= sse(RatingFunction(t), pairs) + 1e-12);
  }
}

TEST_CASE("fit keeps zero distances on the top level") {
  const std::vector<DistanceRating> pairs{{0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}};
  const auto f = fit_rating_function(pairs, 2);
  CHECK(f(0.0) == 1.0);
  CHECK(f.thresholds()[0] > 0.0);
}

TEST_CASE("fit is invariant to pair order on both sort paths") {
  std::mt19937_64 rng(5);
  for (std::size_t n : {50u, 20000u}) {
    auto pairs = random_pairs(rng, n, 5, n < 100);
    const auto ref = fit_rating_function(pairs, 5);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    CHECK(fit_rating_function(pairs, 5) == ref);
  }
}

TEST_CASE("large fits agree with a direct quadratic DP") {
  // Independent O(N^2 K) segmentation over sorted, grouped pairs.
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 4; ++trial) {
    auto pairs = random_pairs(rng, 6000, 3, trial % 2 == 0);
    auto sorted = pairs;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.distance < b.distance; });
    std::vector<std::size_t> bounds{0};
    for (std::size_t p = 1; p < sorted.size(); ++p) {
      if (sorted[p].distance != sorted[p - 1].distance) bounds.push_back(p);
    }
    bounds.push_back(sorted.size());
    const std::size_t g = bounds.size() - 1;
    const std::size_t k = 3;
    std::vector<double> csum(sorted.size() + 1, 0.0), csq(sorted.size() + 1, 0.0);
    for (std::size_t p = 0; p < sorted.size(); ++p) {
      csum[p + 1] = csum[p] + sorted[p].rating;
      csq[p + 1] = csq[p] + sorted[p].rating * sorted[p].rating;
    }
    const auto cost = [&](std::size_t a, std::size_t b, std::size_t level) {
      const double v = 1.0 - static_cast<double>(level) / static_cast<double>(k - 1);
      const double cnt = static_cast<double>(bounds[b] - bounds[a]);
      return (csq[bounds[b]] - csq[bounds[a]]) - 2 * v * (csum[bounds[b]] - csum[bounds[a]]) +
             v * v * cnt;
    };
    const double inf = std::numeric_limits<double>::infinity();
    // best[l][b]: groups [0, b) on levels 0..l
    std::vector<std::vector<double>> best(k, std::vector<double>(g + 1, inf));
    for (std::size_t b = 0; b <= g; ++b) best[0][b] = cost(0, b, 0);
    for (std::size_t l = 1; l < k; ++l) {
      for (std::size_t b = 0; b <= g; ++b) {
        for (std::size_t a = 0; a <= b; ++a) {
          if (a == 0 && b > 0 && sorted[0].distance == 0.0) continue;
          best[l][b] = std::min(best[l][b], best[l - 1][a] + cost(a, b, l));
        }
      }
    }
    const double got = sse(fit_rating_function(pairs, k), pairs);
    CHECK(std::abs(got - best[k - 1][g]) <= 1e-9 * std::max(1.0, got));
  }
}
