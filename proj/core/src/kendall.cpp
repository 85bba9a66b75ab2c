#include "collabviz/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace collabviz {

namespace {

std::uint64_t pairs_in(std::uint64_t run) { return run * (run - 1) / 2; }

// Sorts `v` ascending, returning the number of strict inversions.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& scratch) {
  const std::size_t n = v.size();
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo;
      std::size_t b = mid;
      std::size_t out = lo;
      while (a < mid && b < hi) {
        if (v[b] < v[a]) {
          inversions += mid - a;
          scratch[out++] = v[b++];
        } else {
          scratch[out++] = v[a++];
        }
      }
      while (a < mid) scratch[out++] = v[a++];
      while (b < hi) scratch[out++] = v[b++];
    }
    std::swap(v, scratch);
  }
  return inversions;
}

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least 2 elements");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::isnan(x[k]) || std::isnan(y[k])) {
      throw std::invalid_argument("kendall_tau: NaN input");
    }
  }
}

}  // namespace

KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::uint64_t tied_x = 0;
  std::uint64_t tied_xy = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && x[order[end]] == x[order[start]]) ++end;
    tied_x += pairs_in(end - start);
    for (std::size_t s = start; s < end;) {
      std::size_t e = s + 1;
      while (e < end && y[order[e]] == y[order[s]]) ++e;
      tied_xy += pairs_in(e - s);
      s = e;
    }
    start = end;
  }

  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  std::vector<double> scratch(n);
  const std::uint64_t discordant = merge_count(ys, scratch);

  std::uint64_t tied_y = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && ys[end] == ys[start]) ++end;
    tied_y += pairs_in(end - start);
    start = end;
  }

  const std::uint64_t total = pairs_in(n);
  KendallCounts c;
  c.discordant = discordant;
  c.joint_ties = tied_xy;
  c.extra_x = tied_x - tied_xy;
  c.extra_y = tied_y - tied_xy;
  c.concordant = total - tied_x - tied_y + tied_xy - discordant;
  return c;
}

double tau_from_counts(const KendallCounts& c) {
  const double cd = static_cast<double>(c.concordant + c.discordant);
  const double left = cd + static_cast<double>(c.extra_x);
  const double right = cd + static_cast<double>(c.extra_y);
  if (left == 0.0 || right == 0.0) return 0.0;
  const double diff =
      static_cast<double>(c.concordant) - static_cast<double>(c.discordant);
  // One sqrt of the product keeps tau exactly +-1 on untied orderings.
  return std::clamp(diff / std::sqrt(left * right), -1.0, 1.0);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  return tau_from_counts(kendall_counts(x, y));
}

double ideal_tau(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("ideal_tau: need at least 2 elements");
  std::vector<double> sorted(x.begin(), x.end());
  if (std::any_of(sorted.begin(), sorted.end(), [](double v) { return std::isnan(v); })) {
    throw std::invalid_argument("ideal_tau: NaN input");
  }
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t tied = 0;
  for (std::size_t start = 0; start < sorted.size();) {
    std::size_t end = start + 1;
    while (end < sorted.size() && sorted[end] == sorted[start]) ++end;
    tied += pairs_in(end - start);
    start = end;
  }
  // Every untied pair discordant, no Y ties: -D / sqrt((D + E) * D),
  // i.e. -sqrt(D / (D + E)), evaluated through the same expression as tau.
  KendallCounts best;
  best.discordant = pairs_in(sorted.size()) - tied;
  best.extra_x = tied;
  return tau_from_counts(best);
}

}  // namespace collabviz
