#include "collabviz/rating_function.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace collabviz {

namespace {

constexpr double kMinThresholdGap = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Sorted run of pairs sharing one distance value.
struct DistanceGroup {
  double distance;
  double count;
  double sum;
  double sum_sq;
};

// Stable sort by distance. Distances are non-negative, so the IEEE bit
// pattern orders like the value and an LSD radix pass over 16-bit digits
// works directly on it.
void sort_by_distance(std::vector<DistanceRating>& pairs) {
  constexpr std::size_t kRadixThreshold = 4096;
  if (pairs.size() < kRadixThreshold) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const DistanceRating& a, const DistanceRating& b) {
                       return a.distance < b.distance;
                     });
    return;
  }
  const auto key = [](const DistanceRating& p) {
    std::uint64_t bits;
    std::memcpy(&bits, &p.distance, sizeof bits);
    return bits;
  };
  std::vector<DistanceRating> buffer(pairs.size());
  std::vector<std::size_t> offsets(1u << 16);
  for (unsigned shift = 0; shift < 64; shift += 16) {
    std::fill(offsets.begin(), offsets.end(), 0);
    for (const auto& p : pairs) ++offsets[(key(p) >> shift) & 0xFFFF];
    if (std::find(offsets.begin(), offsets.end(), pairs.size()) != offsets.end()) continue;
    std::size_t running = 0;
    for (auto& o : offsets) {
      const std::size_t c = o;
      o = running;
      running += c;
    }
    for (const auto& p : pairs) buffer[offsets[(key(p) >> shift) & 0xFFFF]++] = p;
    pairs.swap(buffer);
  }
}

// Places K-1 thresholds given the level of every group (non-decreasing).
std::vector<double> place_thresholds(const std::vector<DistanceGroup>& groups,
                                     const std::vector<std::size_t>& group_level,
                                     std::size_t levels) {
  const std::size_t g_count = groups.size();
  // first_at_or_above[t]: first group whose level >= t.
  std::vector<std::size_t> first(levels, g_count);
  for (std::size_t t = 1; t < levels; ++t) {
    const auto it = std::find_if(group_level.begin(), group_level.end(),
                                 [t](std::size_t l) { return l >= t; });
    first[t] = static_cast<std::size_t>(it - group_level.begin());
  }

  std::vector<double> thresholds(levels - 1);
  std::size_t t = 1;
  while (t < levels) {
    const std::size_t h = first[t];
    std::size_t run = t;
    while (run < levels && first[run] == h) ++run;
    const std::size_t shared = run - t;

    const double lo = h == 0 ? 0.0 : groups[h - 1].distance;
    const double hi = h == g_count ? kInf : groups[h].distance;
    double base;
    if (h == g_count) {
      base = lo + 1.0;
    } else {
      base = lo + (hi - lo) / 2.0;
      if (base <= lo) base = hi;
    }
    const double gap =
        h == g_count ? kMinThresholdGap
                     : std::min(kMinThresholdGap, (hi - base) / static_cast<double>(shared));
    for (std::size_t k = 0; k < shared; ++k) {
      double theta = base + static_cast<double>(k) * gap;
      const std::size_t idx = t + k - 1;
      if (idx > 0 && theta <= thresholds[idx - 1]) {
        theta = std::nextafter(thresholds[idx - 1], kInf);
      }
      thresholds[idx] = theta;
    }
    t = run;
  }
  return thresholds;
}

}  // namespace

RatingFunction::RatingFunction(std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)) {
  if (thresholds_.empty()) {
    throw std::invalid_argument("rating function needs K >= 2 (at least one threshold)");
  }
  double prev = 0.0;
  for (double t : thresholds_) {
    if (!std::isfinite(t) || !(t > prev)) {
      throw std::invalid_argument(
          "rating function thresholds must be finite, positive and strictly increasing");
    }
    prev = t;
  }
}

double RatingFunction::level_value(std::size_t level) const {
  const std::size_t k = levels();
  if (level >= k) throw std::out_of_range("rating level out of range");
  return 1.0 - static_cast<double>(level) / static_cast<double>(k - 1);
}

std::size_t RatingFunction::level_of(double x) const {
  if (!(x >= 0.0)) throw std::invalid_argument("rating function argument must be >= 0");
  return static_cast<std::size_t>(
      std::upper_bound(thresholds_.begin(), thresholds_.end(), x) - thresholds_.begin());
}

std::string RatingFunction::to_line() const {
  std::string out = std::to_string(levels());
  char buf[32];
  for (double t : thresholds_) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), t);
    out.push_back(' ');
    out.append(buf, res.ptr);
  }
  return out;
}

RatingFunction RatingFunction::from_line(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::size_t k = 0;
  if (!(in >> k) || k < 2) throw std::invalid_argument("rating function line: bad K");
  std::vector<double> thresholds;
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw std::invalid_argument("rating function line: bad threshold '" + token + "'");
    }
    thresholds.push_back(v);
  }
  if (thresholds.size() != k - 1) {
    throw std::invalid_argument("rating function line: expected " + std::to_string(k - 1) +
                                " thresholds");
  }
  return RatingFunction(std::move(thresholds));
}

double eval_f(const RatingFunction& func, double x) { return func(x); }

RatingFunction fit_rating_function(std::span<const DistanceRating> pairs, std::size_t levels) {
  if (levels < 2) throw std::invalid_argument("fit_rating_function: K must be >= 2");
  if (pairs.empty()) throw std::invalid_argument("fit_rating_function: no pairs");

  std::vector<DistanceRating> sorted(pairs.begin(), pairs.end());
  for (auto& p : sorted) {
    if (!(p.distance >= 0.0) || !std::isfinite(p.distance) || !std::isfinite(p.rating)) {
      throw std::invalid_argument("fit_rating_function: distances must be finite and >= 0");
    }
    p.distance += 0.0;  // -0.0 -> +0.0 for the bitwise sort
  }
  sort_by_distance(sorted);

  std::vector<double> value(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    value[l] = 1.0 - static_cast<double>(l) / static_cast<double>(levels - 1);
  }

  // cost[l] = min SSE of the groups seen so far with the last one at a level
  // <= l. Per group g: cost_g[l] = min(cost_g[l-1], cost_{g-1}[l] + err(g, l)),
  // where the second branch puts group g on level l. took[g * K + l] records
  // that branch for the traceback. Groups are runs of equal distance, summed
  // through prefix sums of r and r^2 over the sorted order.
  std::vector<DistanceGroup> groups;
  std::vector<double> cost(levels, 0.0);
  std::vector<bool> took;
  const std::size_t n = sorted.size();
  double prefix = 0.0;
  double prefix_sq = 0.0;
  std::size_t begin = 0;
  while (begin < n) {
    const double group_prefix = prefix;
    const double group_prefix_sq = prefix_sq;
    std::size_t end = begin;
    while (end < n && sorted[end].distance == sorted[begin].distance) {
      prefix += sorted[end].rating;
      prefix_sq += sorted[end].rating * sorted[end].rating;
      ++end;
    }
    const DistanceGroup grp{sorted[begin].distance, static_cast<double>(end - begin),
                            prefix - group_prefix, prefix_sq - group_prefix_sq};
    groups.push_back(grp);
    double below = kInf;
    for (std::size_t l = 0; l < levels; ++l) {
      double take = kInf;
      if (l == 0 || grp.distance > 0.0) {
        const double v = value[l];
        take = cost[l] + (grp.sum_sq - 2.0 * v * grp.sum + v * v * grp.count);
      }
      const bool chose = take < below;
      cost[l] = chose ? take : below;
      took.push_back(chose);
      below = cost[l];
    }
    begin = end;
  }

  const std::size_t g_count = groups.size();
  std::vector<std::size_t> group_level(g_count, 0);
  std::size_t l = levels - 1;
  std::size_t g = g_count;
  while (g > 0) {
    if (took[(g - 1) * levels + l]) {
      group_level[g - 1] = l;
      --g;
    } else {
      --l;
    }
  }
  return RatingFunction(place_thresholds(groups, group_level, levels));
}

double sse(const RatingFunction& func, std::span<const DistanceRating> pairs) {
  double total = 0.0;
  for (const auto& p : pairs) {
    const double e = func(p.distance) - p.rating;
    total += e * e;
  }
  return total;
}

}  // namespace collabviz
