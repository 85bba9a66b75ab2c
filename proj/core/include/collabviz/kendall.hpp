#ifndef COLLABVIZ_KENDALL_HPP_
#define COLLABVIZ_KENDALL_HPP_

#include <cstdint>
#include <span>

namespace collabviz {

/// Pair classification over all unordered index pairs (i, j).
/// Pairs tied in both sequences fall in none of the four buckets.
struct KendallCounts {
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t extra_x = 0;  // X_i == X_j, Y_i != Y_j
  std::uint64_t extra_y = 0;  // Y_i == Y_j, X_i != X_j
  std::uint64_t joint_ties = 0;
};

/// O(n log n) pair counts (sort plus merge-sort inversion count).
KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y);

/// (C - D) / sqrt((C + D + E_x) * (C + D + E_y)); 0 when a factor is 0.
double tau_from_counts(const KendallCounts& counts);

/// Tie-aware Kendall's tau. Throws std::invalid_argument on a length
/// mismatch, fewer than 2 elements, or NaN input.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Lowest tau reachable against a tie-free Y: -sqrt(D / (D + E)), with D the
/// pairs where X differs and E the pairs where X ties. 0 when X is constant.
double ideal_tau(std::span<const double> x);

}  // namespace collabviz

#endif  // COLLABVIZ_KENDALL_HPP_
