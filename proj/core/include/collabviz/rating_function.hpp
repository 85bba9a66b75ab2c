#ifndef COLLABVIZ_RATING_FUNCTION_HPP_
#define COLLABVIZ_RATING_FUNCTION_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace collabviz {

/// A user-item distance paired with the observed rating at that distance.
struct DistanceRating {
  double distance = 0.0;
  double rating = 0.0;
};

/// Quantized, non-increasing step function from distance to expected rating.
///
/// With K levels and splitting points 0 = t_0 < t_1 < ... < t_{K-1} < t_K = inf,
/// a distance x in [t_{l}, t_{l+1}) maps to level l, whose value is
/// 1 - l / (K - 1). Level 0 is the top rating, so f(0) = 1 and f(x) = 0 for
/// every x >= t_{K-1}.
class RatingFunction {
 public:
  /// `thresholds` are t_1..t_{K-1}; they must be finite, positive and strictly
  /// increasing, and there must be at least one (K >= 2).
  explicit RatingFunction(std::vector<double> thresholds);

  std::size_t levels() const noexcept { return thresholds_.size() + 1; }
  std::span<const double> thresholds() const noexcept { return thresholds_; }

  /// Value 1 - l/(K-1) of level l.
  double level_value(std::size_t level) const;
  /// Index of the bracket containing x. Throws on negative or NaN x.
  std::size_t level_of(double x) const;
  double operator()(double x) const { return level_value(level_of(x)); }

  /// `K t_1 ... t_{K-1}`, shortest round-trip decimal form.
  std::string to_line() const;
  static RatingFunction from_line(std::string_view line);

  friend bool operator==(const RatingFunction&, const RatingFunction&) = default;

 private:
  std::vector<double> thresholds_;
};

double eval_f(const RatingFunction& func, double x);

/// Exact least-squares fit of the K splitting points to (distance, rating)
/// pairs. Runs in O(N log N) for the sort plus O(NK) for the dynamic program.
/// Pairs at the same distance always share a level; pairs at distance 0 are
/// pinned to the top level. Throws std::invalid_argument when K < 2 or the
/// pair list is empty.
RatingFunction fit_rating_function(std::span<const DistanceRating> pairs, std::size_t levels);

/// Sum of squared errors of `func` over `pairs`.
double sse(const RatingFunction& func, std::span<const DistanceRating> pairs);

}  // namespace collabviz

#endif  // COLLABVIZ_RATING_FUNCTION_HPP_
