#ifndef COLLABVIZ_IMPUTATION_HPP_
#define COLLABVIZ_IMPUTATION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "collabviz/ratings.hpp"

namespace collabviz {

/// Row-major dense grid of doubles.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Complete m x n rating grid with a mask of which cells were observed.
struct DenseRatings {
  Grid ratings;                     // users x items, values in [0,1]
  std::vector<std::uint8_t> observed;  // 1 where the source matrix had a rating
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::size_t users() const noexcept { return ratings.rows; }
  std::size_t items() const noexcept { return ratings.cols; }
  bool is_observed(std::size_t i, std::size_t j) const { return observed[i * items() + j] != 0; }
};

/// Two-stage fill. Stage 1 puts each user's mean rating (global mean for a
/// user with no ratings) in every missing cell. Stage 2 regresses each user's
/// observed ratings on the other users' stage-1 columns, using the
/// minimum-norm least-squares solution, and predicts the missing cells from
/// it, clamped to [0,1]. Regressions always read the stage-1 grid, so the
/// result does not depend on user order. Throws if m < 2.
DenseRatings fill_linear_regression(const RatingMatrix& matrix);

/// Cosine similarity between item columns; unit diagonal. Throws
/// std::invalid_argument naming the item when a column has zero norm.
Grid item_correlation(const DenseRatings& dense);

/// (n + m) x n feature grid: the n x n correlation block on top, then one
/// row per user holding that user's dense ratings.
Grid augment(const DenseRatings& dense, const Grid& correlation);

/// Every cell of the dense grid as an observed rating.
RatingMatrix to_rating_matrix(const DenseRatings& dense);

/// TSV grid (one row per user) and a companion mask of O/I per cell.
void save_dense(const std::filesystem::path& grid_path, const std::filesystem::path& mask_path,
                const DenseRatings& dense);

}  // namespace collabviz

#endif  // COLLABVIZ_IMPUTATION_HPP_
