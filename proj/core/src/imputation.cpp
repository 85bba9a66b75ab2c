#include "collabviz/imputation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace collabviz {

DenseRatings fill_linear_regression(const RatingMatrix& matrix) {
  const std::size_t m = matrix.user_count();
  const std::size_t n = matrix.item_count();
  if (m < 2) throw std::invalid_argument("fill_linear_regression needs at least 2 users");

  DenseRatings dense;
  dense.ratings = Grid(m, n);
  dense.observed.assign(m * n, 0);
  dense.user_ids.assign(matrix.user_ids().begin(), matrix.user_ids().end());
  dense.item_ids.assign(matrix.item_ids().begin(), matrix.item_ids().end());

  double global_sum = 0.0;
  for (const auto& e : matrix.entries()) global_sum += e.value;
  const double global_mean =
      matrix.empty() ? 0.5 : global_sum / static_cast<double>(matrix.size());

  // Stage 1: user means.
  Eigen::MatrixXd stage1(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto rated = matrix.items_of(i);
    double mean = global_mean;
    if (!rated.empty()) {
      double s = 0.0;
      for (const auto& nb : rated) s += nb.value;
      mean = s / static_cast<double>(rated.size());
    }
    stage1.row(static_cast<Eigen::Index>(i)).setConstant(mean);
    for (const auto& nb : rated) {
      stage1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nb.index)) = nb.value;
      dense.observed[i * n + nb.index] = 1;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dense.ratings.at(i, j) = stage1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }

  // Stage 2: per-user regression on the other users' stage-1 columns.
  const auto features = static_cast<Eigen::Index>(m);  // m-1 weights plus bias
  for (std::size_t i = 0; i < m; ++i) {
    const auto rated = matrix.items_of(i);
    if (rated.empty() || rated.size() == n) continue;

    const auto column_without_user = [&](std::size_t item, auto&& row) {
      Eigen::Index c = 0;
      for (std::size_t u = 0; u < m; ++u) {
        if (u == i) continue;
        row(c++) = stage1(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(item));
      }
      row(c) = 1.0;
    };

    Eigen::MatrixXd design(static_cast<Eigen::Index>(rated.size()), features);
    Eigen::VectorXd target(static_cast<Eigen::Index>(rated.size()));
    for (std::size_t k = 0; k < rated.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      column_without_user(rated[k].index, [&](Eigen::Index c) -> double& { return design(r, c); });
      target(r) = rated[k].value;
    }
    const Eigen::VectorXd coef =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(design).solve(target);

    Eigen::VectorXd x(features);
    for (std::size_t j = 0; j < n; ++j) {
      if (dense.is_observed(i, j)) continue;
      column_without_user(j, [&](Eigen::Index c) -> double& { return x(c); });
      dense.ratings.at(i, j) = std::clamp(x.dot(coef), 0.0, 1.0);
    }
  }
  return dense;
}

Grid item_correlation(const DenseRatings& dense) {
  const std::size_t m = dense.users();
  const std::size_t n = dense.items();
  std::vector<double> norms(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += dense.ratings.at(i, j) * dense.ratings.at(i, j);
    norms[j] = std::sqrt(s);
    if (!(norms[j] > 0.0)) {
      const std::string id = j < dense.item_ids.size() ? dense.item_ids[j] : std::to_string(j);
      throw std::invalid_argument("item_correlation: item '" + id + "' has an all-zero column");
    }
  }
  Grid c(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    c.at(a, a) = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < m; ++i) dot += dense.ratings.at(i, a) * dense.ratings.at(i, b);
      const double v = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
      c.at(a, b) = v;
      c.at(b, a) = v;
    }
  }
  return c;
}

Grid augment(const DenseRatings& dense, const Grid& correlation) {
  const std::size_t m = dense.users();
  const std::size_t n = dense.items();
  if (correlation.rows != n || correlation.cols != n) {
    throw std::invalid_argument("augment: correlation grid must be n x n");
  }
  Grid x(n + m, n);
  std::copy(correlation.values.begin(), correlation.values.end(), x.values.begin());
  std::copy(dense.ratings.values.begin(), dense.ratings.values.end(),
            x.values.begin() + static_cast<std::ptrdiff_t>(n * n));
  return x;
}

RatingMatrix to_rating_matrix(const DenseRatings& dense) {
  std::vector<Rating> entries;
  entries.reserve(dense.users() * dense.items());
  for (std::size_t i = 0; i < dense.users(); ++i) {
    for (std::size_t j = 0; j < dense.items(); ++j) {
      entries.push_back({i, j, dense.ratings.at(i, j)});
    }
  }
  return RatingMatrix(dense.users(), dense.items(), std::move(entries), dense.user_ids,
                      dense.item_ids);
}

void save_dense(const std::filesystem::path& grid_path, const std::filesystem::path& mask_path,
                const DenseRatings& dense) {
  std::ofstream grid(grid_path, std::ios::binary);
  std::ofstream mask(mask_path, std::ios::binary);
  if (!grid || !mask) throw DataError("cannot write dense rating files");
  char buf[32];
  for (std::size_t i = 0; i < dense.users(); ++i) {
    for (std::size_t j = 0; j < dense.items(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), dense.ratings.at(i, j));
      if (j > 0) {
        grid << '\t';
        mask << '\t';
      }
      grid.write(buf, res.ptr - buf);
      mask << (dense.is_observed(i, j) ? 'O' : 'I');
    }
    grid << '\n';
    mask << '\n';
  }
}

}  // namespace collabviz
