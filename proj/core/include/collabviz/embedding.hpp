#ifndef COLLABVIZ_EMBEDDING_HPP_
#define COLLABVIZ_EMBEDDING_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "collabviz/ratings.hpp"

namespace collabviz {

/// Positions of m user points and n item points in a D-dimensional space.
/// Points are addressed jointly as 0..m+n-1, users first.
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::size_t users, std::size_t items, std::size_t dim);

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t point_count() const noexcept { return users_ + items_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> point(std::size_t k) { return {coords_.data() + k * dim_, dim_}; }
  std::span<const double> point(std::size_t k) const {
    return {coords_.data() + k * dim_, dim_};
  }
  std::span<double> user(std::size_t i) { return point(i); }
  std::span<const double> user(std::size_t i) const { return point(i); }
  std::span<double> item(std::size_t j) { return point(users_ + j); }
  std::span<const double> item(std::size_t j) const { return point(users_ + j); }

  std::span<double> coords() noexcept { return coords_; }
  std::span<const double> coords() const noexcept { return coords_; }

  bool all_finite() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

double distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Translates all points jointly to zero grand mean, then applies one scalar
/// so the mean squared deviation over all points and coordinates is 1. No
/// per-axis scaling. Throws if fewer than 2 points or all points coincide.
void normalize(Embedding& emb);
Embedding normalized(Embedding emb);

/// Row of an embedding file: `kind index original_id x_1 ... x_D`.
struct EmbeddingRow {
  std::string kind;  // "user" or "item"
  std::size_t index = 0;
  std::string original_id;
  std::vector<double> coords;
};

/// Tab-separated export with a `kind index original_id x_1..x_D` header.
/// Users first, then items; ids come from `matrix`.
void save_embedding(const std::filesystem::path& path, const Embedding& emb,
                    const RatingMatrix& matrix);
std::string format_embedding(const Embedding& emb, std::span<const std::string> user_ids,
                             std::span<const std::string> item_ids);
std::vector<EmbeddingRow> load_embedding_rows(const std::filesystem::path& path);

}  // namespace collabviz

#endif  // COLLABVIZ_EMBEDDING_HPP_
