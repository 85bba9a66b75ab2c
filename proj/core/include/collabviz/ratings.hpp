#ifndef COLLABVIZ_RATINGS_HPP_
#define COLLABVIZ_RATINGS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace collabviz {

/// Raised when an input file cannot be parsed or violates a data contract.
/// `line()` is the 1-based line number in the file (0 when not applicable).
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Declared raw rating scale. Normalization is min-max over this scale, not
/// over the observed values, so subsets of a dataset normalize identically.
struct RatingScale {
  double min_raw = 0.0;
  double max_raw = 1.0;
  double step = 0.0;  // raw increment; 0 for continuous scales

  void validate() const;
  double normalize(double raw) const;
  /// Inverse of normalize. Snaps to the step grid when step > 0.
  double denormalize(double value) const;
};

/// One observed rating: user index, item index and normalized value in [0,1].
struct Rating {
  std::size_t user = 0;
  std::size_t item = 0;
  double value = 0.0;
};

/// Half of an inverted index entry: the other endpoint and the rating.
struct Neighbor {
  std::size_t index = 0;
  double value = 0.0;
};

/// Sparse store of normalized ratings with per-user and per-item adjacency.
/// Immutable after construction.
class RatingMatrix {
 public:
  RatingMatrix() = default;

  /// Validates and indexes `entries`. Throws std::invalid_argument on an
  /// out-of-range index or value, or a repeated (user, item) pair.
  /// Identifier tables are optional; when empty, ids default to the index.
  RatingMatrix(std::size_t users, std::size_t items, std::vector<Rating> entries,
               std::vector<std::string> user_ids = {},
               std::vector<std::string> item_ids = {});

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::span<const Rating> entries() const noexcept { return entries_; }
  /// Items rated by user i, in entry order.
  std::span<const Neighbor> items_of(std::size_t user) const { return by_user_.at(user); }
  /// Users who rated item j, in entry order.
  std::span<const Neighbor> users_of(std::size_t item) const { return by_item_.at(item); }

  const std::string& user_id(std::size_t i) const { return user_ids_.at(i); }
  const std::string& item_id(std::size_t j) const { return item_ids_.at(j); }
  std::span<const std::string> user_ids() const noexcept { return user_ids_; }
  std::span<const std::string> item_ids() const noexcept { return item_ids_; }

  friend bool operator==(const RatingMatrix& a, const RatingMatrix& b);

 private:
  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::vector<Rating> entries_;
  std::vector<std::vector<Neighbor>> by_user_;
  std::vector<std::vector<Neighbor>> by_item_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

/// Reads a `user,item,rating` CSV (header required). Ids are mapped to dense
/// indices in first-appearance order. Throws DataError naming the line on a
/// malformed row, an out-of-scale rating or a duplicate (user, item) pair.
RatingMatrix load_triplets(const std::filesystem::path& path, const RatingScale& scale);
RatingMatrix parse_triplets(const std::string& text, const RatingScale& scale);

/// Writes entries back as `user,item,rating` with raw ratings on `scale`.
void save_triplets(const std::filesystem::path& path, const RatingMatrix& matrix,
                   const RatingScale& scale);
/// Sidecar `index,original_id,kind` table (users first, then items).
void save_index_map(const std::filesystem::path& path, const RatingMatrix& matrix);

/// Fraction of observed cells, sum(delta) / (m * n).
double density(const RatingMatrix& matrix);

/// Distinct normalized values, ascending. Throws on an empty matrix.
std::vector<double> distinct_levels(const RatingMatrix& matrix);

}  // namespace collabviz

#endif  // COLLABVIZ_RATINGS_HPP_
