#include "collabviz/ratings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace collabviz {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::uint64_t pair_key(std::size_t user, std::size_t item) {
  return (static_cast<std::uint64_t>(user) << 32) ^ static_cast<std::uint64_t>(item);
}

std::string format_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

}  // namespace

void RatingScale::validate() const {
  if (!std::isfinite(min_raw) || !std::isfinite(max_raw) || !(max_raw > min_raw)) {
    throw std::invalid_argument("rating scale requires finite max_raw > min_raw");
  }
  if (!(step >= 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("rating scale step must be finite and >= 0");
  }
}

double RatingScale::normalize(double raw) const {
  return (raw - min_raw) / (max_raw - min_raw);
}

double RatingScale::denormalize(double value) const {
  const double raw = min_raw + value * (max_raw - min_raw);
  if (step > 0.0) {
    return min_raw + std::round((raw - min_raw) / step) * step;
  }
  return raw;
}

RatingMatrix::RatingMatrix(std::size_t users, std::size_t items, std::vector<Rating> entries,
                           std::vector<std::string> user_ids,
                           std::vector<std::string> item_ids)
    : users_(users),
      items_(items),
      entries_(std::move(entries)),
      by_user_(users),
      by_item_(items),
      user_ids_(std::move(user_ids)),
      item_ids_(std::move(item_ids)) {
  if (user_ids_.empty()) {
    for (std::size_t i = 0; i < users_; ++i) user_ids_.push_back(std::to_string(i));
  }
  if (item_ids_.empty()) {
    for (std::size_t j = 0; j < items_; ++j) item_ids_.push_back(std::to_string(j));
  }
  if (user_ids_.size() != users_ || item_ids_.size() != items_) {
    throw std::invalid_argument("identifier tables do not match matrix shape");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.user >= users_ || e.item >= items_) {
      throw std::invalid_argument("rating index out of range");
    }
    if (!(e.value >= 0.0 && e.value <= 1.0)) {
      throw std::invalid_argument("normalized rating outside [0,1]");
    }
    if (!seen.insert(pair_key(e.user, e.item)).second) {
      throw std::invalid_argument("duplicate (user, item) rating");
    }
    by_user_[e.user].push_back({e.item, e.value});
    by_item_[e.item].push_back({e.user, e.value});
  }
}

bool operator==(const RatingMatrix& a, const RatingMatrix& b) {
  if (a.users_ != b.users_ || a.items_ != b.items_ || a.user_ids_ != b.user_ids_ ||
      a.item_ids_ != b.item_ids_ || a.entries_.size() != b.entries_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.entries_.size(); ++k) {
    const auto& x = a.entries_[k];
    const auto& y = b.entries_[k];
    if (x.user != y.user || x.item != y.item || x.value != y.value) return false;
  }
  return true;
}

RatingMatrix parse_triplets(const std::string& text, const RatingScale& scale) {
  scale.validate();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  bool header_seen = false;
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, std::size_t> item_index;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<Rating> entries;
  std::unordered_set<std::uint64_t> seen;

  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto fields = split_commas(stripped);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "user" || fields[1] != "item" ||
          fields[2] != "rating") {
        throw DataError("line " + std::to_string(line_no) +
                            ": expected header 'user,item,rating'",
                        line_no);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError("line " + std::to_string(line_no) + ": malformed row", line_no);
    }
    double raw = 0.0;
    const auto* begin = fields[2].data();
    const auto* end = begin + fields[2].size();
    const auto parsed = std::from_chars(begin, end, raw);
    if (parsed.ec != std::errc() || parsed.ptr != end || !std::isfinite(raw)) {
      throw DataError("line " + std::to_string(line_no) + ": rating '" +
                          std::string(fields[2]) + "' is not a number",
                      line_no);
    }
    if (raw < scale.min_raw || raw > scale.max_raw) {
      throw DataError("line " + std::to_string(line_no) + ": rating " + format_double(raw) +
                          " outside scale [" + format_double(scale.min_raw) + ", " +
                          format_double(scale.max_raw) + "]",
                      line_no);
    }

    const std::string user(fields[0]);
    const std::string item(fields[1]);
    auto [uit, new_user] = user_index.try_emplace(user, user_ids.size());
    if (new_user) user_ids.push_back(user);
    auto [iit, new_item] = item_index.try_emplace(item, item_ids.size());
    if (new_item) item_ids.push_back(item);

    if (!seen.insert(pair_key(uit->second, iit->second)).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate rating for user '" +
                          user + "' and item '" + item + "'",
                      line_no);
    }
    entries.push_back({uit->second, iit->second, std::clamp(scale.normalize(raw), 0.0, 1.0)});
  }
  if (!header_seen) {
    throw DataError("missing header 'user,item,rating'", 0);
  }
  const auto users = user_ids.size();
  const auto items = item_ids.size();
  return RatingMatrix(users, items, std::move(entries), std::move(user_ids),
                      std::move(item_ids));
}

RatingMatrix load_triplets(const std::filesystem::path& path, const RatingScale& scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open ratings file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_triplets(buffer.str(), scale);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what(), e.line());
  }
}

void save_triplets(const std::filesystem::path& path, const RatingMatrix& matrix,
                   const RatingScale& scale) {
  scale.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "user,item,rating\n";
  for (const auto& e : matrix.entries()) {
    out << matrix.user_id(e.user) << ',' << matrix.item_id(e.item) << ','
        << format_double(scale.denormalize(e.value)) << '\n';
  }
}

void save_index_map(const std::filesystem::path& path, const RatingMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "index,original_id,kind\n";
  for (std::size_t i = 0; i < matrix.user_count(); ++i) {
    out << i << ',' << matrix.user_id(i) << ",user\n";
  }
  for (std::size_t j = 0; j < matrix.item_count(); ++j) {
    out << j << ',' << matrix.item_id(j) << ",item\n";
  }
}

double density(const RatingMatrix& matrix) {
  if (matrix.user_count() == 0 || matrix.item_count() == 0) {
    throw std::invalid_argument("density requires m > 0 and n > 0");
  }
  return static_cast<double>(matrix.size()) /
         (static_cast<double>(matrix.user_count()) * static_cast<double>(matrix.item_count()));
}

std::vector<double> distinct_levels(const RatingMatrix& matrix) {
  if (matrix.empty()) throw std::invalid_argument("distinct_levels: empty rating matrix");
  std::vector<double> levels;
  levels.reserve(matrix.size());
  for (const auto& e : matrix.entries()) levels.push_back(e.value);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

}  // namespace collabviz
