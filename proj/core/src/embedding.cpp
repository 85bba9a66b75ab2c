#include "collabviz/embedding.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace collabviz {

Embedding::Embedding(std::size_t users, std::size_t items, std::size_t dim)
    : users_(users), items_(items), dim_(dim), coords_((users + items) * dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be >= 1");
}

bool Embedding::all_finite() const {
  for (double c : coords_) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

void normalize(Embedding& emb) {
  const std::size_t points = emb.point_count();
  const std::size_t dim = emb.dim();
  if (points < 2) throw std::invalid_argument("normalize needs at least 2 points");

  std::vector<double> mean(dim, 0.0);
  for (std::size_t k = 0; k < points; ++k) {
    const auto p = emb.point(k);
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  }
  for (double& m : mean) m /= static_cast<double>(points);

  // The centered sums also give the rounding residual of the mean, removed
  // in the scaling pass; it matters when the offset dwarfs the spread.
  double sq = 0.0;
  std::vector<double> residual(dim, 0.0);
  for (std::size_t k = 0; k < points; ++k) {
    auto p = emb.point(k);
    for (std::size_t d = 0; d < dim; ++d) {
      p[d] -= mean[d];
      residual[d] += p[d];
      sq += p[d] * p[d];
    }
  }
  for (double& r : residual) {
    r /= static_cast<double>(points);
    sq -= static_cast<double>(points) * r * r;
  }
  const double variance = sq / static_cast<double>(points * dim);
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::domain_error("normalize: points have zero (or non-finite) spread");
  }
  const double scale = 1.0 / std::sqrt(variance);
  for (std::size_t k = 0; k < points; ++k) {
    auto p = emb.point(k);
    for (std::size_t d = 0; d < dim; ++d) p[d] = (p[d] - residual[d]) * scale;
  }
}

Embedding normalized(Embedding emb) {
  normalize(emb);
  return emb;
}

std::string format_embedding(const Embedding& emb, std::span<const std::string> user_ids,
                             std::span<const std::string> item_ids) {
  if (user_ids.size() != emb.user_count() || item_ids.size() != emb.item_count()) {
    throw std::invalid_argument("format_embedding: id tables do not match embedding");
  }
  std::string out = "kind\tindex\toriginal_id";
  for (std::size_t d = 1; d <= emb.dim(); ++d) out += "\tx_" + std::to_string(d);
  out += '\n';
  char buf[32];
  const auto emit = [&](const char* kind, std::size_t index, const std::string& id,
                        std::span<const double> p) {
    out += kind;
    out += '\t' + std::to_string(index) + '\t' + id;
    for (double c : p) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), c);
      out += '\t';
      out.append(buf, res.ptr);
    }
    out += '\n';
  };
  for (std::size_t i = 0; i < emb.user_count(); ++i) emit("user", i, user_ids[i], emb.user(i));
  for (std::size_t j = 0; j < emb.item_count(); ++j) emit("item", j, item_ids[j], emb.item(j));
  return out;
}

void save_embedding(const std::filesystem::path& path, const Embedding& emb,
                    const RatingMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << format_embedding(emb, matrix.user_ids(), matrix.item_ids());
}

std::vector<EmbeddingRow> load_embedding_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file '" + path.string() + "'");
  std::vector<EmbeddingRow> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (line_no == 1) {
      if (fields.size() < 4 || fields[0] != "kind") {
        throw DataError(path.string() + ": missing embedding header", 1);
      }
      dim = fields.size() - 3;
      continue;
    }
    if (fields.size() != dim + 3 || (fields[0] != "user" && fields[0] != "item")) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": malformed row",
                      line_no);
    }
    EmbeddingRow row;
    row.kind = fields[0];
    row.index = std::stoul(fields[1]);
    row.original_id = fields[2];
    for (std::size_t d = 0; d < dim; ++d) {
      const auto& f = fields[3 + d];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) +
                            ": bad coordinate '" + f + "'",
                        line_no);
      }
      row.coords.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace collabviz
