#include "svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "collabviz/ratings.hpp"

namespace collabviz::cli {

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                  "#bcbd22", "#17becf"};
constexpr std::size_t kShapes = 4;
constexpr double kMargin = 0.05;
constexpr double kLegendWidth = 180.0;
constexpr double kLegendRow = 18.0;
constexpr const char* kUserColor = "#9a9a9a";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// One marker of the given shape centered at (x, y), with optional child content.
std::string shape(std::size_t kind, double x, double y, double r, const char* fill,
                  const std::string& attrs, const std::string& inner = {}) {
  std::ostringstream s;
  const char* tag = "polygon";
  switch (kind % kShapes) {
    case 0:
      tag = "circle";
      s << "<circle " << attrs << " cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\""
        << num(r) << "\"";
      break;
    case 1:
      tag = "rect";
      s << "<rect " << attrs << " x=\"" << num(x - r) << "\" y=\"" << num(y - r)
        << "\" width=\"" << num(2 * r) << "\" height=\"" << num(2 * r) << "\"";
      break;
    case 2:
      s << "<polygon " << attrs << " points=\"" << num(x) << ',' << num(y - r) << ' '
        << num(x + r) << ',' << num(y + r) << ' ' << num(x - r) << ',' << num(y + r) << "\"";
      break;
    default:
      s << "<polygon " << attrs << " points=\"" << num(x) << ',' << num(y - r) << ' '
        << num(x + r) << ',' << num(y) << ' ' << num(x) << ',' << num(y + r) << ' '
        << num(x - r) << ',' << num(y) << "\"";
  }
  s << " fill=\"" << fill << '"';
  if (inner.empty()) {
    s << "/>";
  } else {
    s << '>' << inner << "</" << tag << '>';
  }
  return s.str();
}

}  // namespace

std::map<std::string, std::string> load_labels(const std::string& text) {
  std::map<std::string, std::string> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "item,category") throw DataError("missing header 'item,category'", line_no);
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size() ||
        line.find(',', comma + 1) != std::string::npos) {
      throw DataError("line " + std::to_string(line_no) + ": malformed label row", line_no);
    }
    labels[line.substr(0, comma)] = line.substr(comma + 1);
  }
  if (!header) throw DataError("missing header 'item,category'");
  return labels;
}

std::string render_svg(std::span<const EmbeddingRow> rows,
                       const std::map<std::string, std::string>& item_labels,
                       const PlotStyle& style, std::ostream& warn) {
  if (rows.empty()) throw std::invalid_argument("plot: embedding has no points");
  const std::size_t dim = rows.front().coords.size();
  if (dim != 2) {
    throw std::invalid_argument("plot: embedding has D=" + std::to_string(dim) +
                                "; plotting needs D=2 (re-run embed with --dim 2)");
  }
  if (!(style.width > 0.0) || !(style.height > 0.0) || !(style.point_radius > 0.0)) {
    throw std::invalid_argument("plot: width, height and point radius must be > 0");
  }

  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  std::set<std::string> item_ids;
  for (const auto& row : rows) {
    if (row.coords.size() != 2) throw std::invalid_argument("plot: rows differ in dimension");
    xmin = std::min(xmin, row.coords[0]);
    xmax = std::max(xmax, row.coords[0]);
    ymin = std::min(ymin, row.coords[1]);
    ymax = std::max(ymax, row.coords[1]);
    if (row.kind == "item") item_ids.insert(row.original_id);
  }
  for (const auto& [item, category] : item_labels) {
    if (!item_ids.contains(item)) {
      warn << "warning: label for unknown item '" << item << "' ignored\n";
    }
  }

  double span_x = xmax - xmin;
  double span_y = ymax - ymin;
  if (span_x <= 0.0) span_x = 1.0;
  if (span_y <= 0.0) span_y = 1.0;
  const double x0 = xmin - kMargin * span_x;
  const double y1 = ymax + kMargin * span_y;
  const double data_w = span_x * (1.0 + 2.0 * kMargin);
  const double data_h = span_y * (1.0 + 2.0 * kMargin);
  // One scale for both axes so distances are not distorted.
  const double scale = std::min(style.width / data_w, style.height / data_h);
  const double plot_w = data_w * scale;
  const double plot_h = data_h * scale;
  const auto px = [&](double x) { return (x - x0) * scale; };
  const auto py = [&](double y) { return (y1 - y) * scale; };

  std::vector<std::string> categories;
  std::map<std::string, std::size_t> category_index;
  const auto category_of = [&](const EmbeddingRow& row) {
    std::string cat = "items";
    if (!item_labels.empty()) {
      const auto it = item_labels.find(row.original_id);
      cat = it == item_labels.end() ? "uncategorized" : it->second;
    }
    auto [pos, inserted] = category_index.try_emplace(cat, categories.size());
    if (inserted) categories.push_back(cat);
    return pos->second;
  };

  const double r = style.point_radius;
  std::ostringstream users;
  std::ostringstream items;
  for (const auto& row : rows) {
    const double x = px(row.coords[0]);
    const double y = py(row.coords[1]);
    if (row.kind == "user") {
      users << "  <circle class=\"marker user\" cx=\"" << num(x) << "\" cy=\"" << num(y)
            << "\" r=\"" << num(r * 0.6) << "\" fill=\"" << kUserColor << "\"><title>"
            << escape(row.original_id) << "</title></circle>\n";
    } else {
      const std::size_t c = category_of(row);
      items << "  "
            << shape(c, x, y, r, kPalette[c % kPalette.size()],
                     "class=\"marker item\" data-category=\"" + escape(categories[c]) + '"',
                     "<title>" + escape(row.original_id) + "</title>")
            << '\n';
    }
  }

  const double total_w = plot_w + kLegendWidth;
  const double total_h = std::max(plot_h, kLegendRow * static_cast<double>(categories.size() + 2));
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(total_w) << "\" height=\""
      << num(total_h) << "\" viewBox=\"0 0 " << num(total_w) << ' ' << num(total_h) << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"white\" stroke=\"#cccccc\"/>\n"
      << users.str() << items.str() << "  <g class=\"legend\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  const double lx = plot_w + 16.0;
  double ly = kLegendRow;
  svg << "    <g class=\"legend-users\">"
      << "<circle cx=\"" << num(lx) << "\" cy=\"" << num(ly) << "\" r=\"" << num(r * 0.6)
      << "\" fill=\"" << kUserColor << "\"/><text x=\"" << num(lx + 12.0) << "\" y=\""
      << num(ly + 4.0) << "\">users</text></g>\n";
  for (std::size_t c = 0; c < categories.size(); ++c) {
    ly += kLegendRow;
    svg << "    <g class=\"legend-entry\">"
        << shape(c, lx, ly, r, kPalette[c % kPalette.size()], "class=\"swatch\"")
        << "<text x=\"" << num(lx + 12.0) << "\" y=\"" << num(ly + 4.0) << "\">"
        << escape(categories[c]) << "</text></g>\n";
  }
  svg << "  </g>\n</svg>\n";
  return svg.str();
}

}  // namespace collabviz::cli
