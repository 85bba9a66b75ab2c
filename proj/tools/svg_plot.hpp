#ifndef COLLABVIZ_TOOLS_SVG_PLOT_HPP_
#define COLLABVIZ_TOOLS_SVG_PLOT_HPP_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "collabviz/embedding.hpp"

namespace collabviz::cli {

struct PlotStyle {
  double width = 800.0;  // bounds for the plot area, in px
  double height = 600.0;
  double point_radius = 3.0;
};

/// Users are small gray dots. Items get one shape/color pair per category,
/// cycling through circle, square, triangle, diamond and a ten-color palette.
/// Categories are ordered by first appearance among the items.
/// Every point is one element with class "marker user" or "marker item";
/// each item category has one `<g class="legend-entry">`.
///
/// `item_labels` maps original item ids to categories. When it is empty all
/// items share the category "items". Items missing from a non-empty map go
/// to "uncategorized"; labels naming unknown items are reported on `warn`.
/// Throws std::invalid_argument unless D = 2.
std::string render_svg(std::span<const EmbeddingRow> rows,
                       const std::map<std::string, std::string>& item_labels,
                       const PlotStyle& style, std::ostream& warn);

/// Reads an `item,category` CSV (header required).
std::map<std::string, std::string> load_labels(const std::string& text);

}  // namespace collabviz::cli

#endif  // COLLABVIZ_TOOLS_SVG_PLOT_HPP_
