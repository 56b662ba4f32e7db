#pragma once

#include <string>
#include <variant>

#include "forge/geometry.hpp"

namespace forge::markup {

/// Geometry payload carried by grounding answers.
using Geometry = std::variant<geom::NormCoord, geom::NormBox>;

/// "<point>[[x, y]]</point>"
std::string render_point(const geom::NormCoord& p);
/// "<box>[[x1, y1, x2, y2]]</box>"
std::string render_box(const geom::NormBox& b);
std::string render(const Geometry& g);

/// Parses the exact formats above (whitespace after commas required).
/// Throws MalformedMarkup on anything else, including out-of-range values.
Geometry parse(const std::string& text);

/// True when `text` contains a parseable markup span.
bool contains_markup(const std::string& text);

/// Extracts and parses the first markup span inside a longer string.
Geometry parse_first(const std::string& text);

}  // namespace forge::markup
