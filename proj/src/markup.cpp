#include "forge/markup.hpp"

#include <regex>

#include "forge/errors.hpp"

namespace forge::markup {

namespace {

const std::regex kPointRe(R"(<point>\[\[(\d{1,4}), (\d{1,4})\]\]</point>)");
const std::regex kBoxRe(R"(<box>\[\[(\d{1,4}), (\d{1,4}), (\d{1,4}), (\d{1,4})\]\]</box>)");

int to_coord(const std::string& s) {
    int v = std::stoi(s);
    if (v < 0 || v > 1000) throw MalformedMarkup("coordinate " + s + " outside [0,1000]");
    return v;
}

}  // namespace

std::string render_point(const geom::NormCoord& p) {
    return "<point>[[" + std::to_string(p.x) + ", " + std::to_string(p.y) + "]]</point>";
}

std::string render_box(const geom::NormBox& b) {
    return "<box>[[" + std::to_string(b.x_min) + ", " + std::to_string(b.y_min) + ", " +
           std::to_string(b.x_max) + ", " + std::to_string(b.y_max) + "]]</box>";
}

std::string render(const Geometry& g) {
    if (std::holds_alternative<geom::NormCoord>(g)) return render_point(std::get<geom::NormCoord>(g));
    return render_box(std::get<geom::NormBox>(g));
}

Geometry parse(const std::string& text) {
    std::smatch m;
    if (std::regex_match(text, m, kPointRe)) {
        return geom::NormCoord{to_coord(m[1]), to_coord(m[2])};
    }
    if (std::regex_match(text, m, kBoxRe)) {
        return geom::NormBox{to_coord(m[1]), to_coord(m[2]), to_coord(m[3]), to_coord(m[4])};
    }
    throw MalformedMarkup("unparseable markup: " + text);
}

bool contains_markup(const std::string& text) {
    return std::regex_search(text, kPointRe) || std::regex_search(text, kBoxRe);
}

Geometry parse_first(const std::string& text) {
    std::smatch m;
    if (std::regex_search(text, m, kPointRe)) {
        return geom::NormCoord{to_coord(m[1]), to_coord(m[2])};
    }
    if (std::regex_search(text, m, kBoxRe)) {
        return geom::NormBox{to_coord(m[1]), to_coord(m[2]), to_coord(m[3]), to_coord(m[4])};
    }
    throw MalformedMarkup("no markup span in: " + text);
}

}  // namespace forge::markup
