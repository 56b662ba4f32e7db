#include "forge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/errors.hpp"

namespace forge::geom {

std::size_t PixelMask::foreground_count() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

PixelMask PixelMask::blank(int width, int height) {
    PixelMask m;
    m.width = width;
    m.height = height;
    m.bits.assign(static_cast<std::size_t>(width) * height, 0);
    return m;
}

std::vector<int> rle_encode(const PixelMask& mask) {
    std::vector<int> counts;
    std::uint8_t current = 0;  // encoding starts with a background run
    int run = 0;
    for (std::uint8_t b : mask.bits) {
        std::uint8_t v = b ? 1 : 0;
        if (v == current) {
            ++run;
        } else {
            counts.push_back(run);
            current = v;
            run = 1;
        }
    }
    counts.push_back(run);
    return counts;
}

PixelMask rle_decode(int width, int height, const std::vector<int>& counts) {
    if (width < 1 || height < 1) throw ValidationError("rle_decode: non-positive dimensions");
    const std::size_t total = static_cast<std::size_t>(width) * height;
    std::size_t sum = 0;
    for (int c : counts) {
        if (c < 0) throw ValidationError("rle_decode: negative run count");
        sum += static_cast<std::size_t>(c);
    }
    if (sum != total) throw ValidationError("rle_decode: runs do not sum to width*height");
    PixelMask m = PixelMask::blank(width, height);
    std::size_t pos = 0;
    std::uint8_t value = 0;
    for (int c : counts) {
        std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(pos), c, value);
        pos += static_cast<std::size_t>(c);
        value ^= 1;
    }
    return m;
}

BBox mask_to_bbox(const PixelMask& mask) {
    int x_min = mask.width, y_min = mask.height, x_max = -1, y_max = -1;
    for (int y = 0; y < mask.height; ++y) {
        const std::uint8_t* row = mask.bits.data() + static_cast<std::size_t>(y) * mask.width;
        for (int x = 0; x < mask.width; ++x) {
            if (!row[x]) continue;
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max < 0) throw EmptyMask();
    return BBox{x_min, y_min, x_max, y_max};
}

Point2D sample_point_in_mask(const PixelMask& mask, Rng& rng) {
    const std::size_t fg = mask.foreground_count();
    if (fg == 0) throw EmptyMask();
    std::size_t k = rng.uniform_index(fg);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!mask.bits[i]) continue;
        if (k == 0) {
            return Point2D{static_cast<int>(i % mask.width), static_cast<int>(i / mask.width)};
        }
        --k;
    }
    throw EmptyMask();  // unreachable
}

Point2D mask_centroid_pixel(const PixelMask& mask) {
    std::int64_t sx = 0, sy = 0, n = 0;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            sx += x;
            sy += y;
            ++n;
        }
    }
    if (n == 0) throw EmptyMask();
    return Point2D{static_cast<int>(round_half_away(static_cast<double>(sx) / n)),
                   static_cast<int>(round_half_away(static_cast<double>(sy) / n))};
}

double bbox_iou(const BBox& a, const BBox& b) {
    const int ix_min = std::max(a.x_min, b.x_min);
    const int iy_min = std::max(a.y_min, b.y_min);
    const int ix_max = std::min(a.x_max, b.x_max);
    const int iy_max = std::min(a.y_max, b.y_max);
    std::int64_t inter = 0;
    if (ix_min <= ix_max && iy_min <= iy_max) {
        inter = static_cast<std::int64_t>(ix_max - ix_min + 1) * (iy_max - iy_min + 1);
    }
    const std::int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::int64_t round_half_away(double v) {
    return static_cast<std::int64_t>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

namespace {

int norm_1d(int v, int side) {
    if (side <= 1) return 0;
    return static_cast<int>(round_half_away(static_cast<double>(v) / (side - 1) * 1000.0));
}

int denorm_1d(int n, int side) {
    if (side <= 1) return 0;
    return static_cast<int>(round_half_away(static_cast<double>(n) / 1000.0 * (side - 1)));
}

void check_inside(const Point2D& p, int width, int height) {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
        throw OutOfBounds("point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                          ") outside " + std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace

NormCoord normalize_point(const Point2D& p, int width, int height) {
    check_inside(p, width, height);
    return NormCoord{norm_1d(p.x, width), norm_1d(p.y, height)};
}

Point2D denormalize_point(const NormCoord& n, int width, int height) {
    if (n.x < 0 || n.x > 1000 || n.y < 0 || n.y > 1000)
        throw OutOfBounds("normalized coordinate outside [0,1000]");
    return Point2D{denorm_1d(n.x, width), denorm_1d(n.y, height)};
}

NormBox normalize_bbox(const BBox& b, int width, int height) {
    check_inside(Point2D{b.x_min, b.y_min}, width, height);
    check_inside(Point2D{b.x_max, b.y_max}, width, height);
    return NormBox{norm_1d(b.x_min, width), norm_1d(b.y_min, height),
                   norm_1d(b.x_max, width), norm_1d(b.y_max, height)};
}

BBox denormalize_bbox(const NormBox& n, int width, int height) {
    if (n.x_min < 0 || n.x_max > 1000 || n.y_min < 0 || n.y_max > 1000)
        throw OutOfBounds("normalized box outside [0,1000]");
    return BBox{denorm_1d(n.x_min, width), denorm_1d(n.y_min, height),
                denorm_1d(n.x_max, width), denorm_1d(n.y_max, height)};
}

}  // namespace forge::geom
