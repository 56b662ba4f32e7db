#pragma once

#include <cstdint>
#include <vector>

#include "forge/rng.hpp"

namespace forge::geom {

/// Row-major boolean raster. bits.size() == width * height.
struct PixelMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t foreground_count() const;

    static PixelMask blank(int width, int height);
};

/// Inclusive pixel box, origin top-left, x rightward, y downward.
struct BBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    std::int64_t area() const {
        return static_cast<std::int64_t>(x_max - x_min + 1) * (y_max - y_min + 1);
    }
    bool operator==(const BBox&) const = default;
};

struct Point2D {
    int x = 0, y = 0;
    bool operator==(const Point2D&) const = default;
};

/// Resolution-invariant coordinate, both components in [0, 1000].
struct NormCoord {
    int x = 0, y = 0;
    bool operator==(const NormCoord&) const = default;
};

struct NormBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    bool operator==(const NormBox&) const = default;
};

/// Run-length encoding: alternating background/foreground run counts in
/// row-major order, starting with a background run (which may be 0). Runs sum
/// to width*height.
std::vector<int> rle_encode(const PixelMask& mask);
PixelMask rle_decode(int width, int height, const std::vector<int>& counts);

/// Minimal axis-aligned box enclosing every foreground pixel.
/// Throws EmptyMask when the mask has no foreground.
BBox mask_to_bbox(const PixelMask& mask);

/// Uniform draw over foreground pixels. Throws EmptyMask.
Point2D sample_point_in_mask(const PixelMask& mask, Rng& rng);

/// Centroid of the foreground, rounded to the nearest pixel (used by the
/// optional centroid point mode; not guaranteed to lie inside the mask for
/// concave shapes, so callers snap to the nearest foreground pixel).
Point2D mask_centroid_pixel(const PixelMask& mask);

/// Intersection-over-union with inclusive pixel areas. Symmetric, in [0,1].
double bbox_iou(const BBox& a, const BBox& b);

/// round(v) with halves away from zero, the project-wide convention.
std::int64_t round_half_away(double v);

/// Pixel -> [0,1000] with denominator (side-1) so corner pixels map exactly
/// to 0 and 1000. A side of 1 maps its single pixel to 0.
/// Throws OutOfBounds when p lies outside the image.
NormCoord normalize_point(const Point2D& p, int width, int height);
Point2D denormalize_point(const NormCoord& n, int width, int height);
NormBox normalize_bbox(const BBox& b, int width, int height);
BBox denormalize_bbox(const NormBox& n, int width, int height);

}  // namespace forge::geom
