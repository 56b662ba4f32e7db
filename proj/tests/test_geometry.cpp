#include <doctest.h>

#include <algorithm>

#include "forge/errors.hpp"
#include "forge/geometry.hpp"

using namespace forge;
using namespace forge::geom;

namespace {

// Independent full-scan oracle; deliberately shares no code with
// mask_to_bbox.
BBox scan_bbox_oracle(const PixelMask& m) {
    int xmin = 1 << 30, ymin = 1 << 30, xmax = -1, ymax = -1;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.bits[static_cast<std::size_t>(y) * m.width + x]) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    REQUIRE(xmax >= 0);
    return BBox{xmin, ymin, xmax, ymax};
}

PixelMask random_mask(Rng& rng, int w, int h, double density) {
    PixelMask m = PixelMask::blank(w, h);
    for (auto& b : m.bits) b = rng.uniform() < density ? 1 : 0;
    return m;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("mask_to_bbox degenerate and full-extent cases") {
    PixelMask m = PixelMask::blank(8, 8);
    m.set(3, 5);
    CHECK(mask_to_bbox(m) == BBox{3, 5, 3, 5});

    PixelMask full = PixelMask::blank(4, 4);
    std::fill(full.bits.begin(), full.bits.end(), 1);
    CHECK(mask_to_bbox(full) == BBox{0, 0, 3, 3});

    CHECK_THROWS_AS(mask_to_bbox(PixelMask::blank(4, 4)), EmptyMask);
}

TEST_CASE("mask_to_bbox equals the scan oracle on random masks") {
    Rng rng(2024);
    int tested = 0;
    while (tested < 1200) {
        const int w = 1 + static_cast<int>(rng.uniform_index(64));
        const int h = 1 + static_cast<int>(rng.uniform_index(64));
        PixelMask m = random_mask(rng, w, h, 0.15);
        if (m.foreground_count() == 0) continue;
        CHECK(mask_to_bbox(m) == scan_bbox_oracle(m));
        ++tested;
    }
}

TEST_CASE("bbox minimality: every extreme row/column holds a foreground pixel") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        PixelMask m = random_mask(rng, 32, 32, 0.1);
        if (m.foreground_count() == 0) continue;
        const BBox b = mask_to_bbox(m);
        auto column_has_fg = [&](int x) {
            for (int y = b.y_min; y <= b.y_max; ++y)
                if (m.at(x, y)) return true;
            return false;
        };
        auto row_has_fg = [&](int y) {
            for (int x = b.x_min; x <= b.x_max; ++x)
                if (m.at(x, y)) return true;
            return false;
        };
        CHECK(column_has_fg(b.x_min));
        CHECK(column_has_fg(b.x_max));
        CHECK(row_has_fg(b.y_min));
        CHECK(row_has_fg(b.y_max));
    }
}

TEST_CASE("sample_point_in_mask single candidate and determinism") {
    PixelMask m = PixelMask::blank(10, 5);
    m.set(7, 2);
    Rng rng(1);
    CHECK(sample_point_in_mask(m, rng) == Point2D{7, 2});

    PixelMask big = random_mask(rng, 40, 40, 0.2);
    Rng r1(99), r2(99);
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_point_in_mask(big, r1) == sample_point_in_mask(big, r2));
    }
    CHECK_THROWS_AS([&] { Rng r(0); sample_point_in_mask(PixelMask::blank(3, 3), r); }(), EmptyMask);
}

TEST_CASE("sample_point_in_mask is uniform over two pixels") {
    PixelMask m = PixelMask::blank(16, 16);
    m.set(2, 3);
    m.set(12, 9);
    Rng rng(777);
    int first = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        if (sample_point_in_mask(m, rng) == Point2D{2, 3}) ++first;
    }
    const double freq = static_cast<double>(first) / n;
    CHECK(freq >= 0.47);
    CHECK(freq <= 0.53);
}

TEST_CASE("sampled points are always foreground") {
    Rng rng(31);
    for (int i = 0; i < 300; ++i) {
        PixelMask m = random_mask(rng, 24, 24, 0.08);
        if (m.foreground_count() == 0) continue;
        const Point2D p = sample_point_in_mask(m, rng);
        CHECK(m.at(p.x, p.y));
    }
}

TEST_CASE("bbox_iou basics") {
    const BBox a{2, 2, 5, 5};
    CHECK(bbox_iou(a, a) == doctest::Approx(1.0));
    CHECK(bbox_iou(a, BBox{10, 10, 12, 12}) == doctest::Approx(0.0));
    // 1 px overlap, union 4+4-1=7 px.
    CHECK(bbox_iou(BBox{0, 0, 1, 1}, BBox{1, 1, 2, 2}) == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("bbox_iou symmetry and monotonicity") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const auto rand_box = [&] {
            const int x0 = static_cast<int>(rng.uniform_index(20));
            const int y0 = static_cast<int>(rng.uniform_index(20));
            return BBox{x0, y0, x0 + static_cast<int>(rng.uniform_index(10)),
                        y0 + static_cast<int>(rng.uniform_index(10))};
        };
        const BBox a = rand_box(), b = rand_box();
        CHECK(bbox_iou(a, b) == doctest::Approx(bbox_iou(b, a)));
        const double iou = bbox_iou(a, b);
        CHECK(iou >= 0.0);
        CHECK(iou <= 1.0);
    }
    // Sliding a box away shrinks the intersection and never raises the IoU.
    const BBox base{0, 0, 9, 9};
    double prev = 1.0;
    for (int shift = 0; shift <= 12; ++shift) {
        const double iou = bbox_iou(base, BBox{shift, 0, shift + 9, 9});
        CHECK(iou <= prev + 1e-12);
        prev = iou;
    }
}

TEST_CASE("normalization fixed points and the 448 example") {
    CHECK(normalize_point(Point2D{500, 0}, 1001, 1001).x == 500);
    const NormCoord n = normalize_point(Point2D{224, 224}, 448, 448);
    CHECK(n.x == 501);  // round(224/447*1000)
    CHECK(n.y == 501);
    CHECK(normalize_point(Point2D{0, 0}, 448, 448) == NormCoord{0, 0});
    CHECK(normalize_point(Point2D{447, 447}, 448, 448) == NormCoord{1000, 1000});
    CHECK_THROWS_AS(normalize_point(Point2D{448, 0}, 448, 448), OutOfBounds);
}

TEST_CASE("round half away from zero") {
    CHECK(round_half_away(0.5) == 1);
    CHECK(round_half_away(1.5) == 2);
    CHECK(round_half_away(-0.5) == -1);
    CHECK(round_half_away(2.4) == 2);
    CHECK(round_half_away(-2.6) == -3);
}

TEST_CASE("normalize/denormalize round trip within one pixel (sampled sides)") {
    // The exhaustive scan over every side <= 4096 runs in the acceptance
    // suite; unit coverage takes all small sides plus a few large ones.
    for (int side = 1; side <= 600; ++side) {
        for (int x = 0; x < side; x += (side > 64 ? 7 : 1)) {
            const NormCoord n = normalize_point(Point2D{x, 0}, side, 1);
            const Point2D back = denormalize_point(n, side, 1);
            CHECK(std::abs(back.x - x) <= 1);
        }
    }
    for (int side : {1024, 2048, 3333, 4096}) {
        for (int x = 0; x < side; x += 11) {
            const NormCoord n = normalize_point(Point2D{x, 0}, side, 1);
            CHECK(std::abs(denormalize_point(n, side, 1).x - x) <= 1);
        }
    }
}

TEST_CASE("normalized boxes preserve ordering") {
    const NormBox nb = normalize_bbox(BBox{10, 20, 200, 150}, 448, 448);
    CHECK(nb.x_min <= nb.x_max);
    CHECK(nb.y_min <= nb.y_max);
    const BBox back = denormalize_bbox(nb, 448, 448);
    CHECK(std::abs(back.x_min - 10) <= 1);
    CHECK(std::abs(back.y_max - 150) <= 1);
}

TEST_CASE("rle round trips bit-exactly and starts with a background run") {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        const int w = 1 + static_cast<int>(rng.uniform_index(40));
        const int h = 1 + static_cast<int>(rng.uniform_index(40));
        const PixelMask m = random_mask(rng, w, h, rng.uniform());
        const auto counts = rle_encode(m);
        const PixelMask back = rle_decode(w, h, counts);
        CHECK(back.bits == m.bits);
        long long sum = 0;
        for (int c : counts) sum += c;
        CHECK(sum == static_cast<long long>(w) * h);
    }

    PixelMask leading = PixelMask::blank(4, 1);
    leading.set(0, 0);
    const auto counts = rle_encode(leading);
    REQUIRE(counts.size() >= 2);
    CHECK(counts[0] == 0);  // background run first, possibly empty

    CHECK_THROWS_AS(rle_decode(4, 4, {3, 3}), ValidationError);
    CHECK_THROWS_AS(rle_decode(4, 4, {-1, 17}), ValidationError);
}

}  // TEST_SUITE
