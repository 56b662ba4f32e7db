#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "forge/errors.hpp"
#include "forge/grounding.hpp"

using namespace forge;
using namespace forge::grounding;

namespace {

MaskRecord make_record(const std::string& id, int w, int h, double quality,
                       const std::function<bool(int, int)>& fg) {
    MaskRecord r;
    r.image_id = id;
    r.width = w;
    r.height = h;
    r.quality_score = quality;
    r.mask = geom::PixelMask::blank(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (fg(x, y)) r.mask.set(x, y);
        }
    }
    return r;
}

std::vector<std::string> dump_all(const std::vector<GroundingSample>& samples) {
    std::vector<std::string> lines;
    for (const auto& s : samples) lines.push_back(s.to_json().dump());
    return lines;
}

}  // namespace

TEST_SUITE("grounding") {

TEST_CASE("filter_by_quality keeps exactly score >= threshold, order preserved") {
    std::vector<MaskRecord> records;
    for (double q : {0.95, 0.9, 0.89})
        records.push_back(make_record("r" + std::to_string(q), 4, 4, q,
                                      [](int, int) { return true; }));
    const auto kept = filter_by_quality(records, 0.9);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].quality_score == doctest::Approx(0.95));
    CHECK(kept[1].quality_score == doctest::Approx(0.9));

    CHECK(filter_by_quality(records, 0.0).size() == records.size());
    CHECK(filter_by_quality(records, 1.0).empty());

    // Oracle: plain linear scan with the predicate.
    Rng rng(4);
    std::vector<MaskRecord> batch;
    for (int i = 0; i < 200; ++i)
        batch.push_back(make_record("b" + std::to_string(i), 2, 2, rng.uniform(),
                                    [](int, int) { return true; }));
    const auto out = filter_by_quality(batch, 0.5);
    std::vector<std::string> expected;
    for (const auto& r : batch) {
        if (r.quality_score >= 0.5) expected.push_back(r.image_id);
    }
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].image_id == expected[i]);
}

TEST_CASE("markup renders and parses the published example") {
    CHECK(markup::render_point({500, 500}) == "<point>[[500, 500]]</point>");
    const auto g = markup::parse("<point>[[701, 374]]</point>");
    CHECK(std::get<geom::NormCoord>(g) == geom::NormCoord{701, 374});

    const auto b = markup::parse("<box>[[10, 20, 30, 40]]</box>");
    CHECK(std::get<geom::NormBox>(b) == geom::NormBox{10, 20, 30, 40});

    CHECK_THROWS_AS(markup::parse("<point>[[701, 374]]"), MalformedMarkup);
    CHECK_THROWS_AS(markup::parse("<point>[[701]]</point>"), MalformedMarkup);
    CHECK_THROWS_AS(markup::parse("<point>[[1001, 0]]</point>"), MalformedMarkup);
    CHECK_THROWS_AS(markup::parse("plain text"), MalformedMarkup);
}

TEST_CASE("markup round trip is the identity") {
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        if (rng.uniform() < 0.5) {
            const geom::NormCoord p{static_cast<int>(rng.uniform_index(1001)),
                                    static_cast<int>(rng.uniform_index(1001))};
            CHECK(std::get<geom::NormCoord>(markup::parse(markup::render_point(p))) == p);
        } else {
            const int x0 = static_cast<int>(rng.uniform_index(900));
            const int y0 = static_cast<int>(rng.uniform_index(900));
            const geom::NormBox b{x0, y0, x0 + static_cast<int>(rng.uniform_index(100)),
                                  y0 + static_cast<int>(rng.uniform_index(100))};
            CHECK(std::get<geom::NormBox>(markup::parse(markup::render_box(b))) == b);
        }
    }
}

TEST_CASE("full-image mask yields the full normalized box") {
    std::vector<MaskRecord> records = {
        make_record("full", 32, 32, 1.0, [](int, int) { return true; })};
    GenOptions opts;
    opts.seed = 1;
    opts.box_weight = 1.0;
    opts.point_weight = 0.0;
    opts.text_weight = 0.0;
    TemplateCaptionProvider provider;
    const auto samples = generate_grounding_samples(records, provider, opts);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].task_kind == TaskKind::box_from_text);
    CHECK(samples[0].answer == "<box>[[0, 0, 1000, 1000]]</box>");
}

TEST_CASE("emitted geometry matches the mask-derived oracle") {
    const auto records = synth_mask_records(400, 21);
    GenOptions opts;
    opts.seed = 5;
    opts.apply_filter = false;
    TemplateCaptionProvider provider;
    GenStats stats;
    const auto samples = generate_grounding_samples(records, provider, opts, &stats);
    CHECK(stats.emitted == samples.size());
    CHECK(stats.emitted + stats.skipped_empty == records.size());
    CHECK(stats.skipped_empty > 0);  // the synthetic corpus plants some empties

    std::size_t points = 0, boxes = 0;
    std::size_t idx = 0;
    for (const auto& rec : records) {
        if (rec.mask.foreground_count() == 0) continue;
        const auto& s = samples[idx++];
        REQUIRE(s.image_id == rec.image_id);
        const geom::BBox want_box = geom::mask_to_bbox(rec.mask);
        if (std::holds_alternative<geom::NormBox>(s.norm_geometry)) {
            ++boxes;
            CHECK(std::get<geom::NormBox>(s.norm_geometry) ==
                  geom::normalize_bbox(want_box, rec.width, rec.height));
        } else {
            ++points;
            // Denormalized point lands inside the mask box within the 1 px
            // rounding bound; the sampled pixel itself was foreground.
            const auto p = std::get<geom::NormCoord>(s.norm_geometry);
            const geom::Point2D back = geom::denormalize_point(p, rec.width, rec.height);
            CHECK(back.x >= want_box.x_min - 1);
            CHECK(back.x <= want_box.x_max + 1);
            CHECK(back.y >= want_box.y_min - 1);
            CHECK(back.y <= want_box.y_max + 1);
        }
        // Markup embedded in the record parses back to the stored geometry.
        const std::string& with_markup =
            s.task_kind == TaskKind::text_from_coords ? s.question : s.answer;
        CHECK(markup::parse_first(with_markup) == s.norm_geometry);
    }
    CHECK(points > 0);
    CHECK(boxes > 0);
}

TEST_CASE("generation is deterministic and independent of the job count") {
    const auto records = synth_mask_records(300, 3);
    TemplateCaptionProvider provider;
    GenOptions opts;
    opts.seed = 123;
    const auto a = dump_all(generate_grounding_samples(records, provider, opts));
    const auto b = dump_all(generate_grounding_samples(records, provider, opts));
    CHECK(a == b);
    GenOptions parallel = opts;
    parallel.jobs = 4;
    CHECK(dump_all(generate_grounding_samples(records, provider, parallel)) == a);
}

TEST_CASE("kind proportions track the configured mix within 2 percent") {
    const auto records = synth_mask_records(12000, 17);
    TemplateCaptionProvider provider;
    GenOptions opts;
    opts.seed = 31;
    opts.apply_filter = false;
    opts.jobs = 4;
    const auto samples = generate_grounding_samples(records, provider, opts);
    REQUIRE(samples.size() >= 10000);
    double box = 0, point = 0, text = 0;
    for (const auto& s : samples) {
        if (s.task_kind == TaskKind::box_from_text) ++box;
        if (s.task_kind == TaskKind::point_from_text) ++point;
        if (s.task_kind == TaskKind::text_from_coords) ++text;
    }
    const double n = static_cast<double>(samples.size());
    CHECK(std::abs(box / n - 0.4) < 0.02);
    CHECK(std::abs(point / n - 0.4) < 0.02);
    CHECK(std::abs(text / n - 0.2) < 0.02);
}

TEST_CASE("questions come from the per-kind template tables") {
    const auto records = synth_mask_records(60, 8);
    TemplateCaptionProvider provider;
    GenOptions opts;
    opts.seed = 77;
    opts.apply_filter = false;
    for (const auto& s : generate_grounding_samples(records, provider, opts)) {
        bool matched = false;
        for (const auto& tmpl : question_templates(s.task_kind)) {
            const auto brace = tmpl.find('{');
            if (s.question.rfind(tmpl.substr(0, brace), 0) == 0) {
                matched = true;
                break;
            }
        }
        CHECK(matched);
    }
}

TEST_CASE("caption on the record overrides the template provider") {
    auto rec = make_record("cap", 8, 8, 1.0, [](int x, int y) { return x == y; });
    rec.caption = "the chipped blue mug";
    TemplateCaptionProvider provider;
    GenOptions opts;
    opts.seed = 2;
    opts.box_weight = 1.0;
    opts.point_weight = 0.0;
    opts.text_weight = 0.0;
    const auto samples = generate_grounding_samples({rec}, provider, opts);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].question.find("the chipped blue mug") != std::string::npos);
}

TEST_CASE("mask record json round trip") {
    auto rec = make_record("img7", 12, 9, 0.93, [](int x, int y) { return (x + y) % 3 == 0; });
    const auto j = rec.to_json();
    const auto back = MaskRecord::from_json(j);
    CHECK(back.image_id == rec.image_id);
    CHECK(back.mask.bits == rec.mask.bits);
    CHECK(back.quality_score == doctest::Approx(rec.quality_score));
}

TEST_CASE("centroid point mode snaps to foreground on a ring mask") {
    auto rec = make_record("ring", 33, 33, 1.0, [](int x, int y) {
        const double d = std::hypot(x - 16.0, y - 16.0);
        return d >= 10.0 && d <= 13.0;
    });
    GenOptions opts;
    opts.seed = 6;
    opts.point_mode = PointMode::centroid;
    opts.box_weight = 0.0;
    opts.point_weight = 1.0;
    opts.text_weight = 0.0;
    TemplateCaptionProvider provider;
    const auto samples = generate_grounding_samples({rec}, provider, opts);
    REQUIRE(samples.size() == 1);
    const auto p = std::get<geom::NormCoord>(samples[0].norm_geometry);
    const geom::Point2D px = geom::denormalize_point(p, rec.width, rec.height);
    bool near_fg = false;
    for (int dy = -1; dy <= 1 && !near_fg; ++dy) {
        for (int dx = -1; dx <= 1 && !near_fg; ++dx) {
            const int x = px.x + dx, y = px.y + dy;
            if (x >= 0 && y >= 0 && x < rec.width && y < rec.height && rec.mask.at(x, y))
                near_fg = true;
        }
    }
    CHECK(near_fg);
}

}  // TEST_SUITE
