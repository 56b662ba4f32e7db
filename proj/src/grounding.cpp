#include "forge/grounding.hpp"

#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"

namespace forge::grounding {

MaskRecord MaskRecord::from_json(const io::Json& j) {
    MaskRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.mask = geom::rle_decode(r.width, r.height, j.at("counts").get<std::vector<int>>());
    r.quality_score = j.at("quality_score").get<double>();
    if (j.contains("caption") && !j.at("caption").is_null())
        r.caption = j.at("caption").get<std::string>();
    return r;
}

io::Json MaskRecord::to_json() const {
    io::Json j;
    j["image_id"] = image_id;
    j["width"] = width;
    j["height"] = height;
    j["counts"] = geom::rle_encode(mask);
    j["quality_score"] = quality_score;
    if (caption) j["caption"] = *caption;
    return j;
}

namespace {

const char* kNouns[] = {
    "mug",   "book",    "bottle", "plate",  "keyboard", "lamp",   "towel", "remote",
    "plant", "spatula", "bowl",   "carrot", "sponge",   "jacket", "shoe",  "basket",
};

const std::vector<std::string> kBoxTemplates = {
    "Locate {desc} and output its bounding box.",
    "Where is {desc}? Answer with a bounding box.",
    "Provide the bounding box of {desc}.",
    "Find {desc} in the image and return its box coordinates.",
    "Output the bounding box for {desc}.",
};

const std::vector<std::string> kPointTemplates = {
    "Point to {desc}.",
    "Mark the center point of {desc}.",
    "Where is {desc}? Answer with a single point.",
    "Localize {desc} with one point.",
    "Give the point coordinates of {desc}.",
};

const std::vector<std::string> kTextTemplates = {
    "What object is at {markup}?",
    "Identify the object located at {markup}.",
    "Which object does {markup} refer to?",
    "Describe what you find at {markup}.",
    "Name the object marked by {markup}.",
};

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    auto pos = tmpl.find(key);
    if (pos != std::string::npos) tmpl.replace(pos, key.size(), value);
    return tmpl;
}

geom::Point2D pick_point(const geom::PixelMask& mask, PointMode mode, Rng& rng) {
    if (mode == PointMode::uniform) return geom::sample_point_in_mask(mask, rng);
    // Centroid mode: snap to the nearest foreground pixel so the emitted point
    // stays inside the mask even for concave shapes.
    geom::Point2D c = geom::mask_centroid_pixel(mask);
    if (c.x >= 0 && c.x < mask.width && c.y >= 0 && c.y < mask.height && mask.at(c.x, c.y)) return c;
    geom::Point2D best{0, 0};
    std::int64_t best_d2 = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            std::int64_t dx = x - c.x, dy = y - c.y;
            std::int64_t d2 = dx * dx + dy * dy;
            if (best_d2 < 0 || d2 < best_d2) {
                best_d2 = d2;
                best = {x, y};
            }
        }
    }
    if (best_d2 < 0) throw EmptyMask();
    return best;
}

}  // namespace

std::string TemplateCaptionProvider::describe(const std::string& image_id,
                                              const geom::BBox& box) const {
    std::string key = image_id + ":" + std::to_string(box.x_min) + "," + std::to_string(box.y_min) +
                      "," + std::to_string(box.x_max) + "," + std::to_string(box.y_max);
    const auto n = sizeof(kNouns) / sizeof(kNouns[0]);
    return std::string("the ") + kNouns[fnv1a64(key) % n] + " region";
}

const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::box_from_text: return "box_from_text";
        case TaskKind::point_from_text: return "point_from_text";
        case TaskKind::text_from_coords: return "text_from_coords";
    }
    return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "box_from_text") return TaskKind::box_from_text;
    if (s == "point_from_text") return TaskKind::point_from_text;
    if (s == "text_from_coords") return TaskKind::text_from_coords;
    throw ValidationError("unknown task_kind: " + s);
}

const std::vector<std::string>& question_templates(TaskKind k) {
    switch (k) {
        case TaskKind::box_from_text: return kBoxTemplates;
        case TaskKind::point_from_text: return kPointTemplates;
        default: return kTextTemplates;
    }
}

io::Json GroundingSample::to_json() const {
    io::Json j;
    j["image_id"] = image_id;
    j["task_kind"] = to_string(task_kind);
    j["question"] = question;
    j["answer"] = answer;
    if (std::holds_alternative<geom::NormCoord>(norm_geometry)) {
        const auto& p = std::get<geom::NormCoord>(norm_geometry);
        j["norm_kind"] = "point";
        j["norm_coords"] = std::vector<int>{p.x, p.y};
    } else {
        const auto& b = std::get<geom::NormBox>(norm_geometry);
        j["norm_kind"] = "box";
        j["norm_coords"] = std::vector<int>{b.x_min, b.y_min, b.x_max, b.y_max};
    }
    return j;
}

std::vector<MaskRecord> filter_by_quality(const std::vector<MaskRecord>& records, double threshold) {
    std::vector<MaskRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.quality_score >= threshold) out.push_back(r);
    }
    return out;
}

std::vector<GroundingSample> generate_grounding_samples(const std::vector<MaskRecord>& records,
                                                        const CaptionProvider& provider,
                                                        const GenOptions& opts, GenStats* stats) {
    std::vector<MaskRecord> kept =
        opts.apply_filter ? filter_by_quality(records, opts.quality_threshold) : records;
    if (stats) stats->filtered_out = records.size() - kept.size();

    const double wsum = opts.box_weight + opts.point_weight + opts.text_weight;
    if (wsum <= 0.0) throw ValidationError("kind weights must sum to a positive value");
    const double wb = opts.box_weight / wsum;
    const double wp = opts.point_weight / wsum;

    std::size_t n = kept.size();
    if (opts.limit > 0) n = std::min(n, opts.limit);

    SeedScheme seeds{opts.seed};
    std::vector<std::optional<GroundingSample>> slots(n);

    io::parallel_for_indexed(n, opts.jobs, [&](std::size_t i) {
        const MaskRecord& rec = kept[i];
        if (rec.mask.foreground_count() == 0) return;  // skipped, counted below
        Rng rng(seeds.derive("grounding", i));

        const double u = rng.uniform();
        TaskKind kind = u < wb                ? TaskKind::box_from_text
                        : (u < wb + wp)       ? TaskKind::point_from_text
                                              : TaskKind::text_from_coords;

        const auto& templates = question_templates(kind);
        const std::size_t t = rng.uniform_index(templates.size());

        const geom::BBox box = geom::mask_to_bbox(rec.mask);
        const std::string desc =
            rec.caption ? *rec.caption : provider.describe(rec.image_id, box);

        GroundingSample s;
        s.image_id = rec.image_id;
        s.task_kind = kind;
        switch (kind) {
            case TaskKind::box_from_text: {
                const geom::NormBox nb = geom::normalize_bbox(box, rec.width, rec.height);
                s.question = substitute(templates[t], "{desc}", desc);
                s.answer = markup::render_box(nb);
                s.norm_geometry = nb;
                break;
            }
            case TaskKind::point_from_text: {
                const geom::Point2D p = pick_point(rec.mask, opts.point_mode, rng);
                const geom::NormCoord np = geom::normalize_point(p, rec.width, rec.height);
                s.question = substitute(templates[t], "{desc}", desc);
                s.answer = markup::render_point(np);
                s.norm_geometry = np;
                break;
            }
            case TaskKind::text_from_coords: {
                // The query coordinate is a point or the full box, 50/50.
                if (rng.uniform() < 0.5) {
                    const geom::Point2D p = pick_point(rec.mask, opts.point_mode, rng);
                    const geom::NormCoord np = geom::normalize_point(p, rec.width, rec.height);
                    s.question = substitute(templates[t], "{markup}", markup::render_point(np));
                    s.norm_geometry = np;
                } else {
                    const geom::NormBox nb = geom::normalize_bbox(box, rec.width, rec.height);
                    s.question = substitute(templates[t], "{markup}", markup::render_box(nb));
                    s.norm_geometry = nb;
                }
                s.answer = desc;
                break;
            }
        }
        slots[i] = std::move(s);
    });

    std::vector<GroundingSample> out;
    out.reserve(n);
    std::size_t skipped = 0;
    for (auto& slot : slots) {
        if (slot)
            out.push_back(std::move(*slot));
        else
            ++skipped;
    }
    if (stats) {
        stats->emitted = out.size();
        stats->skipped_empty = skipped;
    }
    return out;
}

std::vector<MaskRecord> synth_mask_records(std::size_t count, std::uint64_t seed) {
    SeedScheme seeds{seed};
    std::vector<MaskRecord> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(seeds.derive("synth-mask", i));
        MaskRecord r;
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth-%06zu", i);
        r.image_id = buf;
        r.width = 32 + static_cast<int>(rng.uniform_index(65));
        r.height = 32 + static_cast<int>(rng.uniform_index(65));
        r.mask = geom::PixelMask::blank(r.width, r.height);
        r.quality_score = 0.7 + 0.3 * rng.uniform();
        // ~2% deliberately empty masks exercise the skip counter downstream.
        if (rng.uniform() >= 0.02) {
            const bool ellipse = rng.uniform() < 0.5;
            const int cx = static_cast<int>(rng.uniform_index(r.width));
            const int cy = static_cast<int>(rng.uniform_index(r.height));
            const int rx = 2 + static_cast<int>(rng.uniform_index(r.width / 3 + 1));
            const int ry = 2 + static_cast<int>(rng.uniform_index(r.height / 3 + 1));
            for (int y = 0; y < r.height; ++y) {
                for (int x = 0; x < r.width; ++x) {
                    if (ellipse) {
                        const double dx = static_cast<double>(x - cx) / rx;
                        const double dy = static_cast<double>(y - cy) / ry;
                        if (dx * dx + dy * dy <= 1.0) r.mask.set(x, y);
                    } else {
                        if (std::abs(x - cx) <= rx && std::abs(y - cy) <= ry) r.mask.set(x, y);
                    }
                }
            }
        }
        out[i] = std::move(r);
    }
    return out;
}

}  // namespace forge::grounding
