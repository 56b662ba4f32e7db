#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/jsonl.hpp"
#include "forge/markup.hpp"

namespace forge::grounding {

/// One segmentation mask plus the corpus-supplied predicted quality score
/// (stands in for the mask-precision threshold applied upstream).
struct MaskRecord {
    std::string image_id;
    int width = 0;
    int height = 0;
    geom::PixelMask mask;
    double quality_score = 0.0;
    std::optional<std::string> caption;

    static MaskRecord from_json(const io::Json& j);
    io::Json to_json() const;
};

/// Produces a short object description for (image, box). The bundled provider
/// is a deterministic template over a fixed noun table so the pipeline runs
/// without any captioning model.
class CaptionProvider {
public:
    virtual ~CaptionProvider() = default;
    virtual std::string describe(const std::string& image_id, const geom::BBox& box) const = 0;
};

class TemplateCaptionProvider : public CaptionProvider {
public:
    std::string describe(const std::string& image_id, const geom::BBox& box) const override;
};

enum class TaskKind { box_from_text, point_from_text, text_from_coords };

const char* to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

struct GroundingSample {
    std::string image_id;
    TaskKind task_kind = TaskKind::box_from_text;
    std::string question;
    std::string answer;
    markup::Geometry norm_geometry;

    io::Json to_json() const;
};

enum class PointMode { uniform, centroid };

struct GenOptions {
    std::uint64_t seed = 0;
    double quality_threshold = 0.9;
    bool apply_filter = true;
    double box_weight = 0.4;
    double point_weight = 0.4;
    double text_weight = 0.2;
    PointMode point_mode = PointMode::uniform;
    std::size_t limit = 0;  // 0 = no limit
    int jobs = 1;
};

struct GenStats {
    std::size_t emitted = 0;
    std::size_t skipped_empty = 0;
    std::size_t filtered_out = 0;
};

/// Keeps exactly the records with quality_score >= threshold, order preserved.
std::vector<MaskRecord> filter_by_quality(const std::vector<MaskRecord>& records, double threshold);

/// One sample per surviving record, fully determined by (seed, record index).
/// Records with empty masks are skipped and counted.
std::vector<GroundingSample> generate_grounding_samples(const std::vector<MaskRecord>& records,
                                                        const CaptionProvider& provider,
                                                        const GenOptions& opts,
                                                        GenStats* stats = nullptr);

/// Deterministic synthetic mask corpus (random rectangles/ellipses) for demos
/// and tests.
std::vector<MaskRecord> synth_mask_records(std::size_t count, std::uint64_t seed);

/// Question template tables, exposed for tests.
const std::vector<std::string>& question_templates(TaskKind k);

}  // namespace forge::grounding
