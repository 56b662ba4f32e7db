#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "forge/jsonl.hpp"
#include "forge/rng.hpp"

namespace forge::spatial {

using Vec3 = std::array<double, 3>;

struct SceneObject {
    std::string id;
    std::string category;
    Vec3 center{0, 0, 0};
    Vec3 size{0, 0, 0};  // axis-aligned extents, metres
};

struct SceneGraph {
    std::string scene_id;
    Vec3 room_dims{0, 0, 0};
    Vec3 room_center{0, 0, 0};
    std::vector<SceneObject> objects;

    const SceneObject& find(const std::string& id) const;  // throws UnknownId
    std::size_t count_category(const std::string& category) const;

    static SceneGraph from_json(const io::Json& j);
    io::Json to_json() const;
};

enum class QaKind { count, abs_distance, rel_distance, obj_size, room_size, rel_direction };
const char* to_string(QaKind k);

struct SpatialQA {
    std::string scene_id;
    QaKind kind = QaKind::count;
    std::string question;
    std::string answer;
    std::vector<std::string> choices;          // multiple-choice kinds only
    std::optional<int> answer_index;           // index into choices
    std::optional<double> value;               // unrounded numeric ground truth
    std::optional<std::string> tie_break;      // set when a tie rule decided the answer

    io::Json to_json() const;
};

/// Validates invariants (unique ids, positive sizes, centers inside the room
/// box) and returns the graph. Throws ObjectOutsideRoom / ValidationError.
SceneGraph build_scene_graph(const std::vector<SceneObject>& objects, const Vec3& room_dims,
                             const Vec3& room_center, const std::string& scene_id);

SpatialQA gen_count(const SceneGraph& g, const std::string& category);
SpatialQA gen_abs_distance(const SceneGraph& g, const std::string& id_a, const std::string& id_b);
SpatialQA gen_rel_distance(const SceneGraph& g, const std::string& target_id,
                           const std::vector<std::string>& candidate_ids);
SpatialQA gen_obj_size(const SceneGraph& g, const std::string& id);
SpatialQA gen_room_size(const SceneGraph& g);
/// Floor-plane relative direction of `query_id` seen from `standing_id` while
/// facing `facing_id`. Bins front/back/left/right with boundaries at +-45 and
/// +-135 degrees resolved toward front/back.
SpatialQA gen_rel_direction(const SceneGraph& g, const std::string& standing_id,
                            const std::string& facing_id, const std::string& query_id);

/// K questions for one scene, kinds cycled and instances drawn from an rng
/// seeded by (global_seed, scene_id). Kinds whose preconditions the scene
/// cannot meet (too few objects) are skipped.
std::vector<SpatialQA> gen_for_scene(const SceneGraph& g, int per_scene, std::uint64_t global_seed);

/// Random indoor scene for tests and synthetic corpora. Guaranteed valid.
SceneGraph make_random_scene(std::uint64_t seed, int n_objects, const std::string& scene_id);

}  // namespace forge::spatial
