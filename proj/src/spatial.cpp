#include "forge/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "forge/errors.hpp"
#include "forge/geometry.hpp"

namespace forge::spatial {

namespace {

std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    // Avoid "-0.0" so translated/scaled scenes stay byte-identical.
    std::string s(buf);
    if (s == "-0.0" || s == "-0") s = s.substr(1);
    return s;
}

double dist3(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 parse_vec3(const io::Json& j) { return Vec3{j.at(0), j.at(1), j.at(2)}; }

io::Json vec3_json(const Vec3& v) { return io::Json::array({v[0], v[1], v[2]}); }

/// Display label for an object: bare category when unique in the scene,
/// otherwise "category (id)".
std::string label(const SceneGraph& g, const SceneObject& o) {
    if (g.count_category(o.category) == 1) return o.category;
    return o.category + " (" + o.id + ")";
}

}  // namespace

const SceneObject& SceneGraph::find(const std::string& id) const {
    for (const auto& o : objects) {
        if (o.id == id) return o;
    }
    throw UnknownId("no object with id '" + id + "' in scene " + scene_id);
}

std::size_t SceneGraph::count_category(const std::string& category) const {
    return static_cast<std::size_t>(std::count_if(
        objects.begin(), objects.end(),
        [&](const SceneObject& o) { return o.category == category; }));
}

SceneGraph SceneGraph::from_json(const io::Json& j) {
    SceneGraph g;
    g.scene_id = j.at("scene_id").get<std::string>();
    g.room_dims = parse_vec3(j.at("room").at("dims"));
    g.room_center = parse_vec3(j.at("room").at("center"));
    for (const auto& jo : j.at("objects")) {
        SceneObject o;
        o.id = jo.at("id").get<std::string>();
        o.category = jo.at("category").get<std::string>();
        o.center = parse_vec3(jo.at("center"));
        o.size = parse_vec3(jo.at("size"));
        g.objects.push_back(std::move(o));
    }
    return build_scene_graph(g.objects, g.room_dims, g.room_center, g.scene_id);
}

io::Json SceneGraph::to_json() const {
    io::Json j;
    j["scene_id"] = scene_id;
    j["room"] = io::Json{{"dims", vec3_json(room_dims)}, {"center", vec3_json(room_center)}};
    io::Json objs = io::Json::array();
    for (const auto& o : objects) {
        io::Json jo;
        jo["id"] = o.id;
        jo["category"] = o.category;
        jo["center"] = vec3_json(o.center);
        jo["size"] = vec3_json(o.size);
        objs.push_back(jo);
    }
    j["objects"] = objs;
    return j;
}

SceneGraph build_scene_graph(const std::vector<SceneObject>& objects, const Vec3& room_dims,
                             const Vec3& room_center, const std::string& scene_id) {
    SceneGraph g;
    g.scene_id = scene_id;
    g.room_dims = room_dims;
    g.room_center = room_center;
    std::set<std::string> ids;
    for (const auto& o : objects) {
        if (!ids.insert(o.id).second)
            throw ValidationError("duplicate object id '" + o.id + "' in scene " + scene_id);
        for (int k = 0; k < 3; ++k) {
            if (!(o.size[k] > 0.0))
                throw ValidationError("object '" + o.id + "' has non-positive size");
            const double lo = room_center[k] - room_dims[k] / 2.0;
            const double hi = room_center[k] + room_dims[k] / 2.0;
            if (o.center[k] < lo || o.center[k] > hi)
                throw ObjectOutsideRoom("object '" + o.id + "' center outside room in scene " +
                                        scene_id);
        }
    }
    g.objects = objects;
    return g;
}

const char* to_string(QaKind k) {
    switch (k) {
        case QaKind::count: return "count";
        case QaKind::abs_distance: return "abs_distance";
        case QaKind::rel_distance: return "rel_distance";
        case QaKind::obj_size: return "obj_size";
        case QaKind::room_size: return "room_size";
        case QaKind::rel_direction: return "rel_direction";
    }
    return "?";
}

io::Json SpatialQA::to_json() const {
    io::Json j;
    j["scene_id"] = scene_id;
    j["kind"] = to_string(kind);
    j["question"] = question;
    j["answer"] = answer;
    if (!choices.empty()) {
        j["choices"] = choices;
        j["answer_index"] = answer_index.value();
    }
    if (value) j["value"] = *value;
    if (tie_break) j["tie_break"] = *tie_break;
    return j;
}

SpatialQA gen_count(const SceneGraph& g, const std::string& category) {
    SpatialQA qa;
    qa.scene_id = g.scene_id;
    qa.kind = QaKind::count;
    qa.question = "How many " + category + "(s) are in this room?";
    const auto n = g.count_category(category);
    qa.answer = std::to_string(n);
    qa.value = static_cast<double>(n);
    return qa;
}

SpatialQA gen_abs_distance(const SceneGraph& g, const std::string& id_a, const std::string& id_b) {
    if (id_a == id_b) throw ValidationError("abs_distance needs two distinct objects");
    const auto& a = g.find(id_a);
    const auto& b = g.find(id_b);
    SpatialQA qa;
    qa.scene_id = g.scene_id;
    qa.kind = QaKind::abs_distance;
    qa.question = "Measuring between object centers, what is the direct distance between the " +
                  label(g, a) + " and the " + label(g, b) + " (in meters)?";
    const double d = dist3(a.center, b.center);
    qa.answer = fmt_fixed(d, 1);
    qa.value = d;
    return qa;
}

SpatialQA gen_rel_distance(const SceneGraph& g, const std::string& target_id,
                           const std::vector<std::string>& candidate_ids) {
    if (candidate_ids.size() < 2) throw ValidationError("rel_distance needs >=2 candidates");
    const auto& target = g.find(target_id);
    SpatialQA qa;
    qa.scene_id = g.scene_id;
    qa.kind = QaKind::rel_distance;

    int best = -1;
    double best_d = 0.0;
    bool tie = false;
    for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
        const auto& c = g.find(candidate_ids[i]);
        if (c.id == target_id) throw ValidationError("candidate equals target");
        const double d = dist3(c.center, target.center);
        if (best < 0 || d < best_d ||
            (d == best_d && c.id < g.find(candidate_ids[static_cast<std::size_t>(best)]).id)) {
            if (best >= 0 && d == best_d) tie = true;
            best = static_cast<int>(i);
            best_d = d;
        } else if (d == best_d) {
            tie = true;
        }
    }

    std::string list;
    for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
        if (i) list += ", ";
        list += label(g, g.find(candidate_ids[i]));
    }
    qa.question = "Measuring between object centers, which of these objects (" + list +
                  ") is closest to the " + label(g, target) + "?";
    for (const auto& id : candidate_ids) qa.choices.push_back(label(g, g.find(id)));
    qa.answer_index = best;
    qa.answer = qa.choices[static_cast<std::size_t>(best)];
    qa.value = best_d;
    if (tie) qa.tie_break = "lexicographic_id";
    return qa;
}

SpatialQA gen_obj_size(const SceneGraph& g, const std::string& id) {
    const auto& o = g.find(id);
    SpatialQA qa;
    qa.scene_id = g.scene_id;
    qa.kind = QaKind::obj_size;
    qa.question = "What is the length of the longest dimension of the " + label(g, o) +
                  ", measured in centimeters?";
    const double longest_cm = *std::max_element(o.size.begin(), o.size.end()) * 100.0;
    qa.answer = std::to_string(geom::round_half_away(longest_cm));
    qa.value = longest_cm;
    return qa;
}

SpatialQA gen_room_size(const SceneGraph& g) {
    SpatialQA qa;
    qa.scene_id = g.scene_id;
    qa.kind = QaKind::room_size;
    qa.question = "What is the size of this room (in square meters)?";
    const double area = g.room_dims[0] * g.room_dims[1];
    qa.answer = fmt_fixed(area, 1);
    qa.value = area;
    return qa;
}

SpatialQA gen_rel_direction(const SceneGraph& g, const std::string& standing_id,
                            const std::string& facing_id, const std::string& query_id) {
    if (standing_id == facing_id || standing_id == query_id || facing_id == query_id)
        throw ValidationError("rel_direction needs three distinct objects");
    const auto& s = g.find(standing_id);
    const auto& f = g.find(facing_id);
    const auto& q = g.find(query_id);

    const double fx = f.center[0] - s.center[0];
    const double fy = f.center[1] - s.center[1];
    if (fx == 0.0 && fy == 0.0)
        throw DegenerateGeometry("standing and facing objects coincide in plan view");
    const double qx = q.center[0] - s.center[0];
    const double qy = q.center[1] - s.center[1];

    // Signed angle of the query direction relative to forward, in (-pi, pi].
    const double cross = fx * qy - fy * qx;
    const double dot = fx * qx + fy * qy;
    const double angle = std::atan2(cross, dot);
    const double deg = angle * 180.0 / M_PI;

    // Quadrants with the +-45/+-135 boundaries resolved toward front/back.
    std::string dir;
    bool boundary = false;
    const double a = std::abs(deg);
    if (a <= 45.0) {
        dir = "front";
        boundary = (a == 45.0);
    } else if (a >= 135.0) {
        dir = "back";
        boundary = (a == 135.0);
    } else {
        dir = deg > 0.0 ? "left" : "right";
    }

    SpatialQA qa;
    qa.scene_id = g.scene_id;
    qa.kind = QaKind::rel_direction;
    qa.question = "If I am standing by the " + label(g, s) + " and facing the " + label(g, f) +
                  ", is the " + label(g, q) + " to my front, back, left, or right?";
    qa.choices = {"front", "back", "left", "right"};
    qa.answer = dir;
    qa.answer_index = static_cast<int>(
        std::find(qa.choices.begin(), qa.choices.end(), dir) - qa.choices.begin());
    if (boundary) qa.tie_break = "boundary_to_front_back";
    return qa;
}

std::vector<SpatialQA> gen_for_scene(const SceneGraph& g, int per_scene, std::uint64_t global_seed) {
    SeedScheme seeds{global_seed};
    Rng rng(seeds.derive("spatial:" + g.scene_id, 0));
    std::vector<SpatialQA> out;
    const QaKind cycle[] = {QaKind::count,    QaKind::abs_distance, QaKind::rel_distance,
                            QaKind::obj_size, QaKind::room_size,    QaKind::rel_direction};
    const std::size_t n_obj = g.objects.size();
    for (int k = 0; k < per_scene; ++k) {
        const QaKind kind = cycle[static_cast<std::size_t>(k) % 6];
        switch (kind) {
            case QaKind::count: {
                if (n_obj == 0) break;
                const auto& o = g.objects[rng.uniform_index(n_obj)];
                out.push_back(gen_count(g, o.category));
                break;
            }
            case QaKind::abs_distance: {
                if (n_obj < 2) break;
                const std::size_t i = rng.uniform_index(n_obj);
                std::size_t j = rng.uniform_index(n_obj - 1);
                if (j >= i) ++j;
                out.push_back(gen_abs_distance(g, g.objects[i].id, g.objects[j].id));
                break;
            }
            case QaKind::rel_distance: {
                if (n_obj < 3) break;
                const std::size_t t = rng.uniform_index(n_obj);
                std::vector<std::string> cands;
                for (std::size_t i = 0; i < n_obj; ++i) {
                    if (i != t) cands.push_back(g.objects[i].id);
                }
                // Keep at most 4 candidates, order preserved after a seeded rotation.
                const std::size_t rot = rng.uniform_index(cands.size());
                std::rotate(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(rot),
                            cands.end());
                if (cands.size() > 4) cands.resize(4);
                out.push_back(gen_rel_distance(g, g.objects[t].id, cands));
                break;
            }
            case QaKind::obj_size: {
                if (n_obj == 0) break;
                out.push_back(gen_obj_size(g, g.objects[rng.uniform_index(n_obj)].id));
                break;
            }
            case QaKind::room_size:
                out.push_back(gen_room_size(g));
                break;
            case QaKind::rel_direction: {
                if (n_obj < 3) break;
                // Draw distinct triples until the plan-view forward vector is
                // non-degenerate; bounded retries keep generation total.
                for (int attempt = 0; attempt < 8; ++attempt) {
                    const std::size_t a = rng.uniform_index(n_obj);
                    std::size_t b = rng.uniform_index(n_obj - 1);
                    if (b >= a) ++b;
                    std::size_t c = rng.uniform_index(n_obj - 2);
                    for (std::size_t skip : {std::min(a, b), std::max(a, b)}) {
                        if (c >= skip) ++c;
                    }
                    try {
                        out.push_back(gen_rel_direction(g, g.objects[a].id, g.objects[b].id,
                                                        g.objects[c].id));
                        break;
                    } catch (const DegenerateGeometry&) {
                        continue;
                    }
                }
                break;
            }
        }
    }
    return out;
}

SceneGraph make_random_scene(std::uint64_t seed, int n_objects, const std::string& scene_id) {
    Rng rng(seed);
    const char* cats[] = {"chair", "table", "lamp", "sofa", "bed",
                          "shelf", "plant", "tv",   "desk", "rug"};
    const std::size_t n_cats = sizeof(cats) / sizeof(cats[0]);
    Vec3 dims{3.0 + 5.0 * rng.uniform(), 3.0 + 5.0 * rng.uniform(), 2.4 + 0.8 * rng.uniform()};
    Vec3 center{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), dims[2] / 2.0};
    std::vector<SceneObject> objects;
    for (int i = 0; i < n_objects; ++i) {
        SceneObject o;
        o.id = "obj" + std::to_string(i);
        o.category = cats[rng.uniform_index(n_cats)];
        for (int k = 0; k < 3; ++k) {
            const double half = dims[k] / 2.0;
            o.center[k] = center[k] + rng.uniform(-half * 0.9, half * 0.9);
            o.size[k] = 0.05 + rng.uniform() * 1.2;
        }
        objects.push_back(std::move(o));
    }
    return build_scene_graph(objects, dims, center, scene_id);
}

}  // namespace forge::spatial
