#include "forge/validate.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "forge/errors.hpp"
#include "forge/grounding.hpp"
#include "forge/jsonl.hpp"
#include "forge/markup.hpp"
#include "forge/planning.hpp"
#include "forge/sim.hpp"
#include "forge/spatial.hpp"

namespace forge::io {

namespace {

using Checker = std::function<void(const Json&)>;

void need(const Json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
}

void check_mask(const Json& j) {
    for (const char* k : {"image_id", "width", "height", "counts", "quality_score"}) need(j, k);
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    if (w < 1 || h < 1) throw ValidationError("non-positive dimensions");
    const double q = j.at("quality_score").get<double>();
    if (q < 0.0 || q > 1.0) throw ValidationError("quality_score outside [0,1]");
    long long sum = 0;
    for (const auto& c : j.at("counts")) {
        const long long v = c.get<long long>();
        if (v < 0) throw ValidationError("negative run count");
        sum += v;
    }
    if (sum != static_cast<long long>(w) * h)
        throw ValidationError("rle runs do not sum to width*height");
}

void check_norm_coords(const Json& j) {
    const std::string kind = j.at("norm_kind").get<std::string>();
    const auto& coords = j.at("norm_coords");
    const std::size_t expect = kind == "point" ? 2 : 4;
    if (kind != "point" && kind != "box") throw ValidationError("norm_kind must be point|box");
    if (coords.size() != expect) throw ValidationError("norm_coords arity mismatch");
    for (const auto& c : coords) {
        const int v = c.get<int>();
        if (v < 0 || v > 1000)
            throw ValidationError("coordinate " + std::to_string(v) + " outside [0,1000]");
    }
}

markup::Geometry geometry_of(const Json& j) {
    const auto& coords = j.at("norm_coords");
    if (j.at("norm_kind") == "point")
        return geom::NormCoord{coords.at(0).get<int>(), coords.at(1).get<int>()};
    return geom::NormBox{coords.at(0).get<int>(), coords.at(1).get<int>(),
                         coords.at(2).get<int>(), coords.at(3).get<int>()};
}

void check_grounding(const Json& j) {
    for (const char* k : {"image_id", "task_kind", "question", "answer", "norm_kind",
                          "norm_coords"})
        need(j, k);
    const auto kind = grounding::task_kind_from_string(j.at("task_kind").get<std::string>());
    check_norm_coords(j);
    const markup::Geometry expected = geometry_of(j);
    if (kind == grounding::TaskKind::text_from_coords) {
        // Markup is embedded in the question.
        if (markup::parse_first(j.at("question").get<std::string>()) != expected)
            throw ValidationError("question markup does not match norm_coords");
    } else {
        if (markup::parse(j.at("answer").get<std::string>()) != expected)
            throw ValidationError("answer markup does not match norm_coords");
    }
}

void check_spatial(const Json& j) {
    for (const char* k : {"scene_id", "kind", "question", "answer"}) need(j, k);
    const std::string kind = j.at("kind").get<std::string>();
    const bool known = kind == "count" || kind == "abs_distance" || kind == "rel_distance" ||
                       kind == "obj_size" || kind == "room_size" || kind == "rel_direction";
    if (!known) throw ValidationError("unknown spatial kind '" + kind + "'");
    if (j.contains("choices")) {
        const auto& choices = j.at("choices");
        const int idx = j.at("answer_index").get<int>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= choices.size())
            throw ValidationError("answer_index out of range");
        if (choices.at(static_cast<std::size_t>(idx)).get<std::string>() !=
            j.at("answer").get<std::string>())
            throw ValidationError("answer does not match choices[answer_index]");
    }
}

void check_scene(const Json& j) {
    spatial::SceneGraph::from_json(j);  // construction enforces the invariants
}

void check_planning(const Json& j) {
    for (const char* k : {"instruction", "step_index", "reasoning", "action", "text"}) need(j, k);
    if (j.at("step_index").get<int>() < 0) throw ValidationError("negative step_index");
    const std::string text = j.at("text").get<std::string>();
    const auto actions = planning::parse_actions_from_samples(text);
    if (actions.size() != 1) throw ValidationError("sample text must contain exactly one action");
    if (actions[0].serialize() != j.at("action").get<std::string>())
        throw ValidationError("text action does not match action field");
}

void check_trajectory(const Json& j) {
    for (const char* k : {"instruction", "goal", "steps", "final_success", "steps_used"}) need(j, k);
    const auto& steps = j.at("steps");
    if (j.at("steps_used").get<std::size_t>() != steps.size())
        throw ValidationError("steps_used does not match steps length");
    for (const auto& s : steps) {
        for (const char* k : {"action", "observation", "success"}) need(s, k);
        planning::Action::parse(s.at("action").get<std::string>());
    }
}

void check_episode(const Json& j) {
    for (const char* k : {"task", "success", "steps_used", "queries", "states", "actions"})
        need(j, k);
    const auto& states = j.at("states");
    const auto& actions = j.at("actions");
    if (!states.empty() && actions.size() != states.size() - 1)
        throw ValidationError("len(actions) must equal len(states)-1");
    if (j.at("steps_used").get<std::size_t>() != actions.size())
        throw ValidationError("steps_used does not match actions length");
    for (const auto& a : actions) {
        if (a.size() != 3) throw ValidationError("action arity must be 3");
    }
}

void check_indomain(const Json& j) {
    for (const char* k : {"task", "kind", "question", "answer", "target"}) need(j, k);
    sim::qa_category_from_string(j.at("kind").get<std::string>());
    const auto& target = j.at("target");
    if (target.size() != static_cast<std::size_t>(sim::kQaTargetDim))
        throw ValidationError("target width must be " + std::to_string(sim::kQaTargetDim));
    for (const auto& t : target) {
        if (!std::isfinite(t.get<double>())) throw ValidationError("non-finite target entry");
    }
    // Grounding answers must carry valid markup.
    if (j.at("kind") == "grounding") markup::parse(j.at("answer").get<std::string>());
}

const std::map<std::string, Checker>& registry() {
    static const std::map<std::string, Checker> r = {
        {"mask", check_mask},           {"grounding", check_grounding},
        {"spatial", check_spatial},     {"scene", check_scene},
        {"planning", check_planning},   {"trajectory", check_trajectory},
        {"episode", check_episode},     {"indomain", check_indomain},
    };
    return r;
}

}  // namespace

std::vector<std::string> schema_names() {
    std::vector<std::string> names;
    for (const auto& [k, _] : registry()) names.push_back(k);
    return names;
}

ValidationReport validate_file(const std::filesystem::path& path, const std::string& schema) {
    auto it = registry().find(schema);
    if (it == registry().end()) throw ValidationError("unknown schema '" + schema + "'");
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());

    ValidationReport report;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ++report.records;
        try {
            const Json j = Json::parse(line);
            it->second(j);
        } catch (const std::exception& e) {
            report.violations.push_back({lineno, e.what()});
        }
    }
    return report;
}

}  // namespace forge::io
