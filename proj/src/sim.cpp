#include "forge/sim.hpp"

#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"
#include "forge/geometry.hpp"
#include "forge/markup.hpp"

namespace forge::sim {

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double dist2d(double ax, double ay, double bx, double by) {
    return std::hypot(ax - bx, ay - by);
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

int workspace_norm(double v) {
    return static_cast<int>(geom::round_half_away(clampd(v, 0.0, 1.0) * 1000.0));
}

}  // namespace

io::Json SimState::to_json() const {
    io::Json j;
    j["gripper"] = io::Json::array({gripper_x, gripper_y});
    j["grip_closed"] = grip_closed;
    io::Json objs = io::Json::array();
    for (const auto& o : objects) {
        objs.push_back(io::Json{{"id", o.id},
                                {"category", o.category},
                                {"pos", io::Json::array({o.x, o.y})},
                                {"radius", o.radius},
                                {"held", o.held}});
    }
    j["objects"] = objs;
    io::Json tgts = io::Json::array();
    for (const auto& t : targets) {
        tgts.push_back(io::Json{{"id", t.id},
                                {"pos", io::Json::array({t.x, t.y})},
                                {"radius", t.radius}});
    }
    j["targets"] = tgts;
    return j;
}

SimState SimState::from_json(const io::Json& j) {
    SimState s;
    s.gripper_x = j.at("gripper").at(0);
    s.gripper_y = j.at("gripper").at(1);
    s.grip_closed = j.at("grip_closed");
    for (const auto& jo : j.at("objects")) {
        SimObject o;
        o.id = jo.at("id");
        o.category = jo.at("category");
        o.x = jo.at("pos").at(0);
        o.y = jo.at("pos").at(1);
        o.radius = jo.at("radius");
        o.held = jo.at("held");
        s.objects.push_back(std::move(o));
    }
    for (const auto& jt : j.at("targets")) {
        SimTarget t;
        t.id = jt.at("id");
        t.x = jt.at("pos").at(0);
        t.y = jt.at("pos").at(1);
        t.radius = jt.at("radius");
        s.targets.push_back(std::move(t));
    }
    return s;
}

std::vector<std::string> TaskDef::builtin_names() { return {"reach", "pick_place", "stack"}; }

TaskDef TaskDef::builtin(const std::string& name) {
    TaskDef t;
    t.name = name;
    if (name == "reach") {
        t.kind = TaskKind::reach;
        t.instruction = "Move the gripper to the marked target.";
        t.max_steps = 80;
        t.target_radius = 0.05;
    } else if (name == "pick_place") {
        t.kind = TaskKind::pick_place;
        t.instruction = "Put the red cube on the plate.";
        t.max_steps = 160;
        t.object_radius = 0.06;
        t.target_radius = 0.06;
    } else if (name == "stack") {
        t.kind = TaskKind::stack;
        t.instruction = "Stack the red cube on the green cube.";
        t.max_steps = 200;
        t.object_radius = 0.05;
        t.stack_tolerance = 0.05;
    } else {
        throw ValidationError("unknown task '" + name + "'");
    }
    return t;
}

TaskDef TaskDef::from_config(const io::Config& cfg, const std::string& name) {
    TaskDef t = builtin(name);
    t.max_steps = static_cast<int>(cfg.get_int(name + ".max_steps", t.max_steps));
    t.object_radius = cfg.get_double(name + ".object_radius", t.object_radius);
    t.target_radius = cfg.get_double(name + ".target_radius", t.target_radius);
    t.stack_tolerance = cfg.get_double(name + ".stack_tolerance", t.stack_tolerance);
    return t;
}

SimState step(const SimState& state, const SimAction& action) {
    SimState next = state;
    const double dx = clampd(action.dx, -kMaxDelta, kMaxDelta);
    const double dy = clampd(action.dy, -kMaxDelta, kMaxDelta);
    next.gripper_x = clampd(state.gripper_x + dx, 0.0, 1.0);
    next.gripper_y = clampd(state.gripper_y + dy, 0.0, 1.0);

    for (auto& o : next.objects) {
        if (o.held) {
            o.x = next.gripper_x;
            o.y = next.gripper_y;
        }
    }

    if (action.grip > 0.0 && !state.grip_closed) {
        next.grip_closed = true;
        // Grab the nearest object whose radius covers the gripper.
        int best = -1;
        double best_d = 0.0;
        for (std::size_t i = 0; i < next.objects.size(); ++i) {
            const auto& o = next.objects[i];
            const double d = dist2d(next.gripper_x, next.gripper_y, o.x, o.y);
            if (d <= o.radius && (best < 0 || d < best_d)) {
                best = static_cast<int>(i);
                best_d = d;
            }
        }
        if (best >= 0) {
            next.objects[static_cast<std::size_t>(best)].held = true;
            next.objects[static_cast<std::size_t>(best)].x = next.gripper_x;
            next.objects[static_cast<std::size_t>(best)].y = next.gripper_y;
        }
    } else if (action.grip < 0.0 && state.grip_closed) {
        next.grip_closed = false;
        for (auto& o : next.objects) o.held = false;
    }
    return next;
}

bool success(const SimState& state, const TaskDef& task) {
    switch (task.kind) {
        case TaskKind::reach: {
            const auto& t = state.targets.at(0);
            return dist2d(state.gripper_x, state.gripper_y, t.x, t.y) <= t.radius;
        }
        case TaskKind::pick_place: {
            const auto& o = state.objects.at(0);
            const auto& t = state.targets.at(0);
            return !o.held && dist2d(o.x, o.y, t.x, t.y) <= t.radius;
        }
        case TaskKind::stack: {
            const auto& a = state.objects.at(0);
            const auto& b = state.objects.at(1);
            return !a.held && dist2d(a.x, a.y, b.x, b.y) <= task.stack_tolerance;
        }
    }
    return false;
}

SimState init_state(const TaskDef& task, Rng& rng) {
    constexpr double kMargin = 0.12;
    constexpr double kMinSep = 0.25;
    SimState s;
    s.gripper_x = rng.uniform(kMargin, 1.0 - kMargin);
    s.gripper_y = rng.uniform(kMargin, 1.0 - kMargin);

    auto place = [&](std::vector<std::pair<double, double>>& placed) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double x = rng.uniform(kMargin, 1.0 - kMargin);
            const double y = rng.uniform(kMargin, 1.0 - kMargin);
            bool ok = true;
            for (const auto& [px, py] : placed) {
                if (dist2d(x, y, px, py) < kMinSep) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                placed.emplace_back(x, y);
                return std::pair{x, y};
            }
        }
        const double x = rng.uniform(kMargin, 1.0 - kMargin);
        const double y = rng.uniform(kMargin, 1.0 - kMargin);
        placed.emplace_back(x, y);
        return std::pair{x, y};
    };

    std::vector<std::pair<double, double>> placed;
    switch (task.kind) {
        case TaskKind::reach: {
            auto [tx, ty] = place(placed);
            s.targets.push_back({"target", tx, ty, task.target_radius});
            break;
        }
        case TaskKind::pick_place: {
            auto [ox, oy] = place(placed);
            s.objects.push_back({"cube", "red cube", ox, oy, task.object_radius, false});
            auto [tx, ty] = place(placed);
            s.targets.push_back({"plate", tx, ty, task.target_radius});
            break;
        }
        case TaskKind::stack: {
            auto [ax, ay] = place(placed);
            s.objects.push_back({"cube_a", "red cube", ax, ay, task.object_radius, false});
            auto [bx, by] = place(placed);
            s.objects.push_back({"cube_b", "green cube", bx, by, task.object_radius, false});
            break;
        }
    }
    return s;
}

ExpertDecision scripted_expert(const SimState& state, const TaskDef& task) {
    auto toward = [&](double gx, double gy) {
        SimAction a;
        a.dx = clampd(gx - state.gripper_x, -kMaxDelta, kMaxDelta);
        a.dy = clampd(gy - state.gripper_y, -kMaxDelta, kMaxDelta);
        return a;
    };

    if (task.kind == TaskKind::reach) {
        const auto& t = state.targets.at(0);
        ExpertDecision d;
        d.action = toward(t.x, t.y);
        d.subgoal = "move to the target";
        return d;
    }

    const auto& obj = state.objects.at(0);
    double dest_x, dest_y, dest_tol;
    std::string dest_name;
    if (task.kind == TaskKind::pick_place) {
        const auto& t = state.targets.at(0);
        dest_x = t.x;
        dest_y = t.y;
        dest_tol = t.radius;
        dest_name = "plate";
    } else {
        const auto& b = state.objects.at(1);
        dest_x = b.x;
        dest_y = b.y;
        dest_tol = task.stack_tolerance;
        dest_name = b.category;
    }

    ExpertDecision d;
    if (!obj.held) {
        if (state.grip_closed) {
            // Closed on nothing; open before re-approaching.
            d.action = SimAction{0.0, 0.0, -1.0};
            d.subgoal = "open the gripper";
            return d;
        }
        const double dist = dist2d(state.gripper_x, state.gripper_y, obj.x, obj.y);
        if (dist > obj.radius * 0.5) {
            d.action = toward(obj.x, obj.y);
            d.subgoal = "move to the " + obj.category;
            return d;
        }
        d.action = SimAction{0.0, 0.0, 1.0};
        d.subgoal = "close the gripper";
        return d;
    }
    const double dist = dist2d(state.gripper_x, state.gripper_y, dest_x, dest_y);
    if (dist > dest_tol * 0.5) {
        d.action = toward(dest_x, dest_y);
        d.action.grip = 1.0;  // keep holding
        d.subgoal = "move to the " + dest_name;
        return d;
    }
    d.action = SimAction{0.0, 0.0, -1.0};
    d.subgoal = "open the gripper";
    return d;
}

std::vector<double> obs_features(const SimState& state) {
    std::vector<double> f;
    f.push_back(state.gripper_x);
    f.push_back(state.gripper_y);
    f.push_back(state.grip_closed ? 1.0 : 0.0);
    for (const auto& o : state.objects) {
        f.push_back(o.x);
        f.push_back(o.y);
        f.push_back(o.held ? 1.0 : 0.0);
    }
    for (const auto& t : state.targets) {
        f.push_back(t.x);
        f.push_back(t.y);
    }
    // Relative blocks: offsets between consecutive waypoints of the
    // manipulation chain plus their lengths. Same ground truth, but exposed
    // in the frame the controller actually works in.
    auto push_rel = [&](double ax, double ay, double bx, double by) {
        f.push_back(bx - ax);
        f.push_back(by - ay);
        f.push_back(dist2d(ax, ay, bx, by));
    };
    if (!state.objects.empty()) {
        const auto& o = state.objects[0];
        push_rel(state.gripper_x, state.gripper_y, o.x, o.y);
        if (state.objects.size() >= 2) {
            push_rel(o.x, o.y, state.objects[1].x, state.objects[1].y);
        } else if (!state.targets.empty()) {
            push_rel(o.x, o.y, state.targets[0].x, state.targets[0].y);
        }
    } else if (!state.targets.empty()) {
        push_rel(state.gripper_x, state.gripper_y, state.targets[0].x, state.targets[0].y);
    }
    return f;
}

std::vector<double> robot_state(const SimState& state) {
    return {state.gripper_x, state.gripper_y, state.grip_closed ? 1.0 : 0.0};
}

int feature_dim(const TaskDef& task) {
    switch (task.kind) {
        case TaskKind::reach: return 3 + 2 + 3;
        case TaskKind::pick_place: return 3 + 3 + 2 + 6;
        case TaskKind::stack: return 3 + 3 + 3 + 6;
    }
    return 0;
}

flow::Observation make_observation(const SimState& state) {
    return flow::Observation{obs_features(state), robot_state(state)};
}

io::Json EpisodeRecord::to_json() const {
    io::Json j;
    j["task"] = task;
    j["success"] = success;
    j["steps_used"] = steps_used;
    j["queries"] = queries;
    io::Json sts = io::Json::array();
    for (const auto& s : states) sts.push_back(s.to_json());
    j["states"] = sts;
    io::Json acts = io::Json::array();
    for (const auto& a : actions) acts.push_back(io::Json::array({a.dx, a.dy, a.grip}));
    j["actions"] = acts;
    return j;
}

EpisodeRecord EpisodeRecord::from_json(const io::Json& j) {
    EpisodeRecord r;
    r.task = j.at("task");
    r.success = j.at("success");
    r.steps_used = j.at("steps_used");
    r.queries = j.at("queries");
    for (const auto& js : j.at("states")) r.states.push_back(SimState::from_json(js));
    for (const auto& ja : j.at("actions"))
        r.actions.push_back(SimAction{ja.at(0), ja.at(1), ja.at(2)});
    return r;
}

EpisodeRecord run_expert_episode(const TaskDef& task, Rng& rng) {
    EpisodeRecord rec;
    rec.task = task.name;
    SimState state = init_state(task, rng);
    rec.states.push_back(state);
    for (int t = 0; t < task.max_steps; ++t) {
        if (success(state, task)) break;
        const auto dec = scripted_expert(state, task);
        state = step(state, dec.action);
        rec.actions.push_back(dec.action);
        rec.states.push_back(state);
    }
    rec.success = success(state, task);
    rec.steps_used = static_cast<int>(rec.actions.size());
    return rec;
}

std::vector<EpisodeRecord> collect_demos(const TaskDef& task, int episodes, std::uint64_t seed,
                                         int jobs) {
    SeedScheme seeds{seed};
    std::vector<EpisodeRecord> out(static_cast<std::size_t>(episodes));
    io::parallel_for_indexed(static_cast<std::size_t>(episodes), jobs, [&](std::size_t e) {
        Rng rng(seeds.derive("demo:" + task.name, e));
        out[e] = run_expert_episode(task, rng);
    });
    return out;
}

flow::Chunk FlowChunkPolicy::act(const SimState& state, Rng& rng) const {
    return policy_->act(make_observation(state), rng);
}

flow::Chunk ExpertChunkPolicy::act(const SimState& state, Rng&) const {
    flow::Chunk chunk(horizon_, kActionDim);
    SimState cur = state;
    for (int i = 0; i < horizon_; ++i) {
        const auto dec = scripted_expert(cur, task_);
        chunk.at(i, 0) = dec.action.dx;
        chunk.at(i, 1) = dec.action.dy;
        chunk.at(i, 2) = dec.action.grip;
        cur = step(cur, dec.action);
    }
    return chunk;
}

flow::Chunk RandomChunkPolicy::act(const SimState&, Rng& rng) const {
    flow::Chunk chunk(horizon_, kActionDim);
    for (double& x : chunk.v) x = rng.normal();
    return chunk;
}

EvalResult eval_policy(const ChunkPolicy& policy, const TaskDef& task, const EvalOptions& opts) {
    SeedScheme seeds{opts.seed};
    EvalResult result;
    result.episodes = opts.episodes;
    result.records.resize(static_cast<std::size_t>(opts.episodes));

    io::parallel_for_indexed(static_cast<std::size_t>(opts.episodes), opts.jobs, [&](std::size_t e) {
        Rng rng(seeds.derive("eval:" + task.name, e));
        EpisodeRecord rec;
        rec.task = task.name;
        SimState state = init_state(task, rng);
        if (opts.keep_traces) rec.states.push_back(state);
        bool done = success(state, task);
        int steps = 0;
        while (!done && steps < task.max_steps) {
            const flow::Chunk chunk = policy.act(state, rng);
            ++rec.queries;
            for (int k = 0; k < opts.execute_len && !done && steps < task.max_steps; ++k) {
                SimAction a{chunk.at(k, 0), chunk.at(k, 1), chunk.at(k, 2)};
                state = step(state, a);
                rec.actions.push_back(a);
                if (opts.keep_traces) rec.states.push_back(state);
                ++steps;
                done = success(state, task);
            }
        }
        rec.success = done;
        rec.steps_used = steps;
        result.records[e] = std::move(rec);
    });

    for (const auto& r : result.records) {
        if (r.success) ++result.successes;
    }
    result.success_rate =
        static_cast<double>(result.successes) / static_cast<double>(result.episodes);
    return result;
}

QaCategory qa_category_from_string(const std::string& s) {
    if (s == "general") return QaCategory::general;
    if (s == "grounding") return QaCategory::grounding;
    if (s == "spatial") return QaCategory::spatial;
    throw UnknownKind("unknown QA category '" + s + "'");
}

const char* to_string(QaCategory c) {
    switch (c) {
        case QaCategory::general: return "general";
        case QaCategory::grounding: return "grounding";
        case QaCategory::spatial: return "spatial";
    }
    return "?";
}

io::Json QaRecord::to_json() const {
    io::Json j;
    j["task"] = task;
    j["kind"] = kind;
    j["question"] = question;
    j["answer"] = answer;
    j["target"] = target;
    return j;
}

namespace {

struct Entity {
    std::string name;
    double x, y, radius;
};

std::vector<Entity> entities_of(const SimState& state) {
    std::vector<Entity> es;
    for (const auto& o : state.objects) es.push_back({o.category, o.x, o.y, o.radius});
    for (const auto& t : state.targets) es.push_back({t.id, t.x, t.y, t.radius});
    return es;
}

int subgoal_index(const std::string& subgoal, const SimState& state) {
    if (subgoal == "close the gripper") return 1;
    if (subgoal == "open the gripper") return 3;
    // "move to the X": toward the manipulated object while empty-handed,
    // toward the destination while holding.
    const bool holding =
        std::any_of(state.objects.begin(), state.objects.end(),
                    [](const SimObject& o) { return o.held; });
    return holding ? 2 : 0;
}

}  // namespace

QaRecord annotate(const SimState& state, const TaskDef& task, QaCategory kind, Rng& rng) {
    QaRecord rec;
    rec.task = task.name;
    rec.kind = to_string(kind);
    rec.target.assign(kQaTargetDim, 0.0);

    switch (kind) {
        case QaCategory::general: {
            const auto dec = scripted_expert(state, task);
            std::string desc = "The gripper is at (" + fmt3(state.gripper_x) + ", " +
                               fmt3(state.gripper_y) + ") and is " +
                               (state.grip_closed ? "closed" : "open");
            for (const auto& o : state.objects) {
                desc += "; the " + o.category + " is at (" + fmt3(o.x) + ", " + fmt3(o.y) + ")" +
                        (o.held ? " and is held" : "");
            }
            for (const auto& t : state.targets) {
                desc += "; the " + t.id + " is at (" + fmt3(t.x) + ", " + fmt3(t.y) + ")";
            }
            desc += ".";
            rec.question = "Describe the robot's current state, then give the next action for "
                           "the task: " +
                           task.instruction;
            rec.answer = desc + " Next action: " + dec.subgoal + ".";
            const int sg = subgoal_index(dec.subgoal, state);
            rec.target[static_cast<std::size_t>(sg)] = 1.0;
            rec.target[4] = dec.action.dx / kMaxDelta;
            rec.target[5] = dec.action.dy / kMaxDelta;
            if (!state.objects.empty()) {
                rec.target[6] = state.objects[0].x - state.gripper_x;
                rec.target[7] = state.objects[0].y - state.gripper_y;
            } else if (!state.targets.empty()) {
                rec.target[6] = state.targets[0].x - state.gripper_x;
                rec.target[7] = state.targets[0].y - state.gripper_y;
            }
            rec.target[8] = state.grip_closed ? 1.0 : 0.0;
            rec.target[9] = std::any_of(state.objects.begin(), state.objects.end(),
                                        [](const SimObject& o) { return o.held; })
                                ? 1.0
                                : 0.0;
            break;
        }
        case QaCategory::grounding: {
            const auto es = entities_of(state);
            if (es.empty()) throw UnknownKind("grounding QA needs at least one entity");
            const auto& e = es[rng.uniform_index(es.size())];
            const int nx = workspace_norm(e.x);
            const int ny = workspace_norm(e.y);
            if (rng.uniform() < 0.5) {
                rec.question = "Point to the " + e.name + ".";
                rec.answer = markup::render_point(geom::NormCoord{nx, ny});
                rec.target[4] = 1.0;  // point flag
            } else {
                const geom::NormBox box{workspace_norm(e.x - e.radius),
                                        workspace_norm(e.y - e.radius),
                                        workspace_norm(e.x + e.radius),
                                        workspace_norm(e.y + e.radius)};
                rec.question = "Give the bounding box of the " + e.name + ".";
                rec.answer = markup::render_box(box);
                rec.target[5] = 1.0;  // box flag
            }
            rec.target[0] = nx / 1000.0;
            rec.target[1] = ny / 1000.0;
            rec.target[2] = e.radius;
            break;
        }
        case QaCategory::spatial: {
            auto es = entities_of(state);
            // The gripper itself is a valid reference entity.
            es.push_back({"gripper", state.gripper_x, state.gripper_y, 0.0});
            if (es.size() < 2) throw UnknownKind("spatial QA needs two entities");
            const std::size_t ia = rng.uniform_index(es.size());
            std::size_t ib = rng.uniform_index(es.size() - 1);
            if (ib >= ia) ++ib;
            const auto& a = es[ia];
            const auto& b = es[ib];
            const double dx = b.x - a.x;
            const double dy = b.y - a.y;
            // Direction question when the viewing geometry is well-formed,
            // otherwise distance.
            const double fx = a.x - state.gripper_x;
            const double fy = a.y - state.gripper_y;
            const double cross = fx * dy - fy * dx;
            if (rng.uniform() < 0.5 && std::abs(cross) > 1e-9 &&
                (std::abs(fx) > 1e-12 || std::abs(fy) > 1e-12)) {
                rec.question = "Standing at the gripper and facing the " + a.name + ", is the " +
                               b.name + " to your left or right?";
                rec.answer = cross > 0.0 ? "left" : "right";
                rec.target[0] = cross > 0.0 ? 1.0 : 0.0;
                rec.target[1] = cross > 0.0 ? 0.0 : 1.0;
            } else {
                const double d = dist2d(a.x, a.y, b.x, b.y);
                rec.question = "How far is the " + b.name + " from the " + a.name +
                               " (in workspace units)?";
                rec.answer = fmt2(d);
                rec.target[2] = d;
            }
            rec.target[3] = dx;
            rec.target[4] = dy;
            break;
        }
    }
    return rec;
}

std::vector<QaRecord> gen_indomain(const TaskDef& task, int count, std::uint64_t seed,
                                   std::optional<QaCategory> only_kind) {
    SeedScheme seeds{seed};
    std::vector<QaRecord> out(static_cast<std::size_t>(count));
    const QaCategory cycle[] = {QaCategory::general, QaCategory::grounding, QaCategory::spatial};
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
        Rng rng(seeds.derive("indomain:" + task.name, i));
        EpisodeRecord episode = run_expert_episode(task, rng);
        const auto& states = episode.states;
        const SimState& s = states[rng.uniform_index(states.size())];
        const QaCategory kind = only_kind ? *only_kind : cycle[i % 3];
        out[i] = annotate(s, task, kind, rng);
    }
    return out;
}

}  // namespace forge::sim
