#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/flow.hpp"
#include "forge/jsonl.hpp"
#include "forge/rng.hpp"

namespace forge::sim {

struct SimObject {
    std::string id;
    std::string category;
    double x = 0.0, y = 0.0;
    double radius = 0.05;
    bool held = false;
};

struct SimTarget {
    std::string id;
    double x = 0.0, y = 0.0;
    double radius = 0.05;
};

/// Planar workspace [0,1]^2 with a point gripper.
struct SimState {
    double gripper_x = 0.5, gripper_y = 0.5;
    bool grip_closed = false;
    std::vector<SimObject> objects;
    std::vector<SimTarget> targets;

    io::Json to_json() const;
    static SimState from_json(const io::Json& j);
};

/// Continuous action (dx, dy, grip); deltas clipped to +-kMaxDelta before
/// application, grip sign closes (>0) or opens (<0) the gripper.
struct SimAction {
    double dx = 0.0, dy = 0.0, grip = 0.0;
};

inline constexpr double kMaxDelta = 0.05;
inline constexpr int kActionDim = 3;

enum class TaskKind { reach, pick_place, stack };

struct TaskDef {
    std::string name;
    TaskKind kind = TaskKind::pick_place;
    std::string instruction;
    int max_steps = 160;
    double object_radius = 0.06;
    double target_radius = 0.06;
    double stack_tolerance = 0.05;

    static TaskDef builtin(const std::string& name);
    static TaskDef from_config(const io::Config& cfg, const std::string& name);
    static std::vector<std::string> builtin_names();
};

/// Pure transition function: same (state, action) always yields the same
/// next state, byte-exact.
SimState step(const SimState& state, const SimAction& action);

bool success(const SimState& state, const TaskDef& task);

/// Fresh randomized episode start; object/target placements are separated so
/// every task instance is solvable.
SimState init_state(const TaskDef& task, Rng& rng);

struct ExpertDecision {
    SimAction action;
    std::string subgoal;  // human-readable label of the current subgoal
};

/// Proportional controller toward the current subgoal. Reaches success within
/// the task step budget from any init_state draw.
ExpertDecision scripted_expert(const SimState& state, const TaskDef& task);

/// Observation feature layout for the policy: gripper pose and grip flag,
/// per-object position and held flag, per-target position. Fixed order.
std::vector<double> obs_features(const SimState& state);
std::vector<double> robot_state(const SimState& state);
int feature_dim(const TaskDef& task);

flow::Observation make_observation(const SimState& state);

struct EpisodeRecord {
    std::string task;
    bool success = false;
    int steps_used = 0;
    int queries = 0;  // policy chunk queries (0 for expert demos)
    std::vector<SimState> states;
    std::vector<SimAction> actions;

    io::Json to_json() const;
    static EpisodeRecord from_json(const io::Json& j);
};

/// Rolls out the scripted expert; always records full state/action traces.
EpisodeRecord run_expert_episode(const TaskDef& task, Rng& rng);
std::vector<EpisodeRecord> collect_demos(const TaskDef& task, int episodes, std::uint64_t seed,
                                         int jobs = 1);

/// Any chunk-producing policy; wraps flow::Policy and the baselines.
class ChunkPolicy {
public:
    virtual ~ChunkPolicy() = default;
    virtual flow::Chunk act(const SimState& state, Rng& rng) const = 0;
};

class FlowChunkPolicy : public ChunkPolicy {
public:
    explicit FlowChunkPolicy(const flow::Policy& policy) : policy_(&policy) {}
    flow::Chunk act(const SimState& state, Rng& rng) const override;

private:
    const flow::Policy* policy_;
};

/// Executes the expert one chunk at a time (upper-bound reference).
class ExpertChunkPolicy : public ChunkPolicy {
public:
    explicit ExpertChunkPolicy(TaskDef task, int horizon = 4)
        : task_(std::move(task)), horizon_(horizon) {}
    flow::Chunk act(const SimState& state, Rng& rng) const override;

private:
    TaskDef task_;
    int horizon_;
};

/// Pure-noise chunks (null baseline).
class RandomChunkPolicy : public ChunkPolicy {
public:
    explicit RandomChunkPolicy(int horizon = 4) : horizon_(horizon) {}
    flow::Chunk act(const SimState& state, Rng& rng) const override;

private:
    int horizon_;
};

struct EvalOptions {
    int episodes = 240;
    std::uint64_t seed = 0;
    int execute_len = 2;  // actions executed per chunk query
    int jobs = 1;
    bool keep_traces = true;
};

struct EvalResult {
    double success_rate = 0.0;
    int successes = 0;
    int episodes = 0;
    std::vector<EpisodeRecord> records;
};

/// Closed loop: query a chunk, execute execute_len actions, re-observe.
EvalResult eval_policy(const ChunkPolicy& policy, const TaskDef& task, const EvalOptions& opts);

enum class QaCategory { general, grounding, spatial };
QaCategory qa_category_from_string(const std::string& s);
const char* to_string(QaCategory c);

/// In-domain QA record; `target` is the numeric encoding of the answer used
/// as the regression target when pretraining the context encoder.
struct QaRecord {
    std::string task;
    std::string kind;
    std::string question;
    std::string answer;
    std::vector<double> target;

    io::Json to_json() const;
};

inline constexpr int kQaTargetDim = 10;

/// Ground-truth annotator over simulator states.
QaRecord annotate(const SimState& state, const TaskDef& task, QaCategory kind, Rng& rng);

/// Expert-visited states annotated with mixed QA kinds; the in-domain corpus.
std::vector<QaRecord> gen_indomain(const TaskDef& task, int count, std::uint64_t seed,
                                   std::optional<QaCategory> only_kind = std::nullopt);

}  // namespace forge::sim
