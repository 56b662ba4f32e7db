#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/jsonl.hpp"
#include "forge/rng.hpp"

namespace forge::planning {

struct Action {
    std::string name;
    std::vector<std::string> args;

    std::string serialize() const;
    static Action parse(const std::string& text);
    bool operator==(const Action&) const = default;
};

/// Declarative goal: `object` resting at `location`.
struct Goal {
    std::string object;
    std::string location;
};

struct TaskSpec {
    std::string instruction;
    std::vector<std::string> allowed_actions;  // action names
    Goal goal;
    int max_steps = 12;
};

struct Step {
    Action action;
    std::string observation_summary;  // what the agent saw before acting
    bool success = false;             // did the primitive succeed

    io::Json to_json() const;
    static Step from_json(const io::Json& j);
};

struct Trajectory {
    TaskSpec task;
    std::vector<Step> steps;
    bool final_success = false;

    io::Json to_json() const;
};

/// Single-room household world: named locations, objects resting on them, an
/// agent that can hold one object. Primitives: goto <loc>, pick <obj>,
/// place <loc>.
class ToyHouseEnv {
public:
    /// Deterministic scenario from the seed: object placement, agent start,
    /// and a task whose goal is not already satisfied.
    static std::pair<ToyHouseEnv, TaskSpec> make_scenario(std::uint64_t seed);

    /// Applies a primitive; returns whether it succeeded. Unknown action
    /// names throw UnsupportedAction.
    bool apply(const Action& a);

    bool goal_satisfied(const Goal& g) const;
    std::string observation_summary(const TaskSpec& task) const;

    const std::vector<std::string>& locations() const { return locations_; }
    std::vector<std::string> object_names() const;
    const std::string& agent_location() const { return agent_at_; }
    const std::optional<std::string>& holding() const { return holding_; }
    std::optional<std::string> location_of(const std::string& object) const;

private:
    std::vector<std::string> locations_;
    std::map<std::string, std::string> object_at_;  // object -> location
    std::string agent_at_;
    std::optional<std::string> holding_;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual Action act(const ToyHouseEnv& env, const TaskSpec& task, Rng& rng) = 0;
};

/// Plans from ground truth; always solves solvable tasks within 4 steps.
class ScriptedExpert : public Agent {
public:
    Action act(const ToyHouseEnv& env, const TaskSpec& task, Rng& rng) override;
};

/// Follows the expert with probability 1-epsilon, otherwise acts uniformly at
/// random over action instantiations. Used to produce failures.
class EpsilonRandomAgent : public Agent {
public:
    explicit EpsilonRandomAgent(double epsilon) : epsilon_(epsilon) {}
    Action act(const ToyHouseEnv& env, const TaskSpec& task, Rng& rng) override;

private:
    double epsilon_;
};

/// Executes the agent in the environment, recording one Step per action.
/// Stops when the goal holds or max_steps is reached. A goal that already
/// holds at t=0 yields an empty-step successful trajectory.
Trajectory rollout(ToyHouseEnv& env, Agent& agent, const TaskSpec& task, Rng& rng);

/// Exactly the final_success subset, order preserved.
std::vector<Trajectory> filter_successful(const std::vector<Trajectory>& trajectories);

struct PlanningSample {
    std::string instruction;
    int step_index = 0;
    std::string reasoning;
    std::string action;
    std::string text;  // "Reasoning-step-k: ... Action: ..."

    io::Json to_json() const;
};

/// One sample per step of a successful trajectory.
/// Throws RejectedFailedTrajectory otherwise.
std::vector<PlanningSample> to_planning_samples(const Trajectory& trajectory);

/// Recovers the action sequence from concatenated sample texts; inverse of
/// the rendering in to_planning_samples.
std::vector<Action> parse_actions_from_samples(const std::string& text);

}  // namespace forge::planning
