#include "forge/planning.hpp"

#include <algorithm>
#include <sstream>

#include "forge/errors.hpp"

namespace forge::planning {

std::string Action::serialize() const {
    std::string s = name;
    for (const auto& a : args) {
        s += ' ';
        s += a;
    }
    return s;
}

Action Action::parse(const std::string& text) {
    std::istringstream in(text);
    Action a;
    in >> a.name;
    std::string tok;
    while (in >> tok) a.args.push_back(tok);
    if (a.name.empty()) throw ValidationError("empty action text");
    return a;
}

io::Json Step::to_json() const {
    io::Json j;
    j["action"] = action.serialize();
    j["observation"] = observation_summary;
    j["success"] = success;
    return j;
}

Step Step::from_json(const io::Json& j) {
    Step s;
    s.action = Action::parse(j.at("action").get<std::string>());
    s.observation_summary = j.at("observation").get<std::string>();
    s.success = j.at("success").get<bool>();
    return s;
}

io::Json Trajectory::to_json() const {
    io::Json j;
    j["instruction"] = task.instruction;
    j["goal"] = io::Json{{"object", task.goal.object}, {"location", task.goal.location}};
    io::Json steps_json = io::Json::array();
    for (const auto& s : steps) steps_json.push_back(s.to_json());
    j["steps"] = steps_json;
    j["final_success"] = final_success;
    j["steps_used"] = steps.size();
    return j;
}

namespace {

const char* kLocations[] = {"counter", "table", "sink", "shelf", "cabinet", "stove"};
const char* kObjects[] = {"mug", "plate", "sponge", "knife", "bowl", "apple"};

}  // namespace

std::pair<ToyHouseEnv, TaskSpec> ToyHouseEnv::make_scenario(std::uint64_t seed) {
    Rng rng(seed);
    ToyHouseEnv env;
    const std::size_t n_locs = 4 + rng.uniform_index(3);
    for (std::size_t i = 0; i < n_locs; ++i) env.locations_.emplace_back(kLocations[i]);
    const std::size_t n_objs = 3 + rng.uniform_index(3);
    for (std::size_t i = 0; i < n_objs; ++i) {
        env.object_at_[kObjects[i]] = env.locations_[rng.uniform_index(n_locs)];
    }
    env.agent_at_ = env.locations_[rng.uniform_index(n_locs)];

    TaskSpec task;
    auto it = env.object_at_.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_index(n_objs)));
    task.goal.object = it->first;
    // Target location differs from the object's current one so the goal never
    // starts satisfied in generated scenarios (the t=0 case is unit-tested
    // directly).
    std::vector<std::string> other_locs;
    for (const auto& l : env.locations_) {
        if (l != it->second) other_locs.push_back(l);
    }
    task.goal.location = other_locs[rng.uniform_index(other_locs.size())];
    task.instruction = "Move the " + task.goal.object + " to the " + task.goal.location + ".";
    task.allowed_actions = {"goto", "pick", "place"};
    task.max_steps = 12;
    return {env, task};
}

bool ToyHouseEnv::apply(const Action& a) {
    if (a.name == "goto") {
        if (a.args.size() != 1) return false;
        if (std::find(locations_.begin(), locations_.end(), a.args[0]) == locations_.end())
            return false;
        agent_at_ = a.args[0];
        return true;
    }
    if (a.name == "pick") {
        if (a.args.size() != 1 || holding_) return false;
        auto it = object_at_.find(a.args[0]);
        if (it == object_at_.end() || it->second != agent_at_) return false;
        holding_ = a.args[0];
        object_at_.erase(it);
        return true;
    }
    if (a.name == "place") {
        if (a.args.size() != 1 || !holding_) return false;
        if (a.args[0] != agent_at_) return false;
        object_at_[*holding_] = agent_at_;
        holding_.reset();
        return true;
    }
    throw UnsupportedAction("unknown action '" + a.name + "'");
}

bool ToyHouseEnv::goal_satisfied(const Goal& g) const {
    auto it = object_at_.find(g.object);
    return it != object_at_.end() && it->second == g.location;
}

std::string ToyHouseEnv::observation_summary(const TaskSpec& task) const {
    std::string obs = "you are at the " + agent_at_ + "; you are holding " +
                      (holding_ ? ("the " + *holding_) : std::string("nothing"));
    auto it = object_at_.find(task.goal.object);
    if (it != object_at_.end()) {
        obs += "; the " + task.goal.object + " is on the " + it->second;
    }
    return obs;
}

std::vector<std::string> ToyHouseEnv::object_names() const {
    std::vector<std::string> names;
    for (const auto& [obj, _] : object_at_) names.push_back(obj);
    if (holding_) names.push_back(*holding_);
    return names;
}

std::optional<std::string> ToyHouseEnv::location_of(const std::string& object) const {
    auto it = object_at_.find(object);
    if (it == object_at_.end()) return std::nullopt;
    return it->second;
}

Action ScriptedExpert::act(const ToyHouseEnv& env, const TaskSpec& task, Rng&) {
    if (env.holding() == task.goal.object) {
        if (env.agent_location() != task.goal.location) return {"goto", {task.goal.location}};
        return {"place", {task.goal.location}};
    }
    auto loc = env.location_of(task.goal.object);
    if (!loc) {
        // Holding something else; free the hand where we stand.
        return {"place", {env.agent_location()}};
    }
    if (env.agent_location() != *loc) return {"goto", {*loc}};
    return {"pick", {task.goal.object}};
}

Action EpsilonRandomAgent::act(const ToyHouseEnv& env, const TaskSpec& task, Rng& rng) {
    if (rng.uniform() >= epsilon_) return ScriptedExpert{}.act(env, task, rng);
    const std::size_t which = rng.uniform_index(task.allowed_actions.size());
    const std::string& name = task.allowed_actions[which];
    if (name == "goto" || name == "place") {
        return {name, {env.locations()[rng.uniform_index(env.locations().size())]}};
    }
    auto objs = env.object_names();
    if (objs.empty()) return {"goto", {env.locations()[rng.uniform_index(env.locations().size())]}};
    return {name, {objs[rng.uniform_index(objs.size())]}};
}

Trajectory rollout(ToyHouseEnv& env, Agent& agent, const TaskSpec& task, Rng& rng) {
    Trajectory t;
    t.task = task;
    if (env.goal_satisfied(task.goal)) {
        t.final_success = true;
        return t;
    }
    for (int k = 0; k < task.max_steps; ++k) {
        Step step;
        step.observation_summary = env.observation_summary(task);
        step.action = agent.act(env, task, rng);
        if (std::find(task.allowed_actions.begin(), task.allowed_actions.end(),
                      step.action.name) == task.allowed_actions.end()) {
            throw UnsupportedAction("agent emitted disallowed action '" + step.action.name + "'");
        }
        step.success = env.apply(step.action);
        t.steps.push_back(std::move(step));
        if (env.goal_satisfied(task.goal)) {
            t.final_success = true;
            break;
        }
    }
    return t;
}

std::vector<Trajectory> filter_successful(const std::vector<Trajectory>& trajectories) {
    std::vector<Trajectory> out;
    for (const auto& t : trajectories) {
        if (t.final_success) out.push_back(t);
    }
    return out;
}

io::Json PlanningSample::to_json() const {
    io::Json j;
    j["instruction"] = instruction;
    j["step_index"] = step_index;
    j["reasoning"] = reasoning;
    j["action"] = action;
    j["text"] = text;
    return j;
}

std::vector<PlanningSample> to_planning_samples(const Trajectory& trajectory) {
    if (!trajectory.final_success) throw RejectedFailedTrajectory();
    std::vector<PlanningSample> out;
    for (std::size_t k = 0; k < trajectory.steps.size(); ++k) {
        const Step& step = trajectory.steps[k];
        PlanningSample s;
        s.instruction = trajectory.task.instruction;
        s.step_index = static_cast<int>(k);
        s.reasoning = "Currently, " + step.observation_summary + ". The task is: " +
                      trajectory.task.instruction;
        s.action = step.action.serialize();
        s.text = "Reasoning-step-" + std::to_string(k + 1) + ": " + s.reasoning +
                 " Action: " + s.action + ".";
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Action> parse_actions_from_samples(const std::string& text) {
    std::vector<Action> actions;
    std::size_t pos = 0;
    const std::string key = "Action: ";
    while ((pos = text.find(key, pos)) != std::string::npos) {
        pos += key.size();
        const std::size_t end = text.find('.', pos);
        if (end == std::string::npos) throw MalformedMarkup("unterminated action clause");
        actions.push_back(Action::parse(text.substr(pos, end - pos)));
        pos = end + 1;
    }
    return actions;
}

}  // namespace forge::planning
