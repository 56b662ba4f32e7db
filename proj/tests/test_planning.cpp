#include <doctest.h>

#include "forge/errors.hpp"
#include "forge/planning.hpp"

using namespace forge;
using namespace forge::planning;

TEST_SUITE("planning") {

TEST_CASE("goal satisfied at t=0 yields an empty successful trajectory") {
    auto [env, task] = ToyHouseEnv::make_scenario(4);
    // Move the object to the goal by hand, then roll out.
    ToyHouseEnv staged = env;
    REQUIRE(staged.apply({"goto", {*staged.location_of(task.goal.object)}}));
    REQUIRE(staged.apply({"pick", {task.goal.object}}));
    REQUIRE(staged.apply({"goto", {task.goal.location}}));
    REQUIRE(staged.apply({"place", {task.goal.location}}));
    REQUIRE(staged.goal_satisfied(task.goal));

    ScriptedExpert agent;
    Rng rng(0);
    const Trajectory t = rollout(staged, agent, task, rng);
    CHECK(t.final_success);
    CHECK(t.steps.empty());
}

TEST_CASE("scripted expert succeeds within max_steps on many scenarios") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto [env, task] = ToyHouseEnv::make_scenario(seed);
        ScriptedExpert agent;
        Rng rng(seed);
        const Trajectory t = rollout(env, agent, task, rng);
        CHECK(t.final_success);
        CHECK(t.steps.size() <= static_cast<std::size_t>(task.max_steps));
        CHECK(t.steps.size() <= 4);  // goto, pick, goto, place at most
        for (const auto& s : t.steps) CHECK(s.success);
    }
}

TEST_CASE("disallowed action names throw UnsupportedAction") {
    auto [env, task] = ToyHouseEnv::make_scenario(1);
    struct RogueAgent : Agent {
        Action act(const ToyHouseEnv&, const TaskSpec&, Rng&) override {
            return {"teleport", {"moon"}};
        }
    } rogue;
    Rng rng(0);
    CHECK_THROWS_AS(rollout(env, rogue, task, rng), UnsupportedAction);
}

TEST_CASE("environment primitives fail gracefully") {
    auto [env, task] = ToyHouseEnv::make_scenario(2);
    CHECK_FALSE(env.apply({"pick", {"nonexistent"}}));
    CHECK_FALSE(env.apply({"place", {env.agent_location()}}));  // empty hand
    CHECK(env.apply({"goto", {env.locations()[0]}}));
    CHECK_FALSE(env.apply({"goto", {"nowhere"}}));
    CHECK_THROWS_AS(env.apply({"fly", {}}), UnsupportedAction);
}

TEST_CASE("filter_successful is the final_success predicate, order preserved") {
    std::vector<Trajectory> batch;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto [env, task] = ToyHouseEnv::make_scenario(seed);
        EpsilonRandomAgent agent(0.8);
        Rng rng(seed * 31 + 7);
        batch.push_back(rollout(env, agent, task, rng));
    }
    const auto kept = filter_successful(batch);
    std::size_t want = 0;
    for (const auto& t : batch) want += t.final_success ? 1 : 0;
    CHECK(kept.size() == want);
    CHECK(want > 0);
    CHECK(want < batch.size());  // epsilon 0.8 must produce some failures
    for (const auto& t : kept) CHECK(t.final_success);

    std::size_t cursor = 0;
    for (const auto& t : batch) {
        if (!t.final_success) continue;
        CHECK(kept[cursor].task.instruction == t.task.instruction);
        CHECK(kept[cursor].steps.size() == t.steps.size());
        ++cursor;
    }

    // Explicit [success, fail, success] pattern.
    std::vector<Trajectory> mixed;
    for (const auto& t : batch) {
        if (mixed.empty() && t.final_success) mixed.push_back(t);
        if (mixed.size() == 1 && !t.final_success) mixed.push_back(t);
        if (mixed.size() == 2 && t.final_success) {
            mixed.push_back(t);
            break;
        }
    }
    REQUIRE(mixed.size() == 3);
    CHECK(filter_successful(mixed).size() == 2);
    CHECK(filter_successful({mixed[1]}).empty());
}

TEST_CASE("planning samples render and parse back to the step list") {
    auto [env, task] = ToyHouseEnv::make_scenario(9);
    ScriptedExpert agent;
    Rng rng(3);
    const Trajectory t = rollout(env, agent, task, rng);
    REQUIRE(t.final_success);
    const auto samples = to_planning_samples(t);
    CHECK(samples.size() == t.steps.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        CHECK(samples[k].action == t.steps[k].action.serialize());
        CHECK(samples[k].step_index == static_cast<int>(k));
    }

    std::string concatenated;
    for (const auto& s : samples) concatenated += s.text + "\n\n";
    const auto actions = parse_actions_from_samples(concatenated);
    REQUIRE(actions.size() == t.steps.size());
    for (std::size_t k = 0; k < actions.size(); ++k) CHECK(actions[k] == t.steps[k].action);
}

TEST_CASE("failed trajectories are rejected by the sample renderer") {
    Trajectory failed;
    failed.final_success = false;
    CHECK_THROWS_AS(to_planning_samples(failed), RejectedFailedTrajectory);
}

TEST_CASE("trajectory serialization preserves steps, legality, and flags") {
    auto [env, task] = ToyHouseEnv::make_scenario(17);
    EpsilonRandomAgent agent(0.5);
    Rng rng(99);
    const Trajectory t = rollout(env, agent, task, rng);
    const io::Json j = t.to_json();
    CHECK(j.at("steps").size() == t.steps.size());
    CHECK(j.at("final_success").get<bool>() == t.final_success);
    CHECK(j.at("steps_used").get<std::size_t>() == t.steps.size());
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
        const Step back = Step::from_json(j.at("steps").at(k));
        CHECK(back.action == t.steps[k].action);
        CHECK(back.success == t.steps[k].success);
        CHECK(back.observation_summary == t.steps[k].observation_summary);
    }
}

TEST_CASE("fixed seed reproduces the identical trajectory set") {
    auto run = [](std::uint64_t seed) {
        std::vector<std::string> dumps;
        for (std::uint64_t e = 0; e < 30; ++e) {
            SeedScheme seeds{seed};
            auto [env, task] = ToyHouseEnv::make_scenario(seeds.derive("plan-scenario", e));
            EpsilonRandomAgent agent(0.5);
            Rng rng(seeds.derive("plan-roll", e));
            dumps.push_back(rollout(env, agent, task, rng).to_json().dump());
        }
        return dumps;
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}

TEST_CASE("expert recovers when holding the wrong object") {
    auto [env, task] = ToyHouseEnv::make_scenario(21);
    // Grab some other object first.
    std::string other;
    for (const auto& name : env.object_names()) {
        if (name != task.goal.object) {
            other = name;
            break;
        }
    }
    REQUIRE_FALSE(other.empty());
    REQUIRE(env.apply({"goto", {*env.location_of(other)}}));
    REQUIRE(env.apply({"pick", {other}}));

    ScriptedExpert agent;
    Rng rng(0);
    const Trajectory t = rollout(env, agent, task, rng);
    CHECK(t.final_success);
}

}  // TEST_SUITE
