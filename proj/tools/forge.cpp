#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "forge/errors.hpp"
#include "forge/experiment.hpp"
#include "forge/flow.hpp"
#include "forge/grounding.hpp"
#include "forge/jsonl.hpp"
#include "forge/planning.hpp"
#include "forge/sim.hpp"
#include "forge/spatial.hpp"
#include "forge/validate.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string join_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    std::int64_t ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void write_manifest(const std::string& command, std::uint64_t seed,
                    const std::vector<fs::path>& outputs, std::int64_t elapsed_ms) {
    if (outputs.empty()) return;
    io::Manifest m;
    m.tool_version = kVersion;
    m.command = command;
    m.global_seed = seed;
    for (const auto& p : outputs) m.outputs.push_back(io::hash_output(p));
    m.elapsed_ms = elapsed_ms;
    m.write(outputs.front().string() + ".manifest.json");
}

grounding::GenOptions parse_mix(grounding::GenOptions opts, const std::string& mix) {
    if (mix.empty()) return opts;
    std::stringstream ss(mix);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos)
            throw ValidationError("bad --mix entry '" + part + "', expected kind:weight");
        const std::string kind = part.substr(0, colon);
        const double w = std::stod(part.substr(colon + 1));
        if (kind == "box")
            opts.box_weight = w;
        else if (kind == "point")
            opts.point_weight = w;
        else if (kind == "text")
            opts.text_weight = w;
        else
            throw ValidationError("unknown mix kind '" + kind + "'");
    }
    return opts;
}

sim::TaskDef load_task(const std::string& name, const std::string& task_config) {
    if (task_config.empty()) return sim::TaskDef::builtin(name);
    return sim::TaskDef::from_config(io::Config::parse_file(task_config), name);
}

int cmd_gen_grounding(const std::string& command, const std::string& in_path, int synthetic,
                      const std::string& out_path, std::uint64_t seed, double threshold,
                      bool no_filter, const std::string& mix, const std::string& point_mode,
                      std::size_t limit, int jobs) {
    Stopwatch timer;
    std::vector<grounding::MaskRecord> records;
    if (synthetic > 0) {
        records = grounding::synth_mask_records(static_cast<std::size_t>(synthetic), seed);
    } else {
        for (const auto& j : io::read_jsonl(in_path)) records.push_back(grounding::MaskRecord::from_json(j));
    }
    grounding::GenOptions opts;
    opts.seed = seed;
    opts.quality_threshold = threshold;
    opts.apply_filter = !no_filter;
    opts.limit = limit;
    opts.jobs = jobs;
    opts.point_mode =
        point_mode == "centroid" ? grounding::PointMode::centroid : grounding::PointMode::uniform;
    opts = parse_mix(opts, mix);

    grounding::TemplateCaptionProvider provider;
    grounding::GenStats stats;
    const auto samples = grounding::generate_grounding_samples(records, provider, opts, &stats);

    std::vector<io::Json> lines;
    lines.reserve(samples.size());
    for (const auto& s : samples) lines.push_back(s.to_json());
    io::write_jsonl(out_path, lines);
    write_manifest(command, seed, {out_path}, timer.ms());
    std::cerr << "gen-grounding: " << stats.emitted << " samples (" << stats.filtered_out
              << " filtered, " << stats.skipped_empty << " empty masks skipped)\n";
    return 0;
}

int cmd_gen_spatial(const std::string& command, const std::string& in_path, int synthetic,
                    const std::string& out_path, std::uint64_t seed, int per_scene, int jobs) {
    Stopwatch timer;
    std::vector<spatial::SceneGraph> scenes;
    if (synthetic > 0) {
        SeedScheme seeds{seed};
        for (int i = 0; i < synthetic; ++i) {
            const int n_objects = 4 + static_cast<int>(i % 5);
            scenes.push_back(spatial::make_random_scene(
                seeds.derive("synth-scene", static_cast<std::uint64_t>(i)), n_objects,
                "scene" + std::to_string(i)));
        }
    } else {
        for (const auto& j : io::read_jsonl(in_path)) scenes.push_back(spatial::SceneGraph::from_json(j));
    }
    std::vector<std::vector<spatial::SpatialQA>> per(scenes.size());
    io::parallel_for_indexed(scenes.size(), jobs, [&](std::size_t i) {
        per[i] = spatial::gen_for_scene(scenes[i], per_scene, seed);
    });
    std::vector<io::Json> lines;
    for (const auto& block : per) {
        for (const auto& qa : block) lines.push_back(qa.to_json());
    }
    io::write_jsonl(out_path, lines);
    write_manifest(command, seed, {out_path}, timer.ms());
    std::cerr << "gen-spatial: " << lines.size() << " questions from " << scenes.size()
              << " scenes\n";
    return 0;
}

int cmd_gen_planning(const std::string& command, const std::string& agent_name, int episodes,
                     std::uint64_t seed, double epsilon, const std::string& out_path,
                     const std::string& traj_path, int jobs) {
    Stopwatch timer;
    SeedScheme seeds{seed};
    std::vector<planning::Trajectory> trajectories(static_cast<std::size_t>(episodes));
    io::parallel_for_indexed(static_cast<std::size_t>(episodes), jobs, [&](std::size_t e) {
        auto [env, task] = planning::ToyHouseEnv::make_scenario(seeds.derive("plan-scenario", e));
        Rng rng(seeds.derive("plan-roll", e));
        if (agent_name == "expert") {
            planning::ScriptedExpert agent;
            trajectories[e] = planning::rollout(env, agent, task, rng);
        } else {
            planning::EpsilonRandomAgent agent(epsilon);
            trajectories[e] = planning::rollout(env, agent, task, rng);
        }
    });

    const auto kept = planning::filter_successful(trajectories);
    std::vector<io::Json> samples;
    for (const auto& t : kept) {
        for (const auto& s : planning::to_planning_samples(t)) samples.push_back(s.to_json());
    }
    io::write_jsonl(out_path, samples);
    std::vector<fs::path> outputs = {out_path};
    if (!traj_path.empty()) {
        std::vector<io::Json> archive;
        for (const auto& t : trajectories) archive.push_back(t.to_json());
        io::write_jsonl(traj_path, archive);
        outputs.push_back(traj_path);
    }
    write_manifest(command, seed, outputs, timer.ms());
    std::cerr << "gen-planning: " << kept.size() << "/" << episodes
              << " successful trajectories, " << samples.size() << " samples\n";
    return 0;
}

int cmd_gen_indomain(const std::string& command, const std::string& task_name,
                     const std::string& task_config, int count, std::uint64_t seed,
                     const std::string& kind, const std::string& out_path) {
    Stopwatch timer;
    const sim::TaskDef task = load_task(task_name, task_config);
    std::optional<sim::QaCategory> only;
    if (kind != "mixed") only = sim::qa_category_from_string(kind);
    const auto records = sim::gen_indomain(task, count, seed, only);
    std::vector<io::Json> lines;
    for (const auto& r : records) lines.push_back(r.to_json());
    io::write_jsonl(out_path, lines);
    write_manifest(command, seed, {out_path}, timer.ms());
    std::cerr << "gen-indomain: " << lines.size() << " QA records on task " << task.name << "\n";
    return 0;
}

int cmd_collect_demos(const std::string& command, const std::string& task_name,
                      const std::string& task_config, int episodes, std::uint64_t seed,
                      const std::string& out_path, int jobs) {
    Stopwatch timer;
    const sim::TaskDef task = load_task(task_name, task_config);
    const auto demos = sim::collect_demos(task, episodes, seed, jobs);
    int successes = 0;
    std::vector<io::Json> lines;
    for (const auto& d : demos) {
        successes += d.success ? 1 : 0;
        lines.push_back(d.to_json());
    }
    io::write_jsonl(out_path, lines);
    write_manifest(command, seed, {out_path}, timer.ms());
    std::cerr << "collect-demos: " << successes << "/" << episodes << " expert successes\n";
    return 0;
}

int cmd_train_policy(const std::string& command, const std::string& demos_path,
                     const std::string& task_name, const std::string& task_config, int steps,
                     int batch, double lr, std::uint64_t seed, const std::string& out_path,
                     const std::string& loss_csv, int d_model, int layers, bool literal_sign,
                     bool freeze_encoder) {
    Stopwatch timer;
    const sim::TaskDef task = load_task(task_name, task_config);
    std::vector<sim::EpisodeRecord> demos;
    for (const auto& j : io::read_jsonl(demos_path)) demos.push_back(sim::EpisodeRecord::from_json(j));

    nn::NetConfig net_cfg;
    net_cfg.ctx_feature_dim = sim::feature_dim(task);
    net_cfg.d_model = d_model;
    net_cfg.layers = layers;
    net_cfg.state_dim = 3;
    net_cfg.horizon = 4;
    net_cfg.action_dim = sim::kActionDim;

    SeedScheme seeds{seed};
    nn::VectorFieldNet net(net_cfg, seeds.derive("net-init", 0));
    auto [dataset, scaler] = exp::build_bc_dataset(demos, net_cfg.horizon);

    flow::TrainConfig cfg;
    cfg.lr = lr;
    cfg.batch_size = batch;
    cfg.steps = steps;
    cfg.seed = seeds.derive("train-order", 0);
    cfg.sign = literal_sign ? flow::FlowSign::noise_minus_data : flow::FlowSign::data_minus_noise;
    cfg.train_context_encoder = !freeze_encoder;

    const auto result = flow::train(net, dataset, cfg);
    flow::Policy policy{std::move(net), std::move(scaler), cfg};
    flow::save_policy(policy, out_path);
    std::vector<fs::path> outputs = {out_path};
    if (!loss_csv.empty()) {
        flow::write_loss_csv(loss_csv, result.loss_curve);
        outputs.push_back(loss_csv);
    }
    write_manifest(command, seed, outputs, timer.ms());
    std::cerr << "train-policy: " << steps << " steps on " << dataset.size()
              << " items, final loss " << result.final_loss << "\n";
    return 0;
}

int cmd_eval_policy(const std::string& command, const std::string& policy_path, bool use_expert,
                    bool use_random, const std::string& task_name, const std::string& task_config,
                    int episodes, std::uint64_t seed, int execute_len, const std::string& out_path,
                    const std::string& report_path, int jobs) {
    Stopwatch timer;
    const sim::TaskDef task = load_task(task_name, task_config);
    sim::EvalOptions opts;
    opts.episodes = episodes;
    opts.seed = seed;
    opts.execute_len = execute_len;
    opts.jobs = jobs;

    sim::EvalResult result;
    flow::Policy policy;
    if (use_expert) {
        sim::ExpertChunkPolicy p(task);
        result = sim::eval_policy(p, task, opts);
    } else if (use_random) {
        sim::RandomChunkPolicy p;
        result = sim::eval_policy(p, task, opts);
    } else {
        policy = flow::load_policy(policy_path);
        sim::FlowChunkPolicy p(policy);
        result = sim::eval_policy(p, task, opts);
    }

    std::vector<fs::path> outputs;
    if (!out_path.empty()) {
        std::vector<io::Json> lines;
        for (const auto& r : result.records) lines.push_back(r.to_json());
        io::write_jsonl(out_path, lines);
        outputs.push_back(out_path);
    }
    io::Json report;
    report["task"] = task.name;
    report["episodes"] = result.episodes;
    report["successes"] = result.successes;
    report["success_rate"] = result.success_rate;
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        out << report.dump(2) << '\n';
        outputs.push_back(report_path);
    }
    if (!outputs.empty()) write_manifest(command, seed, outputs, timer.ms());
    std::cout << report.dump() << "\n";
    return 0;
}

int cmd_experiment(const std::string& command, const std::string& matrix_path,
                   const std::string& out_dir, int jobs) {
    Stopwatch timer;
    exp::ExperimentConfig cfg = exp::ExperimentConfig::from_config(io::Config::parse_file(matrix_path));
    cfg.jobs = jobs;
    fs::create_directories(out_dir);
    const auto reports = exp::run_matrix(cfg);

    std::vector<fs::path> outputs;
    for (const auto& r : reports) {
        const fs::path p = fs::path(out_dir) /
                           ("report_" + r.variant + "_" + std::to_string(r.seed) + ".json");
        std::ofstream out(p, std::ios::binary);
        out << r.to_json().dump(2) << '\n';
        outputs.push_back(p);
    }
    const auto cmp = exp::compare(reports, cfg.theta);
    const fs::path csv_path = fs::path(out_dir) / "summary.csv";
    const fs::path md_path = fs::path(out_dir) / "summary.md";
    {
        std::ofstream out(csv_path, std::ios::binary);
        out << cmp.csv();
    }
    {
        std::ofstream out(md_path, std::ios::binary);
        out << cmp.markdown();
    }
    outputs.push_back(csv_path);
    outputs.push_back(md_path);
    write_manifest(command, cfg.seeds.empty() ? 0 : cfg.seeds.front(), outputs, timer.ms());
    std::cout << cmp.markdown();
    return 0;
}

int cmd_validate(const std::string& in_path, const std::string& schema) {
    const auto report = io::validate_file(in_path, schema);
    if (report.ok()) {
        std::cout << "valid: " << report.records << " records\n";
        return 0;
    }
    for (const auto& v : report.violations) {
        std::cerr << in_path << ":" << v.line << ": " << v.message << "\n";
    }
    std::cerr << report.violations.size() << " violation(s) in " << report.records
              << " records\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: embodied QA data engine, flow-matching policy, and toy closed-loop eval"};
    app.require_subcommand(1);
    const std::string command = join_argv(argc, argv);

    // gen-grounding
    auto* gg = app.add_subcommand("gen-grounding", "Generate grounding QA from mask records");
    std::string gg_in, gg_out, gg_mix = "box:0.4,point:0.4,text:0.2", gg_point_mode = "uniform";
    int gg_synth = 0, gg_jobs = 1;
    std::uint64_t gg_seed = 0;
    double gg_threshold = 0.9;
    bool gg_no_filter = false;
    std::size_t gg_limit = 0;
    auto* gg_in_opt = gg->add_option("--in", gg_in, "Input mask JSONL");
    gg->add_option("--synthetic", gg_synth, "Generate N synthetic masks instead of reading --in");
    gg->add_option("--out", gg_out, "Output JSONL")->required();
    gg->add_option("--seed", gg_seed, "Global seed");
    gg->add_option("--threshold", gg_threshold, "Quality threshold (default 0.9)");
    gg->add_flag("--no-filter", gg_no_filter, "Disable the quality filter");
    gg->add_option("--mix", gg_mix, "Kind weights, e.g. box:0.4,point:0.4,text:0.2");
    gg->add_option("--point-mode", gg_point_mode, "uniform|centroid")
        ->check(CLI::IsMember({"uniform", "centroid"}));
    gg->add_option("--limit", gg_limit, "Emit at most N samples");
    gg->add_option("--jobs", gg_jobs, "Worker threads");

    // gen-spatial
    auto* gs = app.add_subcommand("gen-spatial", "Generate spatial QA from scene graphs");
    std::string gs_in, gs_out;
    int gs_synth = 0, gs_per_scene = 6, gs_jobs = 1;
    std::uint64_t gs_seed = 0;
    auto* gs_in_opt = gs->add_option("--in", gs_in, "Input scene JSONL");
    gs->add_option("--synthetic", gs_synth, "Generate N synthetic scenes instead of reading --in");
    gs->add_option("--out", gs_out, "Output JSONL")->required();
    gs->add_option("--seed", gs_seed, "Global seed");
    gs->add_option("--per-scene", gs_per_scene, "Questions per scene");
    gs->add_option("--jobs", gs_jobs, "Worker threads");

    // gen-planning
    auto* gp = app.add_subcommand("gen-planning", "Roll out planning tasks and keep successes");
    std::string gp_env = "toy", gp_agent = "expert", gp_out, gp_traj;
    int gp_episodes = 100, gp_jobs = 1;
    std::uint64_t gp_seed = 0;
    double gp_eps = 0.5;
    gp->add_option("--env", gp_env, "Environment (toy)")->check(CLI::IsMember({"toy"}));
    gp->add_option("--agent", gp_agent, "expert|random")
        ->check(CLI::IsMember({"expert", "random"}));
    gp->add_option("--episodes", gp_episodes, "Episode count");
    gp->add_option("--seed", gp_seed, "Global seed");
    gp->add_option("--epsilon", gp_eps, "Random-agent exploration rate");
    gp->add_option("--out", gp_out, "Planning sample JSONL")->required();
    gp->add_option("--trajectories", gp_traj, "Optional trajectory archive JSONL");
    gp->add_option("--jobs", gp_jobs, "Worker threads");

    // gen-indomain
    auto* gi = app.add_subcommand("gen-indomain", "Annotate simulator states with QA");
    std::string gi_task = "pick_place", gi_kind = "mixed", gi_out, gi_task_config;
    int gi_count = 1000;
    std::uint64_t gi_seed = 0;
    gi->add_option("--task", gi_task, "Task name")
        ->check(CLI::IsMember(sim::TaskDef::builtin_names()));
    gi->add_option("--count", gi_count, "Record count");
    gi->add_option("--seed", gi_seed, "Global seed");
    gi->add_option("--kind", gi_kind, "general|grounding|spatial|mixed")
        ->check(CLI::IsMember({"general", "grounding", "spatial", "mixed"}));
    gi->add_option("--out", gi_out, "Output JSONL")->required();
    gi->add_option("--task-config", gi_task_config, "Task config file");

    // collect-demos
    auto* cd = app.add_subcommand("collect-demos", "Record scripted-expert episodes");
    std::string cd_task = "pick_place", cd_out, cd_task_config;
    int cd_episodes = 500, cd_jobs = 1;
    std::uint64_t cd_seed = 0;
    cd->add_option("--task", cd_task, "Task name")
        ->check(CLI::IsMember(sim::TaskDef::builtin_names()));
    cd->add_option("--episodes", cd_episodes, "Episode count");
    cd->add_option("--seed", cd_seed, "Global seed");
    cd->add_option("--out", cd_out, "Output JSONL")->required();
    cd->add_option("--task-config", cd_task_config, "Task config file");
    cd->add_option("--jobs", cd_jobs, "Worker threads");

    // train-policy
    auto* tp = app.add_subcommand("train-policy", "Train the flow-matching policy on demos");
    std::string tp_demos, tp_task = "pick_place", tp_out, tp_loss_csv, tp_task_config;
    int tp_steps = 30000, tp_batch = 16, tp_d_model = 32, tp_layers = 2;
    double tp_lr = 5e-5;
    std::uint64_t tp_seed = 0;
    bool tp_literal_sign = false, tp_freeze_encoder = false;
    tp->add_option("--demos", tp_demos, "Demo episode JSONL")->required();
    tp->add_option("--task", tp_task, "Task name")
        ->check(CLI::IsMember(sim::TaskDef::builtin_names()));
    tp->add_option("--steps", tp_steps, "Optimizer steps");
    tp->add_option("--batch", tp_batch, "Batch size");
    tp->add_option("--lr", tp_lr, "Learning rate");
    tp->add_option("--seed", tp_seed, "Global seed");
    tp->add_option("--out", tp_out, "Checkpoint path")->required();
    tp->add_option("--loss-csv", tp_loss_csv, "Loss curve CSV path");
    tp->add_option("--d-model", tp_d_model, "Model width");
    tp->add_option("--layers", tp_layers, "Attention blocks");
    tp->add_flag("--literal-sign", tp_literal_sign,
                 "Train against the noise-minus-data field (and integrate with the flipped step)");
    tp->add_flag("--freeze-encoder", tp_freeze_encoder, "Do not train the context encoder");
    tp->add_option("--task-config", tp_task_config, "Task config file");

    // eval-policy
    auto* ep = app.add_subcommand("eval-policy", "Closed-loop evaluation");
    std::string ep_policy, ep_task = "pick_place", ep_out, ep_report, ep_task_config;
    int ep_episodes = 240, ep_exec = 2, ep_jobs = 1;
    std::uint64_t ep_seed = 0;
    bool ep_expert = false, ep_random = false;
    ep->add_option("--policy", ep_policy, "Policy checkpoint");
    ep->add_flag("--expert", ep_expert, "Evaluate the scripted expert");
    ep->add_flag("--random", ep_random, "Evaluate the random-noise baseline");
    ep->add_option("--task", ep_task, "Task name")
        ->check(CLI::IsMember(sim::TaskDef::builtin_names()));
    ep->add_option("--episodes", ep_episodes, "Episode count");
    ep->add_option("--seed", ep_seed, "Global seed");
    ep->add_option("--execute-len", ep_exec, "Actions executed per chunk query");
    ep->add_option("--out", ep_out, "Episode record JSONL");
    ep->add_option("--report", ep_report, "Summary JSON path");
    ep->add_option("--task-config", ep_task_config, "Task config file");
    ep->add_option("--jobs", ep_jobs, "Worker threads");

    // experiment
    auto* ex = app.add_subcommand("experiment", "Initialization-variant comparison matrix");
    std::string ex_matrix, ex_out = "reports";
    int ex_jobs = 1;
    ex->add_option("--matrix", ex_matrix, "Matrix config file")->required();
    ex->add_option("--out", ex_out, "Report directory");
    ex->add_option("--jobs", ex_jobs, "Parallel cells");

    // validate
    auto* va = app.add_subcommand("validate", "Validate a JSONL file against a schema");
    std::string va_file, va_schema;
    va->add_option("file", va_file, "JSONL path")->required();
    va->add_option("--schema", va_schema, "Schema name")
        ->required()
        ->check(CLI::IsMember(io::schema_names()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run 'forge --help' for usage\n";
        return 2;
    }

    try {
        if (gg->parsed()) {
            if (gg_synth <= 0 && gg_in_opt->count() == 0) {
                std::cerr << "gen-grounding: need --in or --synthetic\n";
                return 2;
            }
            return cmd_gen_grounding(command, gg_in, gg_synth, gg_out, gg_seed, gg_threshold,
                                     gg_no_filter, gg_mix, gg_point_mode, gg_limit, gg_jobs);
        }
        if (gs->parsed()) {
            if (gs_synth <= 0 && gs_in_opt->count() == 0) {
                std::cerr << "gen-spatial: need --in or --synthetic\n";
                return 2;
            }
            return cmd_gen_spatial(command, gs_in, gs_synth, gs_out, gs_seed, gs_per_scene,
                                   gs_jobs);
        }
        if (gp->parsed())
            return cmd_gen_planning(command, gp_agent, gp_episodes, gp_seed, gp_eps, gp_out,
                                    gp_traj, gp_jobs);
        if (gi->parsed())
            return cmd_gen_indomain(command, gi_task, gi_task_config, gi_count, gi_seed, gi_kind,
                                    gi_out);
        if (cd->parsed())
            return cmd_collect_demos(command, cd_task, cd_task_config, cd_episodes, cd_seed,
                                     cd_out, cd_jobs);
        if (tp->parsed())
            return cmd_train_policy(command, tp_demos, tp_task, tp_task_config, tp_steps,
                                    tp_batch, tp_lr, tp_seed, tp_out, tp_loss_csv, tp_d_model,
                                    tp_layers, tp_literal_sign, tp_freeze_encoder);
        if (ep->parsed()) {
            if (!ep_expert && !ep_random && ep_policy.empty()) {
                std::cerr << "eval-policy: need --policy, --expert, or --random\n";
                return 2;
            }
            return cmd_eval_policy(command, ep_policy, ep_expert, ep_random, ep_task,
                                   ep_task_config, ep_episodes, ep_seed, ep_exec, ep_out,
                                   ep_report, ep_jobs);
        }
        if (ex->parsed()) return cmd_experiment(command, ex_matrix, ex_out, ex_jobs);
        if (va->parsed()) return cmd_validate(va_file, va_schema);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
