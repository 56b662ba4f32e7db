#include "forge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/spatial.hpp"

namespace forge::exp {

std::pair<std::vector<flow::TrainItem>, flow::ActionScaler> build_bc_dataset(
    const std::vector<sim::EpisodeRecord>& demos, int horizon) {
    std::size_t total_rows = 0;
    for (const auto& d : demos) total_rows += d.actions.size();
    if (total_rows == 0) throw EmptyDataset("no demo actions");

    nn::Tensor all_actions(static_cast<int>(total_rows), sim::kActionDim);
    int r = 0;
    for (const auto& d : demos) {
        for (const auto& a : d.actions) {
            all_actions.at(r, 0) = a.dx;
            all_actions.at(r, 1) = a.dy;
            all_actions.at(r, 2) = a.grip;
            ++r;
        }
    }
    flow::ActionScaler scaler = flow::fit_action_scaler(all_actions);

    std::vector<flow::TrainItem> items;
    items.reserve(total_rows);
    for (const auto& d : demos) {
        const auto n = static_cast<int>(d.actions.size());
        for (int t = 0; t < n; ++t) {
            flow::TrainItem item;
            item.obs = sim::make_observation(d.states[static_cast<std::size_t>(t)]);
            flow::Chunk chunk(horizon, sim::kActionDim);
            for (int i = 0; i < horizon; ++i) {
                const auto& a = d.actions[static_cast<std::size_t>(std::min(t + i, n - 1))];
                chunk.at(i, 0) = a.dx;
                chunk.at(i, 1) = a.dy;
                chunk.at(i, 2) = a.grip;
            }
            item.chunk = scaler.normalize_chunk(chunk);
            items.push_back(std::move(item));
        }
    }
    return {std::move(items), std::move(scaler)};
}

InitVariant InitVariant::from_name(const std::string& name) {
    if (name == "random") return {name, CorpusKind::none};
    if (name == "out_domain") return {name, CorpusKind::out_domain};
    if (name == "in_domain") return {name, CorpusKind::in_domain};
    throw ValidationError("unknown variant '" + name + "'");
}

std::vector<PretrainItem> in_domain_corpus(const sim::TaskDef& task, int n, std::uint64_t seed) {
    SeedScheme seeds{seed};
    std::vector<PretrainItem> out(static_cast<std::size_t>(n));
    const sim::QaCategory cycle[] = {sim::QaCategory::general, sim::QaCategory::grounding,
                                     sim::QaCategory::spatial};
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        Rng rng(seeds.derive("pretrain-in:" + task.name, i));
        const sim::EpisodeRecord ep = sim::run_expert_episode(task, rng);
        const sim::SimState& s = ep.states[rng.uniform_index(ep.states.size())];
        const sim::QaRecord rec = sim::annotate(s, task, cycle[i % 3], rng);
        out[i] = PretrainItem{sim::obs_features(s), rec.target};
    }
    return out;
}

std::vector<PretrainItem> out_domain_corpus(int feature_dim, int n, std::uint64_t seed) {
    SeedScheme seeds{seed};
    std::vector<PretrainItem> out(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        Rng rng(seeds.derive("pretrain-out", i));
        const spatial::SceneGraph scene =
            spatial::make_random_scene(rng.next_u64(), 6, "pretrain" + std::to_string(i));

        // Fixed-layout scene features, metres scaled by 1/10 into the same
        // numeric range as workspace observations.
        std::vector<double> feat;
        feat.push_back(scene.room_dims[0] / 10.0);
        feat.push_back(scene.room_dims[1] / 10.0);
        feat.push_back(scene.room_dims[2] / 10.0);
        for (const auto& o : scene.objects) {
            feat.push_back(o.center[0] / 10.0);
            feat.push_back(o.center[1] / 10.0);
            feat.push_back(o.center[2] / 10.0);
        }
        feat.resize(static_cast<std::size_t>(feature_dim), 0.0);

        std::vector<double> target(sim::kQaTargetDim, 0.0);
        const auto& a = scene.objects[0];
        const auto& b = scene.objects[1];
        if (rng.uniform() < 0.5) {
            const spatial::SpatialQA qa = spatial::gen_abs_distance(scene, a.id, b.id);
            target[0] = qa.value.value() / 10.0;
        } else {
            const double dx = b.center[0] - a.center[0];
            const double dy = b.center[1] - a.center[1];
            target[1] = dx / 10.0;
            target[2] = dy / 10.0;
            target[3] = (dx > 0.0) ? 1.0 : 0.0;
        }
        const spatial::SpatialQA room = spatial::gen_room_size(scene);
        target[4] = room.value.value() / 100.0;
        out[i] = PretrainItem{std::move(feat), std::move(target)};
    }
    return out;
}

std::vector<nn::Tensor> pretrain_context_encoder(const std::vector<PretrainItem>& corpus,
                                                 const std::vector<nn::Tensor>& init,
                                                 const PretrainConfig& cfg, std::uint64_t seed) {
    if (corpus.empty()) throw EmptyDataset("pretraining corpus is empty");
    if (init.size() != 4) throw ShapeMismatch("encoder init must be 4 tensors");
    const int feature_dim = init[0].rows;
    const int out_dim = init[2].cols;
    const int target_dim = static_cast<int>(corpus.front().target.size());

    std::vector<nn::ParamBlock> params;
    params.push_back({"enc.w1", init[0]});
    params.push_back({"enc.b1", init[1]});
    params.push_back({"enc.w2", init[2]});
    params.push_back({"enc.b2", init[3]});
    Rng init_rng(seed);
    {
        nn::Tensor probe_w(out_dim, target_dim);
        const double bound = std::sqrt(6.0 / (out_dim + target_dim));
        for (double& x : probe_w.v) x = init_rng.uniform(-bound, bound);
        params.push_back({"probe.w", std::move(probe_w)});
        params.push_back({"probe.b", nn::Tensor(1, target_dim)});
    }

    Rng rng(init_rng.next_u64());
    nn::Adam opt(cfg.lr, 0.9, 0.999, 1e-8);
    for (int step = 0; step < cfg.steps; ++step) {
        nn::Tape tape;
        std::vector<nn::Tape::Var> pv;
        pv.reserve(params.size());
        for (const auto& p : params) pv.push_back(tape.param(p.t));
        nn::Tape::Var total = -1;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto& item = corpus[rng.uniform_index(corpus.size())];
            if (static_cast<int>(item.input.size()) != feature_dim)
                throw ShapeMismatch("pretrain item feature width mismatch");
            nn::Tape::Var x = tape.input(nn::Tensor(1, feature_dim, item.input));
            nn::Tape::Var h = tape.tanh_(tape.add_rowvec(tape.matmul(x, pv[0]), pv[1]));
            nn::Tape::Var emb = tape.add_rowvec(tape.matmul(h, pv[2]), pv[3]);
            nn::Tape::Var pred = tape.add_rowvec(tape.matmul(emb, pv[4]), pv[5]);
            nn::Tape::Var l = tape.mse_against(pred, nn::Tensor(1, target_dim, item.target));
            total = (total < 0) ? l : tape.add(total, l);
        }
        total = tape.scale(total, 1.0 / cfg.batch_size);
        tape.backward(total);
        std::vector<nn::Tensor> grads;
        grads.reserve(pv.size());
        for (auto var : pv) grads.push_back(tape.grad(var));
        opt.step(params, grads);
    }
    return {params[0].t, params[1].t, params[2].t, params[3].t};
}

ExperimentConfig ExperimentConfig::from_config(const io::Config& cfg) {
    ExperimentConfig e;
    e.task = cfg.get("experiment.task", e.task);
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) parts.push_back(item);
        }
        return parts;
    };
    if (cfg.has("experiment.variants")) e.variants = split(cfg.get("experiment.variants"));
    if (cfg.has("experiment.seeds")) {
        e.seeds.clear();
        for (const auto& s : split(cfg.get("experiment.seeds")))
            e.seeds.push_back(std::stoull(s));
    }
    e.demos = static_cast<int>(cfg.get_int("experiment.demos", e.demos));
    e.train_steps = static_cast<int>(cfg.get_int("experiment.train_steps", e.train_steps));
    e.eval_every = static_cast<int>(cfg.get_int("experiment.eval_every", e.eval_every));
    e.eval_episodes = static_cast<int>(cfg.get_int("experiment.eval_episodes", e.eval_episodes));
    e.theta = cfg.get_double("experiment.theta", e.theta);
    e.expert_reference = cfg.get_int("experiment.expert_reference", 1) != 0;
    e.train.lr = cfg.get_double("train.lr", e.train.lr);
    e.train.batch_size = static_cast<int>(cfg.get_int("train.batch", e.train.batch_size));
    e.pretrain.steps = static_cast<int>(cfg.get_int("pretrain.steps", e.pretrain.steps));
    e.pretrain.batch_size = static_cast<int>(cfg.get_int("pretrain.batch", e.pretrain.batch_size));
    e.pretrain.lr = cfg.get_double("pretrain.lr", e.pretrain.lr);
    e.pretrain.corpus_size =
        static_cast<int>(cfg.get_int("pretrain.corpus", e.pretrain.corpus_size));
    e.d_model = static_cast<int>(cfg.get_int("net.d_model", e.d_model));
    e.layers = static_cast<int>(cfg.get_int("net.layers", e.layers));
    e.enc_hidden = static_cast<int>(cfg.get_int("net.enc_hidden", e.enc_hidden));
    e.ctx_tokens = static_cast<int>(cfg.get_int("net.ctx_tokens", e.ctx_tokens));
    return e;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    out << "task=" << task << "\n";
    out << "variants=";
    for (const auto& v : variants) out << v << ",";
    out << "\nseeds=";
    for (auto s : seeds) out << s << ",";
    out << "\ndemos=" << demos << "\ntrain_steps=" << train_steps
        << "\neval_every=" << eval_every << "\neval_episodes=" << eval_episodes
        << "\ntheta=" << theta << "\nlr=" << train.lr << "\nbatch=" << train.batch_size
        << "\npretrain_steps=" << pretrain.steps << "\npretrain_lr=" << pretrain.lr
        << "\npretrain_corpus=" << pretrain.corpus_size << "\nd_model=" << d_model
        << "\nlayers=" << layers << "\nenc_hidden=" << enc_hidden
        << "\nctx_tokens=" << ctx_tokens << "\n";
    return out.str();
}

std::string ExperimentConfig::config_hash() const {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return hex;
}

io::Json RunReport::to_json() const {
    io::Json j;
    j["variant"] = variant;
    j["seed"] = seed;
    j["task"] = task;
    j["theta"] = theta;
    io::Json evals_json = io::Json::array();
    for (const auto& e : evals)
        evals_json.push_back(io::Json{{"step", e.step}, {"success", e.success}});
    j["evals"] = evals_json;
    if (steps_to_threshold)
        j["steps_to_threshold"] = *steps_to_threshold;
    else
        j["steps_to_threshold"] = nullptr;
    j["censored"] = !steps_to_threshold.has_value();
    j["final_success"] = final_success;
    j["config_hash"] = config_hash;
    return j;
}

RunReport RunReport::from_json(const io::Json& j) {
    RunReport r;
    r.variant = j.at("variant");
    r.seed = j.at("seed");
    r.task = j.at("task");
    r.theta = j.at("theta");
    for (const auto& e : j.at("evals"))
        r.evals.push_back(EvalPoint{e.at("step"), e.at("success")});
    if (!j.at("steps_to_threshold").is_null())
        r.steps_to_threshold = j.at("steps_to_threshold").get<int>();
    r.final_success = j.at("final_success");
    r.config_hash = j.at("config_hash");
    return r;
}

RunReport run_cell(const ExperimentConfig& cfg, const InitVariant& variant, std::uint64_t seed) {
    const sim::TaskDef task = sim::TaskDef::builtin(cfg.task);
    SeedScheme seeds{seed};

    nn::NetConfig net_cfg;
    net_cfg.ctx_feature_dim = sim::feature_dim(task);
    net_cfg.enc_hidden = cfg.enc_hidden;
    net_cfg.ctx_tokens = cfg.ctx_tokens;
    net_cfg.d_model = cfg.d_model;
    net_cfg.state_dim = 3;
    net_cfg.horizon = 4;
    net_cfg.action_dim = sim::kActionDim;
    net_cfg.layers = cfg.layers;

    // One base init per seed: variants differ only in the encoder weights.
    nn::VectorFieldNet net(net_cfg, seeds.derive("net-init", 0));

    if (variant.corpus != CorpusKind::none) {
        std::vector<nn::Tensor> enc_init;
        const auto [first, last] = net.encoder_param_range();
        for (std::size_t i = first; i < last; ++i) enc_init.push_back(net.params()[i].t);
        std::vector<PretrainItem> corpus;
        if (variant.corpus == CorpusKind::in_domain) {
            corpus = in_domain_corpus(task, cfg.pretrain.corpus_size,
                                      seeds.derive("corpus-in", 0));
        } else {
            corpus = out_domain_corpus(net_cfg.ctx_feature_dim, cfg.pretrain.corpus_size,
                                       seeds.derive("corpus-out", 0));
        }
        auto enc = pretrain_context_encoder(corpus, enc_init, cfg.pretrain,
                                            seeds.derive("pretrain:" + variant.name, 0));
        for (std::size_t i = first; i < last; ++i) net.params()[i].t = enc[i - first];
    }

    const auto demos = sim::collect_demos(task, cfg.demos, seeds.derive("demos", 0));
    auto [dataset, scaler] = build_bc_dataset(demos, net_cfg.horizon);

    flow::TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seeds.derive("train-order", 0);  // identical across variants
    flow::Trainer trainer(net, dataset, train_cfg);

    RunReport report;
    report.variant = variant.name;
    report.seed = seed;
    report.task = cfg.task;
    report.theta = cfg.theta;
    report.config_hash = cfg.config_hash();

    for (int step = cfg.eval_every; step <= cfg.train_steps; step += cfg.eval_every) {
        trainer.run(cfg.eval_every);
        flow::Policy policy{net, scaler, train_cfg};
        sim::FlowChunkPolicy chunk_policy(policy);
        sim::EvalOptions eval_opts;
        eval_opts.episodes = cfg.eval_episodes;
        eval_opts.seed = seeds.derive("eval-schedule", static_cast<std::uint64_t>(step));
        eval_opts.keep_traces = false;
        const auto r = sim::eval_policy(chunk_policy, task, eval_opts);
        report.evals.push_back(EvalPoint{trainer.steps_done(), r.success_rate});
        if (!report.steps_to_threshold && r.success_rate >= cfg.theta)
            report.steps_to_threshold = trainer.steps_done();
    }
    report.final_success = report.evals.empty() ? 0.0 : report.evals.back().success;
    return report;
}

std::vector<RunReport> run_matrix(const ExperimentConfig& cfg) {
    struct Cell {
        InitVariant variant;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& vname : cfg.variants) {
        const InitVariant v = InitVariant::from_name(vname);
        for (auto s : cfg.seeds) cells.push_back({v, s});
    }
    std::vector<RunReport> reports(cells.size());
    io::parallel_for_indexed(cells.size(), cfg.jobs, [&](std::size_t i) {
        reports[i] = run_cell(cfg, cells[i].variant, cells[i].seed);
    });

    if (cfg.expert_reference) {
        const sim::TaskDef task = sim::TaskDef::builtin(cfg.task);
        for (auto s : cfg.seeds) {
            SeedScheme seeds{s};
            sim::ExpertChunkPolicy expert(task);
            sim::EvalOptions eval_opts;
            eval_opts.episodes = cfg.eval_episodes;
            eval_opts.seed = seeds.derive("eval-schedule", static_cast<std::uint64_t>(cfg.eval_every));
            eval_opts.keep_traces = false;
            const auto r = sim::eval_policy(expert, task, eval_opts);
            RunReport ref;
            ref.variant = "expert_reference";
            ref.seed = s;
            ref.task = cfg.task;
            ref.theta = cfg.theta;
            ref.steps_to_threshold = 0;
            ref.evals.push_back(EvalPoint{0, r.success_rate});
            ref.final_success = r.success_rate;
            ref.config_hash = cfg.config_hash();
            reports.push_back(std::move(ref));
        }
    }
    return reports;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n % 2 == 1) return v[n / 2];
    return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

Comparison compare(const std::vector<RunReport>& reports, double theta) {
    Comparison cmp;
    cmp.theta = theta;
    std::vector<std::string> names;
    for (const auto& r : reports) {
        if (std::find(names.begin(), names.end(), r.variant) == names.end())
            names.push_back(r.variant);
    }
    for (const auto& name : names) {
        CompareRow row;
        row.variant = name;
        std::vector<double> steps, finals;
        for (const auto& r : reports) {
            if (r.variant != name) continue;
            ++row.cells;
            steps.push_back(r.steps_to_threshold
                                ? static_cast<double>(*r.steps_to_threshold)
                                : std::numeric_limits<double>::infinity());
            finals.push_back(r.final_success);
        }
        row.median_steps_to_threshold = median(steps);
        row.censored = std::isinf(row.median_steps_to_threshold);
        row.median_final_success = median(finals);
        cmp.rows.push_back(std::move(row));
    }
    std::sort(cmp.rows.begin(), cmp.rows.end(), [](const CompareRow& a, const CompareRow& b) {
        if (a.median_steps_to_threshold != b.median_steps_to_threshold)
            return a.median_steps_to_threshold < b.median_steps_to_threshold;
        if (a.median_final_success != b.median_final_success)
            return a.median_final_success > b.median_final_success;
        return a.variant < b.variant;
    });
    return cmp;
}

std::string Comparison::markdown() const {
    std::ostringstream out;
    out << "| rank | variant | median steps to " << theta << " | median final success |\n";
    out << "|------|---------|-------------------|----------------------|\n";
    int rank = 1;
    for (const auto& r : rows) {
        out << "| " << rank++ << " | " << r.variant << " | ";
        if (r.censored)
            out << "censored";
        else
            out << r.median_steps_to_threshold;
        out << " | " << r.median_final_success << " |\n";
    }
    return out.str();
}

std::string Comparison::csv() const {
    std::ostringstream out;
    out << "rank,variant,median_steps_to_threshold,censored,median_final_success,cells\n";
    int rank = 1;
    for (const auto& r : rows) {
        out << rank++ << "," << r.variant << ",";
        if (r.censored)
            out << "";
        else
            out << r.median_steps_to_threshold;
        out << "," << (r.censored ? 1 : 0) << "," << r.median_final_success << "," << r.cells
            << "\n";
    }
    return out.str();
}

}  // namespace forge::exp
