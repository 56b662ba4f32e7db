#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/flow.hpp"
#include "forge/jsonl.hpp"
#include "forge/net.hpp"
#include "forge/sim.hpp"

namespace forge::exp {

/// Sliding-window behaviour-cloning dataset from expert demos: one item per
/// (episode, timestep), chunk rows padded with the final action past the end.
/// The scaler is fitted on all raw action rows before normalization.
std::pair<std::vector<flow::TrainItem>, flow::ActionScaler> build_bc_dataset(
    const std::vector<sim::EpisodeRecord>& demos, int horizon);

enum class CorpusKind { none, out_domain, in_domain };

struct InitVariant {
    std::string name;
    CorpusKind corpus = CorpusKind::none;

    static InitVariant from_name(const std::string& name);
};

struct PretrainItem {
    std::vector<double> input;
    std::vector<double> target;
};

struct PretrainConfig {
    int steps = 1500;
    int batch_size = 32;
    double lr = 1e-3;
    int corpus_size = 2000;
};

/// QA pairs annotated on simulator states; inputs are the policy's own
/// observation features.
std::vector<PretrainItem> in_domain_corpus(const sim::TaskDef& task, int n, std::uint64_t seed);

/// QA pairs from unrelated synthetic 3D scenes, re-encoded into the same
/// feature width; a deliberately mismatched observation distribution.
std::vector<PretrainItem> out_domain_corpus(int feature_dim, int n, std::uint64_t seed);

/// Regression pretraining of the context encoder (plus a throwaway linear
/// probe head) on a QA corpus. The encoder starts from `init` so that zero
/// steps returns it unchanged. Returns the four encoder tensors.
std::vector<nn::Tensor> pretrain_context_encoder(const std::vector<PretrainItem>& corpus,
                                                 const std::vector<nn::Tensor>& init,
                                                 const PretrainConfig& cfg, std::uint64_t seed);

struct ExperimentConfig {
    std::string task = "pick_place";
    std::vector<std::string> variants = {"random", "in_domain"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    int demos = 300;
    int train_steps = 6000;
    int eval_every = 500;
    int eval_episodes = 50;
    double theta = 0.8;
    bool expert_reference = true;
    int jobs = 1;
    flow::TrainConfig train;
    PretrainConfig pretrain;
    int d_model = 32;
    int layers = 2;
    int enc_hidden = 32;
    int ctx_tokens = 4;

    static ExperimentConfig from_config(const io::Config& cfg);
    std::string canonical() const;
    std::string config_hash() const;
};

struct EvalPoint {
    int step = 0;
    double success = 0.0;
};

struct RunReport {
    std::string variant;
    std::uint64_t seed = 0;
    std::string task;
    double theta = 0.8;
    std::vector<EvalPoint> evals;
    std::optional<int> steps_to_threshold;  // absent = censored
    double final_success = 0.0;
    std::string config_hash;

    io::Json to_json() const;
    static RunReport from_json(const io::Json& j);
};

/// Pretrains (when the variant asks for it), fine-tunes with the shared data
/// order, and evaluates on the fixed schedule. Pure function of (cfg, variant,
/// seed).
RunReport run_cell(const ExperimentConfig& cfg, const InitVariant& variant, std::uint64_t seed);

/// All (variant, seed) cells, plus expert reference rows when configured.
std::vector<RunReport> run_matrix(const ExperimentConfig& cfg);

struct CompareRow {
    std::string variant;
    double median_steps_to_threshold = 0.0;  // +inf when censored
    bool censored = false;
    double median_final_success = 0.0;
    int cells = 0;
};

struct Comparison {
    double theta = 0.8;
    std::vector<CompareRow> rows;  // ranked best first

    std::string markdown() const;
    std::string csv() const;
};

/// Ranks variants by median steps-to-threshold (censored last), ties broken
/// by final success rate then name. Pure function of the reports.
Comparison compare(const std::vector<RunReport>& reports, double theta);

}  // namespace forge::exp
