#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "forge/net.hpp"
#include "forge/rng.hpp"
#include "forge/tensor.hpp"

namespace forge::flow {

/// H x D action chunk; rows are consecutive timesteps. Values are
/// per-dimension normalized to [-1, 1] while inside the policy.
using Chunk = nn::Tensor;

struct Observation {
    std::vector<double> context;  // raw observation features (VLM stand-in input)
    std::vector<double> state;    // robot state
};

/// Sign convention for the regression target. The path A_tau = tau*A +
/// (1-tau)*eps has velocity A - eps, which forward Euler integrates from
/// noise back to A; that is the default. `noise_minus_data` is the literal
/// published form (eps - A); selecting it also flips the integration step so
/// sampling still lands on data.
enum class FlowSign { data_minus_noise, noise_minus_data };

/// A_tau = tau*A + (1-tau)*eps, elementwise.
Chunk corrupt(const Chunk& a, const Chunk& eps, double tau);

/// Regression target u for the pair (A, eps) under the given convention.
Chunk target_field(const Chunk& a, const Chunk& eps, FlowSign sign = FlowSign::data_minus_noise);

/// Mean squared error over all H*D entries.
double fm_loss(const Chunk& v_pred, const Chunk& u);

struct FlowSample {
    Chunk a;
    Chunk eps;
    double tau = 0.0;
    Chunk a_tau;
    Chunk u;
};

FlowSample make_flow_sample(const Chunk& a, const Chunk& eps, double tau,
                            FlowSign sign = FlowSign::data_minus_noise);

/// Per-dimension affine map of the [p1, p99] percentile range onto [-1, 1].
/// Constant dimensions map to 0 with unit scale (flagged, not fatal).
struct ActionScaler {
    std::vector<double> center;
    std::vector<double> half_range;
    std::vector<bool> degenerate;

    std::vector<double> normalize(const std::vector<double>& action) const;
    std::vector<double> denormalize(const std::vector<double>& action) const;
    Chunk normalize_chunk(const Chunk& c) const;
    Chunk denormalize_chunk(const Chunk& c) const;
};

/// Fits the scaler on an N x D matrix of raw action rows. Throws EmptyDataset.
ActionScaler fit_action_scaler(const nn::Tensor& actions);

struct TrainConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 16;
    int steps = 2000;        // when 0, derived from epochs
    int epochs = 0;
    std::uint64_t seed = 0;
    int integration_steps = 10;
    FlowSign sign = FlowSign::data_minus_noise;
    bool train_context_encoder = true;
    int log_every = 1;
    // When false, each dataset item keeps one (eps, tau) pair drawn up front
    // and every step regresses those fixed targets; this is the pure
    // capacity/memorization mode. Default resamples per step.
    bool resample_noise = true;
};

struct TrainResult {
    std::vector<double> loss_curve;  // one entry per logged step
    double final_loss = 0.0;
    double min_loss = 0.0;
};

/// One dataset item: observation plus its (already normalized) target chunk.
struct TrainItem {
    Observation obs;
    Chunk chunk;
};

/// Flow-matching training loop: per step draw a batch, per sample draw
/// eps ~ N(0,I) and tau ~ U[0,1], regress the field, Adam step. Deterministic
/// for a fixed seed; single-threaded by design. Trainer keeps optimizer and
/// rng state so callers can interleave evaluation between segments.
class Trainer {
public:
    Trainer(nn::VectorFieldNet& net, std::vector<TrainItem> dataset, const TrainConfig& cfg);

    /// One optimizer step; returns the batch loss.
    double step();
    /// Runs n steps, appending to the loss curve.
    void run(int n);

    int steps_done() const { return steps_done_; }
    const std::vector<double>& loss_curve() const { return loss_curve_; }
    double min_loss() const { return min_loss_; }

private:
    struct FixedDraw {
        Chunk eps;
        double tau;
    };
    nn::VectorFieldNet& net_;
    std::vector<TrainItem> dataset_;
    TrainConfig cfg_;
    Rng rng_;
    std::vector<FixedDraw> fixed_;
    nn::Adam opt_;
    std::vector<double> loss_curve_;
    double min_loss_;
    int steps_done_ = 0;
};

TrainResult train(nn::VectorFieldNet& net, const std::vector<TrainItem>& dataset,
                  const TrainConfig& cfg);

/// Euler integration from tau=0 (pure noise) to tau=1 in cfg integration
/// steps. Returns the normalized-space chunk.
Chunk integrate(const nn::VectorFieldNet& net, const Observation& obs, Rng& rng,
                int integration_steps = 10, FlowSign sign = FlowSign::data_minus_noise);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve);

/// Policy bundle: net + scaler + the config needed to run it.
struct Policy {
    nn::VectorFieldNet net;
    ActionScaler scaler;
    TrainConfig cfg;

    /// Samples a chunk and denormalizes it to environment action units.
    Chunk act(const Observation& obs, Rng& rng) const;
};

/// Checkpoint: JSON with a config header, base64 tensor blobs, and a content
/// hash over the raw parameter bytes.
void save_policy(const Policy& policy, const std::filesystem::path& path);
Policy load_policy(const std::filesystem::path& path);

}  // namespace forge::flow
