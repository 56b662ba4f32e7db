#pragma once

#include <string>
#include <vector>

#include "forge/rng.hpp"
#include "forge/tensor.hpp"

namespace forge::nn {

struct NetConfig {
    int ctx_feature_dim = 8;  // raw observation feature width F
    int enc_hidden = 32;
    int ctx_tokens = 4;       // C
    int d_model = 32;
    int state_dim = 3;
    int horizon = 4;          // H
    int action_dim = 3;       // D
    int layers = 2;           // attention blocks
    int ff_mult = 2;
    int tau_freqs = 4;        // sinusoidal features of tau -> 2*tau_freqs dims
    // Fixed multiplier on the head output. Adam caps per-parameter movement
    // at ~lr per step, so at the pinned small learning rate the head needs
    // this gain for the predicted field to reach unit scale within a
    // reasonable step budget.
    double out_scale = 8.0;

    int seq_len() const { return ctx_tokens + 1 + horizon; }
    bool operator==(const NetConfig&) const = default;
};

/// Named parameter tensor; the flat list order is the checkpoint and
/// optimizer order and must stay stable.
struct ParamBlock {
    std::string name;
    Tensor t;
};

/// Velocity-field predictor over the token sequence
/// [context_1..C, state, action_1..H]. Context tokens carry no positional
/// encoding, so attention treats them as a set; action tokens get learned
/// positions plus a sinusoidal embedding of the flow time tau.
class VectorFieldNet {
public:
    VectorFieldNet() = default;
    VectorFieldNet(const NetConfig& cfg, std::uint64_t seed);

    const NetConfig& config() const { return cfg_; }
    std::vector<ParamBlock>& params() { return params_; }
    const std::vector<ParamBlock>& params() const { return params_; }
    std::size_t param_count() const;

    /// Index range [first_encoder_param, last_encoder_param) of the context
    /// encoder blocks inside params(), used for pretraining transplants.
    std::pair<std::size_t, std::size_t> encoder_param_range() const { return {0, 4}; }

    /// Builds the forward graph for one sample on the given tape.
    /// Returns the H x D velocity prediction. `param_vars` must come from
    /// register_params on the same tape.
    Tape::Var forward_on_tape(Tape& tape, const std::vector<Tape::Var>& param_vars,
                              const Tensor& a_tau, double tau,
                              const std::vector<double>& context,
                              const std::vector<double>& state,
                              bool train_context_encoder = true) const;

    std::vector<Tape::Var> register_params(Tape& tape) const;

    /// Convenience eager forward; throws NonFiniteActivation when the output
    /// is not finite.
    Tensor forward(const Tensor& a_tau, double tau, const std::vector<double>& context,
                   const std::vector<double>& state) const;

    /// Sinusoidal features of tau, exposed for tests.
    static std::vector<double> tau_features(double tau, int freqs);

private:
    NetConfig cfg_;
    std::vector<ParamBlock> params_;
};

/// AdamW-free plain Adam with bias correction; matches the stated optimizer
/// hyperparameters (beta1, beta2, eps).
class Adam {
public:
    Adam(double lr, double beta1, double beta2, double eps);
    void step(std::vector<ParamBlock>& params, const std::vector<Tensor>& grads);
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace forge::nn
