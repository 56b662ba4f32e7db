#include "forge/net.hpp"

#include <cmath>

#include "forge/errors.hpp"

namespace forge::nn {

namespace {

Tensor xavier(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (double& x : t.v) x = rng.uniform(-bound, bound);
    return t;
}

Tensor ones_row(int cols) {
    Tensor t(1, cols);
    for (double& x : t.v) x = 1.0;
    return t;
}

}  // namespace

VectorFieldNet::VectorFieldNet(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    const int d = cfg.d_model;
    auto push = [&](const std::string& name, Tensor t) {
        params_.push_back({name, std::move(t)});
    };
    // Context encoder first: encoder_param_range() depends on this order.
    push("enc.w1", xavier(cfg.ctx_feature_dim, cfg.enc_hidden, rng));
    push("enc.b1", Tensor(1, cfg.enc_hidden));
    push("enc.w2", xavier(cfg.enc_hidden, cfg.ctx_tokens * d, rng));
    push("enc.b2", Tensor(1, cfg.ctx_tokens * d));

    push("state.w", xavier(cfg.state_dim, d, rng));
    push("state.b", Tensor(1, d));
    push("act.w1", xavier(cfg.action_dim, d, rng));
    push("act.b1", Tensor(1, d));
    push("act.w2", xavier(d, d, rng));
    push("act.b2", Tensor(1, d));
    push("tau.w", xavier(2 * cfg.tau_freqs, d, rng));
    push("tau.b", Tensor(1, d));
    push("act.pos", xavier(cfg.horizon, d, rng));

    // Residual branches start small so early updates flow cleanly.
    const double res_scale = 1.0 / std::sqrt(2.0 * cfg.layers);
    auto scaled = [&](Tensor t) {
        for (double& x : t.v) x *= res_scale;
        return t;
    };
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "blk" + std::to_string(l) + ".";
        push(p + "ln1.g", ones_row(d));
        push(p + "ln1.b", Tensor(1, d));
        push(p + "wq", xavier(d, d, rng));
        push(p + "bq", Tensor(1, d));
        push(p + "wk", xavier(d, d, rng));
        push(p + "bk", Tensor(1, d));
        push(p + "wv", xavier(d, d, rng));
        push(p + "bv", Tensor(1, d));
        push(p + "wo", scaled(xavier(d, d, rng)));
        push(p + "bo", Tensor(1, d));
        push(p + "ln2.g", ones_row(d));
        push(p + "ln2.b", Tensor(1, d));
        push(p + "ff.w1", xavier(d, cfg.ff_mult * d, rng));
        push(p + "ff.b1", Tensor(1, cfg.ff_mult * d));
        push(p + "ff.w2", scaled(xavier(cfg.ff_mult * d, d, rng)));
        push(p + "ff.b2", Tensor(1, d));
    }
    push("lnf.g", ones_row(d));
    push("lnf.b", Tensor(1, d));
    // Zero-initialized head: a fresh net predicts the zero field.
    push("head.w", Tensor(d, cfg.action_dim));
    push("head.b", Tensor(1, cfg.action_dim));
}

std::size_t VectorFieldNet::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.t.size();
    return n;
}

std::vector<double> VectorFieldNet::tau_features(double tau, int freqs) {
    std::vector<double> f(static_cast<std::size_t>(2 * freqs));
    for (int k = 0; k < freqs; ++k) {
        const double w = std::pow(2.0, k) * M_PI;
        f[static_cast<std::size_t>(2 * k)] = std::sin(w * tau);
        f[static_cast<std::size_t>(2 * k + 1)] = std::cos(w * tau);
    }
    return f;
}

std::vector<Tape::Var> VectorFieldNet::register_params(Tape& tape) const {
    std::vector<Tape::Var> vars;
    vars.reserve(params_.size());
    for (const auto& p : params_) vars.push_back(tape.param(p.t));
    return vars;
}

Tape::Var VectorFieldNet::forward_on_tape(Tape& tape, const std::vector<Tape::Var>& pv,
                                          const Tensor& a_tau, double tau,
                                          const std::vector<double>& context,
                                          const std::vector<double>& state,
                                          bool train_context_encoder) const {
    const int d = cfg_.d_model;
    if (a_tau.rows != cfg_.horizon || a_tau.cols != cfg_.action_dim)
        throw ShapeMismatch("action chunk shape does not match net config");
    if (static_cast<int>(context.size()) != cfg_.ctx_feature_dim)
        throw ShapeMismatch("context feature width does not match net config");
    if (static_cast<int>(state.size()) != cfg_.state_dim)
        throw ShapeMismatch("state width does not match net config");

    std::size_t i = 0;
    auto next = [&]() { return pv[i++]; };
    const Tape::Var enc_w1 = next(), enc_b1 = next(), enc_w2 = next(), enc_b2 = next();
    const Tape::Var state_w = next(), state_b = next();
    const Tape::Var act_w1 = next(), act_b1 = next(), act_w2 = next(), act_b2 = next();
    const Tape::Var tau_w = next(), tau_b = next();
    const Tape::Var act_pos = next();

    // Context encoder: F -> hidden -> C*d, reshaped to C tokens.
    Tape::Var ctx_in = tape.input(Tensor(1, cfg_.ctx_feature_dim, context));
    Tape::Var h = tape.add_rowvec(tape.matmul(ctx_in, enc_w1), enc_b1);
    h = tape.tanh_(h);
    Tape::Var ctx_flat = tape.add_rowvec(tape.matmul(h, enc_w2), enc_b2);
    if (!train_context_encoder) {
        // Freeze by routing the value through a constant input node.
        ctx_flat = tape.input(tape.value(ctx_flat));
    }
    Tape::Var ctx_tok = tape.reshape(ctx_flat, cfg_.ctx_tokens, d);

    Tape::Var st_in = tape.input(Tensor(1, cfg_.state_dim, state));
    Tape::Var st_tok = tape.add_rowvec(tape.matmul(st_in, state_w), state_b);

    Tape::Var a_in = tape.input(a_tau);
    Tape::Var a_h = tape.tanh_(tape.add_rowvec(tape.matmul(a_in, act_w1), act_b1));
    Tape::Var a_tok = tape.add_rowvec(tape.matmul(a_h, act_w2), act_b2);
    Tape::Var tau_in = tape.input(Tensor(1, 2 * cfg_.tau_freqs, tau_features(tau, cfg_.tau_freqs)));
    Tape::Var tau_emb = tape.add_rowvec(tape.matmul(tau_in, tau_w), tau_b);
    a_tok = tape.add_rowvec(a_tok, tau_emb);
    a_tok = tape.add(a_tok, act_pos);

    Tape::Var x = tape.concat_rows(ctx_tok, st_tok, a_tok);

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (int l = 0; l < cfg_.layers; ++l) {
        const Tape::Var ln1_g = next(), ln1_b = next();
        const Tape::Var wq = next(), bq = next(), wk = next(), bk = next();
        const Tape::Var wv = next(), bv = next(), wo = next(), bo = next();
        const Tape::Var ln2_g = next(), ln2_b = next();
        const Tape::Var ff_w1 = next(), ff_b1 = next(), ff_w2 = next(), ff_b2 = next();

        Tape::Var hn = tape.layernorm(x, ln1_g, ln1_b);
        Tape::Var q = tape.add_rowvec(tape.matmul(hn, wq), bq);
        Tape::Var k = tape.add_rowvec(tape.matmul(hn, wk), bk);
        Tape::Var v = tape.add_rowvec(tape.matmul(hn, wv), bv);
        Tape::Var scores = tape.scale(tape.matmul_bt(q, k), inv_sqrt_d);
        Tape::Var attn = tape.matmul(tape.softmax_rows(scores), v);
        attn = tape.add_rowvec(tape.matmul(attn, wo), bo);
        x = tape.add(x, attn);

        Tape::Var h2 = tape.layernorm(x, ln2_g, ln2_b);
        Tape::Var ff = tape.tanh_(tape.add_rowvec(tape.matmul(h2, ff_w1), ff_b1));
        ff = tape.add_rowvec(tape.matmul(ff, ff_w2), ff_b2);
        x = tape.add(x, ff);
    }

    const Tape::Var lnf_g = next(), lnf_b = next();
    const Tape::Var head_w = next(), head_b = next();
    Tape::Var xf = tape.layernorm(x, lnf_g, lnf_b);
    Tape::Var act_feats = tape.slice_rows(xf, cfg_.ctx_tokens + 1, cfg_.seq_len());
    Tape::Var v = tape.add_rowvec(tape.matmul(act_feats, head_w), head_b);
    return tape.scale(v, cfg_.out_scale);
}

Tensor VectorFieldNet::forward(const Tensor& a_tau, double tau,
                               const std::vector<double>& context,
                               const std::vector<double>& state) const {
    Tape tape;
    auto pv = register_params(tape);
    Tape::Var v = forward_on_tape(tape, pv, a_tau, tau, context, state);
    Tensor out = tape.value(v);
    if (!out.finite()) throw NonFiniteActivation("vector field output is not finite");
    return out;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<ParamBlock>& params, const std::vector<Tensor>& grads) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.t.rows, p.t.cols);
            v_.emplace_back(p.t.rows, p.t.cols);
        }
    }
    if (grads.size() != params.size()) throw ShapeMismatch("gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& theta = params[p].t;
        const auto& g = grads[p];
        if (!g.same_shape(theta)) throw ShapeMismatch("gradient shape mismatch at " + params[p].name);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[p].v[i] = beta1_ * m_[p].v[i] + (1.0 - beta1_) * g.v[i];
            v_[p].v[i] = beta2_ * v_[p].v[i] + (1.0 - beta2_) * g.v[i] * g.v[i];
            const double mhat = m_[p].v[i] / bc1;
            const double vhat = v_[p].v[i] / bc2;
            theta.v[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace forge::nn
