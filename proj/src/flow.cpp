#include "forge/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "forge/errors.hpp"

namespace forge::flow {

namespace {

void require_same_shape(const Chunk& a, const Chunk& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeMismatch(std::string(what) + ": shapes differ");
}

const char* kB64Chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        unsigned int v = static_cast<unsigned int>(data[i]) << 16;
        if (i + 1 < len) v |= static_cast<unsigned int>(data[i + 1]) << 8;
        if (i + 2 < len) v |= data[i + 2];
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64Chars[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64Chars[v & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> b64_decode(const std::string& s) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> out;
    int buffer = 0, bits = 0;
    for (char c : s) {
        if (c == '=') break;
        const int d = val(c);
        if (d < 0) throw ValidationError("invalid base64 payload");
        buffer = (buffer << 6) | d;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((buffer >> bits) & 0xff));
        }
    }
    return out;
}

std::string tensor_b64(const nn::Tensor& t) {
    return b64_encode(reinterpret_cast<const unsigned char*>(t.v.data()),
                      t.v.size() * sizeof(double));
}

nn::Tensor tensor_from_b64(int rows, int cols, const std::string& payload) {
    auto bytes = b64_decode(payload);
    if (bytes.size() != static_cast<std::size_t>(rows) * cols * sizeof(double))
        throw ValidationError("tensor payload size mismatch");
    nn::Tensor t(rows, cols);
    std::memcpy(t.v.data(), bytes.data(), bytes.size());
    return t;
}

std::uint64_t params_hash(const std::vector<nn::ParamBlock>& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : params) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.t.v.data());
        for (std::size_t i = 0; i < p.t.v.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

double percentile_linear(std::vector<double> sorted, double q) {
    const double rank = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

}  // namespace

Chunk corrupt(const Chunk& a, const Chunk& eps, double tau) {
    require_same_shape(a, eps, "corrupt");
    if (tau < 0.0 || tau > 1.0) throw ShapeMismatch("corrupt: tau outside [0,1]");
    Chunk out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = tau * a.v[i] + (1.0 - tau) * eps.v[i];
    return out;
}

Chunk target_field(const Chunk& a, const Chunk& eps, FlowSign sign) {
    require_same_shape(a, eps, "target_field");
    const double s = sign == FlowSign::data_minus_noise ? 1.0 : -1.0;
    Chunk out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = s * (a.v[i] - eps.v[i]);
    return out;
}

double fm_loss(const Chunk& v_pred, const Chunk& u) {
    require_same_shape(v_pred, u, "fm_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = v_pred.v[i] - u.v[i];
        s += d * d;
    }
    return s / static_cast<double>(u.size());
}

FlowSample make_flow_sample(const Chunk& a, const Chunk& eps, double tau, FlowSign sign) {
    FlowSample s;
    s.a = a;
    s.eps = eps;
    s.tau = tau;
    s.a_tau = corrupt(a, eps, tau);
    s.u = target_field(a, eps, sign);
    return s;
}

std::vector<double> ActionScaler::normalize(const std::vector<double>& action) const {
    std::vector<double> out(action.size());
    for (std::size_t d = 0; d < action.size(); ++d) {
        out[d] = std::clamp((action[d] - center[d]) / half_range[d], -1.0, 1.0);
    }
    return out;
}

std::vector<double> ActionScaler::denormalize(const std::vector<double>& action) const {
    std::vector<double> out(action.size());
    for (std::size_t d = 0; d < action.size(); ++d) {
        out[d] = action[d] * half_range[d] + center[d];
    }
    return out;
}

Chunk ActionScaler::normalize_chunk(const Chunk& c) const {
    Chunk out(c.rows, c.cols);
    for (int i = 0; i < c.rows; ++i) {
        for (int j = 0; j < c.cols; ++j) {
            out.at(i, j) = std::clamp(
                (c.at(i, j) - center[static_cast<std::size_t>(j)]) /
                    half_range[static_cast<std::size_t>(j)],
                -1.0, 1.0);
        }
    }
    return out;
}

Chunk ActionScaler::denormalize_chunk(const Chunk& c) const {
    Chunk out(c.rows, c.cols);
    for (int i = 0; i < c.rows; ++i) {
        for (int j = 0; j < c.cols; ++j) {
            out.at(i, j) = c.at(i, j) * half_range[static_cast<std::size_t>(j)] +
                           center[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

ActionScaler fit_action_scaler(const nn::Tensor& actions) {
    if (actions.rows == 0 || actions.cols == 0) throw EmptyDataset("no action rows to fit");
    ActionScaler s;
    s.center.resize(static_cast<std::size_t>(actions.cols));
    s.half_range.resize(static_cast<std::size_t>(actions.cols));
    s.degenerate.resize(static_cast<std::size_t>(actions.cols), false);
    for (int d = 0; d < actions.cols; ++d) {
        std::vector<double> col(static_cast<std::size_t>(actions.rows));
        for (int i = 0; i < actions.rows; ++i) col[static_cast<std::size_t>(i)] = actions.at(i, d);
        std::sort(col.begin(), col.end());
        const double p1 = percentile_linear(col, 0.01);
        const double p99 = percentile_linear(col, 0.99);
        const double half = (p99 - p1) / 2.0;
        if (half <= 1e-12) {
            s.center[static_cast<std::size_t>(d)] = col.front();
            s.half_range[static_cast<std::size_t>(d)] = 1.0;
            s.degenerate[static_cast<std::size_t>(d)] = true;
        } else {
            s.center[static_cast<std::size_t>(d)] = (p1 + p99) / 2.0;
            s.half_range[static_cast<std::size_t>(d)] = half;
        }
    }
    return s;
}

Trainer::Trainer(nn::VectorFieldNet& net, std::vector<TrainItem> dataset, const TrainConfig& cfg)
    : net_(net),
      dataset_(std::move(dataset)),
      cfg_(cfg),
      rng_(cfg.seed),
      opt_(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps),
      min_loss_(std::numeric_limits<double>::infinity()) {
    if (dataset_.empty()) throw EmptyDataset("flow training needs at least one item");
    if (!cfg_.resample_noise) {
        const int H = net_.config().horizon;
        const int D = net_.config().action_dim;
        fixed_.reserve(dataset_.size());
        for (std::size_t i = 0; i < dataset_.size(); ++i) {
            Chunk eps(H, D);
            for (double& x : eps.v) x = rng_.normal();
            fixed_.push_back({eps, rng_.uniform()});
        }
    }
}

double Trainer::step() {
    const int H = net_.config().horizon;
    const int D = net_.config().action_dim;
    nn::Tape tape;
    auto pv = net_.register_params(tape);
    nn::Tape::Var total = -1;
    for (int b = 0; b < cfg_.batch_size; ++b) {
        const std::size_t idx = rng_.uniform_index(dataset_.size());
        const auto& item = dataset_[idx];
        Chunk eps(H, D);
        double tau;
        if (cfg_.resample_noise) {
            for (double& x : eps.v) x = rng_.normal();
            tau = rng_.uniform();
        } else {
            eps = fixed_[idx].eps;
            tau = fixed_[idx].tau;
        }
        const Chunk a_tau = corrupt(item.chunk, eps, tau);
        const Chunk u = target_field(item.chunk, eps, cfg_.sign);
        nn::Tape::Var v = net_.forward_on_tape(tape, pv, a_tau, tau, item.obs.context,
                                               item.obs.state, cfg_.train_context_encoder);
        nn::Tape::Var l = tape.mse_against(v, u);
        total = (total < 0) ? l : tape.add(total, l);
    }
    total = tape.scale(total, 1.0 / cfg_.batch_size);
    const double loss = tape.value(total).v[0];
    if (!std::isfinite(loss)) throw NonFiniteActivation("training loss is not finite");
    tape.backward(total);

    std::vector<nn::Tensor> grads;
    grads.reserve(pv.size());
    for (auto var : pv) grads.push_back(tape.grad(var));
    opt_.step(net_.params(), grads);

    if (steps_done_ % cfg_.log_every == 0) loss_curve_.push_back(loss);
    min_loss_ = std::min(min_loss_, loss);
    ++steps_done_;
    return loss;
}

void Trainer::run(int n) {
    for (int i = 0; i < n; ++i) step();
}

TrainResult train(nn::VectorFieldNet& net, const std::vector<TrainItem>& dataset,
                  const TrainConfig& cfg) {
    int steps = cfg.steps;
    if (steps <= 0) {
        const int per_epoch = static_cast<int>(
            (dataset.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
            static_cast<std::size_t>(cfg.batch_size));
        steps = cfg.epochs * per_epoch;
    }
    if (steps <= 0) throw EmptyDataset("training schedule resolves to zero steps");
    Trainer trainer(net, dataset, cfg);
    double last = 0.0;
    for (int i = 0; i < steps; ++i) last = trainer.step();
    TrainResult result;
    result.loss_curve = trainer.loss_curve();
    result.final_loss = last;
    result.min_loss = trainer.min_loss();
    return result;
}

Chunk integrate(const nn::VectorFieldNet& net, const Observation& obs, Rng& rng,
                int integration_steps, FlowSign sign) {
    const int H = net.config().horizon;
    const int D = net.config().action_dim;
    Chunk a(H, D);
    for (double& x : a.v) x = rng.normal();
    const double delta = 1.0 / integration_steps;
    const double dir = sign == FlowSign::data_minus_noise ? 1.0 : -1.0;
    for (int k = 0; k < integration_steps; ++k) {
        const double tau = static_cast<double>(k) * delta;
        const Chunk v = net.forward(a, tau, obs.context, obs.state);
        for (std::size_t i = 0; i < a.size(); ++i) a.v[i] += dir * delta * v.v[i];
    }
    if (!a.finite()) throw NonFiniteActivation("integrated chunk is not finite");
    return a;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, curve[i]);
        out << buf;
    }
}

Chunk Policy::act(const Observation& obs, Rng& rng) const {
    const Chunk normalized = integrate(net, obs, rng, cfg.integration_steps, cfg.sign);
    return scaler.denormalize_chunk(normalized);
}

void save_policy(const Policy& policy, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["format"] = "forge-policy";
    j["version"] = 1;
    const auto& cfg = policy.net.config();
    j["net"] = {{"ctx_feature_dim", cfg.ctx_feature_dim}, {"enc_hidden", cfg.enc_hidden},
                {"ctx_tokens", cfg.ctx_tokens},           {"d_model", cfg.d_model},
                {"state_dim", cfg.state_dim},             {"horizon", cfg.horizon},
                {"action_dim", cfg.action_dim},           {"layers", cfg.layers},
                {"ff_mult", cfg.ff_mult},                 {"tau_freqs", cfg.tau_freqs},
                {"out_scale", cfg.out_scale}};
    j["train"] = {{"lr", policy.cfg.lr},
                  {"beta1", policy.cfg.beta1},
                  {"beta2", policy.cfg.beta2},
                  {"adam_eps", policy.cfg.adam_eps},
                  {"integration_steps", policy.cfg.integration_steps},
                  {"sign", policy.cfg.sign == FlowSign::data_minus_noise ? "data_minus_noise"
                                                                         : "noise_minus_data"}};
    j["scaler"] = {{"center", policy.scaler.center},
                   {"half_range", policy.scaler.half_range}};
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (const auto& p : policy.net.params()) {
        params.push_back({{"name", p.name},
                          {"rows", p.t.rows},
                          {"cols", p.t.cols},
                          {"data", tensor_b64(p.t)}});
    }
    j["params"] = params;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(params_hash(policy.net.params())));
    j["params_hash"] = hex;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint " + path.string());
    out << j.dump(2) << '\n';
}

Policy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint " + path.string());
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
    if (j.at("format") != "forge-policy") throw ValidationError("not a policy checkpoint");

    nn::NetConfig cfg;
    const auto& jn = j.at("net");
    cfg.ctx_feature_dim = jn.at("ctx_feature_dim");
    cfg.enc_hidden = jn.at("enc_hidden");
    cfg.ctx_tokens = jn.at("ctx_tokens");
    cfg.d_model = jn.at("d_model");
    cfg.state_dim = jn.at("state_dim");
    cfg.horizon = jn.at("horizon");
    cfg.action_dim = jn.at("action_dim");
    cfg.layers = jn.at("layers");
    cfg.ff_mult = jn.at("ff_mult");
    cfg.tau_freqs = jn.at("tau_freqs");
    cfg.out_scale = jn.at("out_scale");

    Policy policy;
    policy.net = nn::VectorFieldNet(cfg, 0);
    const auto& jt = j.at("train");
    policy.cfg.lr = jt.at("lr");
    policy.cfg.beta1 = jt.at("beta1");
    policy.cfg.beta2 = jt.at("beta2");
    policy.cfg.adam_eps = jt.at("adam_eps");
    policy.cfg.integration_steps = jt.at("integration_steps");
    policy.cfg.sign = jt.at("sign") == "data_minus_noise" ? FlowSign::data_minus_noise
                                                          : FlowSign::noise_minus_data;
    policy.scaler.center = j.at("scaler").at("center").get<std::vector<double>>();
    policy.scaler.half_range = j.at("scaler").at("half_range").get<std::vector<double>>();
    policy.scaler.degenerate.assign(policy.scaler.center.size(), false);

    auto& params = policy.net.params();
    const auto& jp = j.at("params");
    if (jp.size() != params.size()) throw ValidationError("checkpoint parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = jp.at(i);
        if (e.at("name") != params[i].name) throw ValidationError("checkpoint parameter order mismatch");
        params[i].t = tensor_from_b64(e.at("rows"), e.at("cols"), e.at("data"));
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(params_hash(params)));
    if (j.at("params_hash") != std::string(hex))
        throw ValidationError("checkpoint content hash mismatch");
    return policy;
}

}  // namespace forge::flow
