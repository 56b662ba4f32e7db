#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "forge/errors.hpp"
#include "forge/flow.hpp"

using namespace forge;
using namespace forge::flow;

namespace {

Chunk random_chunk(int h, int d, Rng& rng, double scale = 1.0) {
    Chunk c(h, d);
    for (double& x : c.v) x = rng.normal() * scale;
    return c;
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("corrupt endpoint identities are exact") {
    Rng rng(1);
    const Chunk a = random_chunk(4, 3, rng);
    const Chunk eps = random_chunk(4, 3, rng);
    CHECK(corrupt(a, eps, 1.0).v == a.v);
    CHECK(corrupt(a, eps, 0.0).v == eps.v);

    Chunk a1(1, 1), e1(1, 1);
    a1.v[0] = 2.0;
    e1.v[0] = 0.0;
    CHECK(corrupt(a1, e1, 0.5).v[0] == doctest::Approx(1.0));

    CHECK_THROWS_AS(corrupt(a, Chunk(2, 2), 0.5), ShapeMismatch);
    CHECK_THROWS_AS(corrupt(a, eps, 1.5), ShapeMismatch);
}

TEST_CASE("target_field sign conventions") {
    Rng rng(2);
    const Chunk a = random_chunk(4, 3, rng);
    CHECK(target_field(a, a).v == Chunk(4, 3).v);  // zero field when A == eps

    Chunk a1(1, 1), e1(1, 1);
    a1.v[0] = 1.0;
    e1.v[0] = 0.0;
    CHECK(target_field(a1, e1).v[0] == doctest::Approx(1.0));
    CHECK(target_field(a1, e1, FlowSign::noise_minus_data).v[0] == doctest::Approx(-1.0));
}

TEST_CASE("fm_loss equals the hand-summed mean squared error") {
    Rng rng(3);
    const Chunk u = random_chunk(4, 3, rng);
    CHECK(fm_loss(u, u) == doctest::Approx(0.0));

    Chunk shifted = u;
    for (double& x : shifted.v) x += 1.0;
    CHECK(fm_loss(shifted, u) == doctest::Approx(1.0));

    const Chunk v = random_chunk(4, 3, rng);
    double manual = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) manual += (v.v[i] - u.v[i]) * (v.v[i] - u.v[i]);
    manual /= static_cast<double>(u.size());
    CHECK(std::abs(fm_loss(v, u) - manual) <= 1e-12);
    CHECK(fm_loss(v, u) >= 0.0);
}

TEST_CASE("flow sample invariants") {
    Rng rng(4);
    const Chunk a = random_chunk(4, 3, rng);
    const Chunk eps = random_chunk(4, 3, rng);
    const FlowSample s = make_flow_sample(a, eps, 0.3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(s.a_tau.v[i] == doctest::Approx(0.3 * a.v[i] + 0.7 * eps.v[i]).epsilon(1e-15));
        CHECK(s.u.v[i] == doctest::Approx(a.v[i] - eps.v[i]).epsilon(1e-15));
    }
}

// Oracle-field integration: with the exact conditional field the path is a
// straight line, so 10 Euler steps land on the data chunk exactly (up to
// floating-point accumulation).
TEST_CASE("oracle-field Euler integration recovers the conditioning chunk") {
    struct OracleNet {
        // Mimics integrate() with a field supplied as a closure.
        static Chunk run(const Chunk& a, Rng& rng, int steps) {
            Chunk x(a.rows, a.cols);
            for (double& v : x.v) v = rng.normal();
            const Chunk eps0 = x;
            const double delta = 1.0 / steps;
            for (int k = 0; k < steps; ++k) {
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double u = a.v[i] - eps0.v[i];  // constant along the path
                    x.v[i] += delta * u;
                }
            }
            return x;
        }
    };
    Rng data_rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Chunk a = random_chunk(4, 3, data_rng);
        Rng rng(1000 + rep);
        const Chunk out = OracleNet::run(a, rng, 10);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(out.v[i] - a.v[i]) <= 1e-6);
        }
    }
}

TEST_CASE("a zero net integrates to the start noise, and 10 steps cover tau exactly") {
    nn::NetConfig cfg;
    cfg.ctx_feature_dim = 8;
    nn::VectorFieldNet net(cfg, 1);  // head zero-init => v == 0
    Observation obs{std::vector<double>(8, 0.2), std::vector<double>(3, 0.0)};
    Rng rng_a(77), rng_b(77);
    const Chunk out = integrate(net, obs, rng_a, 10);
    Chunk noise(cfg.horizon, cfg.action_dim);
    for (double& x : noise.v) x = rng_b.normal();
    CHECK(out.v == noise.v);

    // delta * N == 1 exactly.
    const double delta = 1.0 / 10;
    CHECK(delta * 10 == doctest::Approx(1.0).epsilon(0.0));
}

TEST_CASE("action scaler maps the percentile range onto [-1,1]") {
    // Symmetric two-point data in [-2, 2]: scale is exactly 0.5.
    nn::Tensor rows(200, 1);
    for (int i = 0; i < 100; ++i) rows.at(i, 0) = -2.0;
    for (int i = 100; i < 200; ++i) rows.at(i, 0) = 2.0;
    const ActionScaler s = fit_action_scaler(rows);
    CHECK(s.half_range[0] == doctest::Approx(2.0));
    CHECK(s.normalize({2.0})[0] == doctest::Approx(1.0));
    CHECK(s.normalize({-2.0})[0] == doctest::Approx(-1.0));
    CHECK(s.normalize({1.0})[0] == doctest::Approx(0.5));

    // Round trip inside the range.
    Rng rng(6);
    nn::Tensor data(500, 3);
    for (double& x : data.v) x = rng.normal() * 0.7;
    const ActionScaler s2 = fit_action_scaler(data);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> a = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                 rng.uniform(-0.5, 0.5)};
        const auto back = s2.denormalize(s2.normalize(a));
        for (int d = 0; d < 3; ++d) CHECK(std::abs(back[d] - a[d]) <= 1e-9);
    }

    // Clipping outside the fitted range.
    CHECK(s.normalize({5.0})[0] == doctest::Approx(1.0));

    CHECK_THROWS_AS(fit_action_scaler(nn::Tensor(0, 3)), EmptyDataset);
}

TEST_CASE("constant dimension maps to zero with unit scale") {
    nn::Tensor rows(50, 2);
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        rows.at(i, 0) = 0.25;  // constant
        rows.at(i, 1) = rng.normal();
    }
    const ActionScaler s = fit_action_scaler(rows);
    CHECK(s.degenerate[0]);
    CHECK_FALSE(s.degenerate[1]);
    CHECK(s.half_range[0] == doctest::Approx(1.0));
    CHECK(s.normalize({0.25, 0.0})[0] == doctest::Approx(0.0));
    CHECK(s.denormalize({0.0, 0.0})[0] == doctest::Approx(0.25));
}

TEST_CASE("training is reproducible bit-exactly for a fixed seed") {
    Rng rng(8);
    std::vector<TrainItem> data;
    for (int i = 0; i < 4; ++i) {
        TrainItem item;
        item.obs.context.assign(8, rng.normal());
        item.obs.state.assign(3, rng.normal());
        item.chunk = random_chunk(4, 3, rng, 0.5);
        data.push_back(item);
    }
    TrainConfig cfg;
    cfg.steps = 60;
    cfg.batch_size = 4;
    cfg.seed = 123;

    nn::NetConfig ncfg;
    ncfg.ctx_feature_dim = 8;
    nn::VectorFieldNet net1(ncfg, 9), net2(ncfg, 9);
    const auto r1 = train(net1, data, cfg);
    const auto r2 = train(net2, data, cfg);
    CHECK(r1.loss_curve == r2.loss_curve);  // bit-identical
    for (std::size_t p = 0; p < net1.params().size(); ++p) {
        CHECK(net1.params()[p].t.v == net2.params()[p].t.v);
    }

    nn::VectorFieldNet net3(ncfg, 9);
    TrainConfig other = cfg;
    other.seed = 124;
    const auto r3 = train(net3, data, other);
    CHECK(r1.loss_curve != r3.loss_curve);
}

TEST_CASE("lr=0 training leaves parameters unchanged") {
    Rng rng(10);
    std::vector<TrainItem> data(1);
    data[0].obs.context.assign(8, 0.1);
    data[0].obs.state.assign(3, 0.2);
    data[0].chunk = random_chunk(4, 3, rng, 0.5);
    nn::NetConfig ncfg;
    ncfg.ctx_feature_dim = 8;
    nn::VectorFieldNet net(ncfg, 12);
    const auto before = net.params();
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.steps = 20;
    cfg.seed = 3;
    train(net, data, cfg);
    for (std::size_t p = 0; p < before.size(); ++p) {
        CHECK(net.params()[p].t.v == before[p].t.v);
    }
}

TEST_CASE("empty dataset and zero-step schedules throw") {
    nn::NetConfig ncfg;
    ncfg.ctx_feature_dim = 8;
    nn::VectorFieldNet net(ncfg, 1);
    TrainConfig cfg;
    CHECK_THROWS_AS(train(net, {}, cfg), EmptyDataset);
    std::vector<TrainItem> data(1);
    data[0].obs.context.assign(8, 0.0);
    data[0].obs.state.assign(3, 0.0);
    data[0].chunk = Chunk(4, 3);
    TrainConfig zero;
    zero.steps = 0;
    zero.epochs = 0;
    CHECK_THROWS_AS(train(net, data, zero), EmptyDataset);
}

TEST_CASE("fixed-corruption mode drives single-sample loss to ~zero") {
    Rng rng(13);
    std::vector<TrainItem> data(1);
    data[0].obs.context.assign(8, 0.3);
    data[0].obs.state.assign(3, 0.1);
    data[0].chunk = random_chunk(4, 3, rng, 0.5);
    nn::NetConfig ncfg;
    ncfg.ctx_feature_dim = 8;
    nn::VectorFieldNet net(ncfg, 21);
    TrainConfig cfg;
    cfg.steps = 2000;
    cfg.batch_size = 1;
    cfg.seed = 5;
    cfg.resample_noise = false;
    const auto r = train(net, data, cfg);
    CHECK(r.min_loss < 1e-3);
}

TEST_CASE("checkpoint save/load round trip with content hash") {
    Rng rng(14);
    nn::NetConfig ncfg;
    ncfg.ctx_feature_dim = 8;
    Policy policy;
    policy.net = nn::VectorFieldNet(ncfg, 33);
    policy.scaler.center = {0.0, 0.1, -0.2};
    policy.scaler.half_range = {0.05, 0.05, 1.0};
    policy.scaler.degenerate = {false, false, false};

    const auto path = std::filesystem::temp_directory_path() / "forge_ckpt_test.json";
    save_policy(policy, path);
    const Policy back = load_policy(path);
    CHECK(back.net.config() == policy.net.config());
    for (std::size_t p = 0; p < policy.net.params().size(); ++p) {
        CHECK(back.net.params()[p].t.v == policy.net.params()[p].t.v);
    }
    CHECK(back.scaler.center == policy.scaler.center);

    // Tampering breaks the content hash.
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("\"data\"");
    REQUIRE(pos != std::string::npos);
    text[pos + 10] = text[pos + 10] == 'A' ? 'B' : 'A';
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    CHECK_THROWS_AS(load_policy(path), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("the literal-sign flag flips training targets and integration together") {
    // With the flipped convention the oracle constant field is eps - A, and
    // integrate subtracts it, so the sampler still lands on data.
    Rng rng(15);
    const Chunk a = random_chunk(4, 3, rng);
    Rng start(55);
    Chunk x(4, 3);
    for (double& v : x.v) v = start.normal();
    const Chunk eps0 = x;
    const Chunk u = target_field(a, eps0, FlowSign::noise_minus_data);
    const double delta = 0.1;
    for (int k = 0; k < 10; ++k) {
        for (std::size_t i = 0; i < x.size(); ++i) x.v[i] -= delta * u.v[i];
    }
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(x.v[i] - a.v[i]) <= 1e-6);
}

}  // TEST_SUITE
