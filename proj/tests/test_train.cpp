#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "mbocc/net/train.hpp"
#include "mbocc/rng.hpp"
#include "mbocc/synth.hpp"

using namespace mbocc;
using namespace mbocc::net;

namespace {

NetConfig small_config() {
    NetConfig cfg;
    cfg.levels = 2;
    cfg.enc_channels = 6;
    cfg.dec_channels = 6;
    cfg.dec_convs = 2;
    cfg.att_convs = 2;
    cfg.cost_radius = 1;
    return cfg;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters untouched") {
    NetConfig cfg = small_config();
    cfg.lr = 0.0;
    SceneSpec spec = square_scene(16, 16, 4, 4, 5, 2, 0);
    SamplePair s = generate(spec, 1);
    TrainResult r = train(cfg, {&s}, 5, 99);
    ParamStore init = ParamStore::he_init(cfg, 99);
    for (const auto& [name, t] : init.values) CHECK(r.params.values.at(name).v == t.v);
    for (Real l : r.loss_trace) CHECK(l == r.loss_trace[0]);
}

TEST_CASE("training is deterministic per seed") {
    NetConfig cfg = small_config();
    SceneSpec spec = square_scene(16, 16, 3, 3, 6, 2, 1);
    SamplePair a = generate(spec, 2);
    SamplePair b = generate(square_scene(16, 16, 6, 5, 4, -1, 0), 3);
    std::vector<const SamplePair*> data = {&a, &b};
    TrainResult r1 = train(cfg, data, 12, 7);
    TrainResult r2 = train(cfg, data, 12, 7);
    CHECK(r1.loss_trace == r2.loss_trace);
    for (const auto& [name, t] : r1.params.values) CHECK(r2.params.values.at(name).v == t.v);
    TrainResult r3 = train(cfg, data, 12, 8);
    CHECK(r1.loss_trace != r3.loss_trace);
}

TEST_CASE("short overfit run reduces the loss") {
    NetConfig cfg = small_config();
    SceneSpec spec = square_scene(16, 16, 4, 5, 5, 2, 0);
    SamplePair s = generate(spec, 4);
    TrainResult r = train(cfg, {&s}, 200, 11);
    REQUIRE_FALSE(r.diverged);
    REQUIRE(r.loss_trace.size() == 200);
    CHECK(r.loss_trace.back() < 0.6 * r.loss_trace.front());
}

TEST_CASE("static scene trains toward empty maps") {
    NetConfig cfg = small_config();
    cfg.lr = 1e-3;
    SceneSpec spec = square_scene(16, 16, 4, 4, 6, 0, 0);  // no motion
    spec.noise_sigma = 0.02;
    SamplePair s = generate(spec, 8);
    TrainResult r = train(cfg, {&s}, 250, 17);
    REQUIRE_FALSE(r.diverged);
    Tape tape;
    ForwardOutput out = model_forward(tape, cfg, r.params, s, false);
    for (int dir = 0; dir < 2; ++dir) {
        for (Real v : out.pred.mb_fused[dir].v) CHECK(v < 0.5);
        for (Real v : out.pred.occ_fused[dir].v) CHECK(v < 0.5);
    }
}

TEST_CASE("periodic eval hook fires with current parameters") {
    NetConfig cfg = small_config();
    SceneSpec spec = square_scene(16, 16, 4, 4, 5, 2, 0);
    SamplePair s = generate(spec, 21);
    std::vector<long> eval_steps;
    train(
        cfg, {&s}, 10, 3, {}, 4,
        [&](long step, const ParamStore& params) {
            eval_steps.push_back(step);
            CHECK(params.values.size() > 0);
        });
    CHECK(eval_steps == std::vector<long>{3, 7, 9});
}

TEST_CASE("divergence aborts with the last good parameters") {
    NetConfig cfg = small_config();
    cfg.lr = 1e150;  // guaranteed blow-up
    SceneSpec spec = square_scene(16, 16, 4, 4, 5, 2, 0);
    SamplePair s = generate(spec, 5);
    TrainResult r = train(cfg, {&s}, 50, 13);
    CHECK(r.diverged);
    CHECK(r.diverged_at >= 0);
    for (const auto& [name, t] : r.params.values)
        for (Real v : t.v) CHECK(std::isfinite(v));
}

TEST_CASE("checkpoint round trip") {
    NetConfig cfg = small_config();
    cfg.fine_to_coarse = false;
    ParamStore ps = ParamStore::he_init(cfg, 21);
    auto dir = (std::filesystem::temp_directory_path() / "mbocc_ckpt_test").string();
    save_checkpoint(dir, cfg, ps);
    auto [cfg2, ps2] = load_checkpoint(dir);
    CHECK(cfg2.fine_to_coarse == false);
    CHECK(cfg2.enc_channels == cfg.enc_channels);
    REQUIRE(ps2.values.size() == ps.values.size());
    for (const auto& [name, t] : ps.values) CHECK(ps2.values.at(name).v == t.v);
    std::filesystem::remove_all(dir);
}

TEST_CASE("param classes cover every parameter") {
    NetConfig cfg = small_config();
    ParamStore ps = ParamStore::he_init(cfg, 1);
    for (const auto& [name, _] : ps.values) CHECK(param_class(name) != "other");
}
