#include <doctest.h>

#include <cmath>
#include <random>

#include "mbocc/rng.hpp"
#include "mbocc/synth.hpp"
#include "mbocc/warp.hpp"

using namespace mbocc;

namespace {

bool in_rect(int x, int y, int x0, int y0, int x1, int y1) {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
}

}  // namespace

TEST_CASE("static scene has empty ground truth") {
    SceneSpec spec = square_scene(8, 8, 2, 2, 3, 0, 0);
    SamplePair s = generate(spec, 5);
    for (Real v : s.flow12.u) CHECK(v == 0.0);
    for (Real v : s.flow12.vflow) CHECK(v == 0.0);
    for (Real v : s.occ1.v) CHECK(v == 0.0);
    for (Real v : s.occ2.v) CHECK(v == 0.0);
    for (Real v : s.mb1.v) CHECK(v == 0.0);
    for (Real v : s.mb2.v) CHECK(v == 0.0);
}

TEST_CASE("translating square ground truth matches rectangle arithmetic") {
    SceneSpec spec = square_scene(8, 8, 2, 2, 3, 2, 0);
    SamplePair s = generate(spec, 6);

    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            bool on_square = in_rect(x, y, 2, 2, 4, 4);
            CHECK(s.flow12.ux(x, y) == (on_square ? 2.0 : 0.0));
            // Occluded band: background hit by the square's leading edge.
            CHECK(s.occ1.at(x, y) == (in_rect(x, y, 5, 2, 6, 4) ? 1.0 : 0.0));
            // Newly visible strip, in frame-2 coordinates.
            CHECK(s.occ2.at(x, y) == (in_rect(x, y, 2, 2, 3, 4) ? 1.0 : 0.0));
            // MB band: the square outline (foreground side), both frames.
            bool outline1 = on_square && !in_rect(x, y, 3, 3, 3, 3);
            CHECK(s.mb1.at(x, y) == (outline1 ? 1.0 : 0.0));
            bool on_square2 = in_rect(x, y, 4, 2, 6, 4);
            bool outline2 = on_square2 && !in_rect(x, y, 5, 3, 5, 3);
            CHECK(s.mb2.at(x, y) == (outline2 ? 1.0 : 0.0));
        }
    }
    // Frames render flat shape color over background.
    CHECK(s.frame1.at(3, 3, 0) == s.frame2.at(5, 3, 0));
    CHECK(s.frame1.at(0, 0, 1) == s.frame2.at(0, 0, 1));
}

TEST_CASE("generate is deterministic per (spec, seed)") {
    std::mt19937_64 rng(77);
    SceneSpec spec = random_scene(16, 16, rng, 3, 0.05);
    SamplePair a = generate(spec, 123);
    SamplePair b = generate(spec, 123);
    CHECK(a.frame1.v == b.frame1.v);
    CHECK(a.frame2.v == b.frame2.v);
    CHECK(a.occ1.v == b.occ1.v);
    CHECK(a.mb2.v == b.mb2.v);
    SamplePair c = generate(spec, 124);
    CHECK(a.frame1.v != c.frame1.v);  // colors differ by seed
}

TEST_CASE("generate validates the scene") {
    SceneSpec empty;
    empty.width = 8;
    empty.height = 8;
    CHECK_THROWS_AS(generate(empty, 0), std::invalid_argument);

    SceneSpec dup = square_scene(8, 8, 1, 1, 2, 1, 0);
    dup.shapes.push_back(dup.shapes[0]);  // same depth
    CHECK_THROWS_AS(generate(dup, 0), std::invalid_argument);

    SceneSpec off = square_scene(8, 8, 20, 20, 2, 0, 0);
    CHECK_THROWS_AS(generate(off, 0), std::invalid_argument);
}

TEST_CASE("cross-consistency: occ_from_flow reproduces geometric GT") {
    std::mt19937_64 rng(78);
    for (int trial = 0; trial < 25; ++trial) {
        SceneSpec spec = random_scene(uniform_int(rng, 10, 24), uniform_int(rng, 10, 24), rng, 3);
        SamplePair s = generate(spec, rng());
        ScalarMap o1 = occ_from_flow(s.flow12, s.flow21, 0.5);
        ScalarMap o2 = occ_from_flow(s.flow21, s.flow12, 0.5);
        CHECK(o1.v == s.occ1.v);
        CHECK(o2.v == s.occ2.v);
    }
}

TEST_CASE("two overlapping squares with opposite motions") {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 16;
    ShapeSpec a;
    a.x = 3, a.y = 4, a.w = 6, a.h = 6, a.depth = 1, a.tx = 2, a.ty = 0;
    ShapeSpec b;
    b.x = 7, b.y = 6, b.w = 6, b.h = 6, b.depth = 2, b.tx = -2, b.ty = 0;
    spec.shapes = {a, b};
    SamplePair s = generate(spec, 11);

    CHECK(occ_from_flow(s.flow12, s.flow21, 0.5).v == s.occ1.v);
    CHECK(occ_from_flow(s.flow21, s.flow12, 0.5).v == s.occ2.v);

    // Every GT MB pixel sits within one pixel of a flow-gradient response.
    ScalarMap grad = mb_from_flow_gradient(s.flow12, 1.0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            if (s.mb1.at(x, y) < 0.5) continue;
            bool near = false;
            for (int dy = -1; dy <= 1 && !near; ++dy)
                for (int dx = -1; dx <= 1 && !near; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= 16 || ny < 0 || ny >= 16) continue;
                    near = grad.at(nx, ny) > 0.0;
                }
            CHECK(near);
        }
}

TEST_CASE("direct warp of GT occ: undefined region equals newly visible set") {
    SceneSpec spec = square_scene(8, 8, 2, 2, 3, 2, 0);
    SamplePair s = generate(spec, 3);
    MaskedMap d = direct_warp(s.occ1, s.flow12);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK((!d.defined(x, y)) == (s.occ2.at(x, y) == 1.0));
}

TEST_CASE("occ_from_flow trivial and noisy cases") {
    FlowField f12(8, 8, FlowDir::OneToTwo, 2.0, -1.0);
    FlowField f21(8, 8, FlowDir::TwoToOne, -2.0, 1.0);
    for (Real tau : {0.01, 0.5, 3.0})
        for (Real v : occ_from_flow(f12, f21, tau).v) CHECK(v == 0.0);

    CHECK_THROWS_AS(occ_from_flow(f12, f12, 0.5), std::invalid_argument);

    // Noisy flows on a static scene, tau = 1: residual bounded well below tau.
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 100; ++trial) {
        FlowField n12(6, 6, FlowDir::OneToTwo), n21(6, 6, FlowDir::TwoToOne);
        for (std::size_t i = 0; i < n12.u.size(); ++i) {
            n12.u[i] = gauss(rng, 0.0, 0.1);
            n12.vflow[i] = gauss(rng, 0.0, 0.1);
            n21.u[i] = gauss(rng, 0.0, 0.1);
            n21.vflow[i] = gauss(rng, 0.0, 0.1);
        }
        for (Real v : occ_from_flow(n12, n21, 1.0).v) CHECK(v == 0.0);
    }
}

TEST_CASE("flow-gradient baseline") {
    FlowField uniform(8, 8, FlowDir::OneToTwo, 3.0, 1.0);
    for (Real v : mb_from_flow_gradient(uniform, 0.5).v) CHECK(v == 0.0);

    SceneSpec spec = square_scene(10, 10, 3, 3, 3, 2, 0);
    SamplePair s = generate(spec, 2);
    for (Real cap : {0.25, 0.5, 1.0}) {
        ScalarMap g = mb_from_flow_gradient(s.flow12, cap);
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x) {
                bool near_mb = false;
                for (int dy = -1; dy <= 1 && !near_mb; ++dy)
                    for (int dx = -1; dx <= 1 && !near_mb; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= 10 || ny < 0 || ny >= 10) continue;
                        near_mb = s.mb1.at(nx, ny) >= 0.5;
                    }
                if (!near_mb) CHECK(g.at(x, y) == 0.0);
            }
    }

    // cap_fraction = 1 normalizes the maximum to exactly 1.
    std::mt19937_64 rng(80);
    FlowField noisy(8, 8, FlowDir::OneToTwo);
    for (std::size_t i = 0; i < noisy.u.size(); ++i) {
        noisy.u[i] = uniform_real(rng, -2.0, 2.0);
        noisy.vflow[i] = uniform_real(rng, -2.0, 2.0);
    }
    ScalarMap g = mb_from_flow_gradient(noisy, 1.0);
    Real max = 0.0;
    for (Real v : g.v) max = std::max(max, v);
    CHECK(max == doctest::Approx(1.0));
}

TEST_CASE("adjacency stats") {
    // MB exactly on the Occ boundary: fraction 1 at radius 0.
    ScalarMap occ(8, 8, 0.0, RangeTag::Unit);
    for (int y = 2; y <= 5; ++y)
        for (int x = 2; x <= 5; ++x) occ.at(x, y) = 1.0;
    ScalarMap boundary(8, 8, 0.0, RangeTag::Unit);
    for (int y = 2; y <= 5; ++y)
        for (int x = 2; x <= 5; ++x)
            if (x == 2 || x == 5 || y == 2 || y == 5) boundary.at(x, y) = 1.0;
    auto r = adjacency_stats(boundary, occ, {0, 1});
    REQUIRE(r.size() == 2);
    CHECK(r[0].has_value());
    CHECK(*r[0] == doctest::Approx(1.0));

    // Empty MB map: absent fractions.
    ScalarMap empty(8, 8, 0.0, RangeTag::Unit);
    auto e = adjacency_stats(empty, occ, {1});
    CHECK_FALSE(e[0].has_value());

    // Thin vertical bar moving one pixel right: every MB pixel is adjacent to
    // the one-pixel occlusion band alongside it.
    SceneSpec spec = square_scene(10, 10, 4, 2, 1, 1, 0);
    spec.shapes[0].h = 5;  // 1x5 bar
    SamplePair s = generate(spec, 4);
    auto frac = adjacency_stats(s.mb1, s.occ1, {1, 3});
    REQUIRE(frac[0].has_value());
    CHECK(*frac[0] == doctest::Approx(1.0));
    CHECK(*frac[1] == doctest::Approx(1.0));
}

TEST_CASE("random scenes keep every correspondent in-grid") {
    std::mt19937_64 rng(81);
    for (int trial = 0; trial < 30; ++trial) {
        SceneSpec spec = random_scene(20, 14, rng, 3);
        SamplePair s = generate(spec, rng());
        for (int y = 0; y < 14; ++y)
            for (int x = 0; x < 20; ++x) {
                int tx = x + static_cast<int>(s.flow12.ux(x, y));
                int ty = y + static_cast<int>(s.flow12.vy(x, y));
                CHECK(tx >= 0);
                CHECK(tx < 20);
                CHECK(ty >= 0);
                CHECK(ty < 14);
            }
    }
}
