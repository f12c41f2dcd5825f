#include <doctest.h>

#include <cmath>
#include <random>

#include "mbocc/grid.hpp"
#include "mbocc/rng.hpp"

using namespace mbocc;

namespace {

ScalarMap random_map(int w, int h, std::mt19937_64& rng, RangeTag tag = RangeTag::Unit) {
    ScalarMap m(w, h, 0.0, tag);
    for (Real& v : m.v) v = uniform_real(rng);
    return m;
}

// Independent per-block mean with edge replication, written as plain loops.
Real block_mean_oracle(const ScalarMap& m, int ox, int oy) {
    Real acc = 0.0;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            int sx = std::min(2 * ox + dx, m.width - 1);
            int sy = std::min(2 * oy + dy, m.height - 1);
            acc += m.at(sx, sy);
        }
    return acc / 4.0;
}

// Independent corner-aligned bilinear interpolation, scalar route.
Real interp_oracle(const ScalarMap& m, Real x, Real y) {
    x = std::min(std::max(x, 0.0), static_cast<Real>(m.width - 1));
    y = std::min(std::max(y, 0.0), static_cast<Real>(m.height - 1));
    int x0 = std::min(static_cast<int>(x), m.width - 2 >= 0 ? m.width - 2 : 0);
    int y0 = std::min(static_cast<int>(y), m.height - 2 >= 0 ? m.height - 2 : 0);
    if (m.width == 1) x0 = 0;
    if (m.height == 1) y0 = 0;
    int x1 = std::min(x0 + 1, m.width - 1);
    int y1 = std::min(y0 + 1, m.height - 1);
    Real fx = x - x0, fy = y - y0;
    return m.at(x0, y0) * (1 - fx) * (1 - fy) + m.at(x1, y0) * fx * (1 - fy) +
           m.at(x0, y1) * (1 - fx) * fy + m.at(x1, y1) * fx * fy;
}

}  // namespace

TEST_CASE("downsample2 constant and mean") {
    ScalarMap c(2, 2, 1.0, RangeTag::Unit);
    ScalarMap d = downsample2(c);
    CHECK(d.width == 1);
    CHECK(d.height == 1);
    CHECK(d.at(0, 0) == doctest::Approx(1.0));

    ScalarMap m(2, 2);
    m.at(0, 0) = 0.0;
    m.at(1, 0) = 0.0;
    m.at(0, 1) = 1.0;
    m.at(1, 1) = 1.0;
    CHECK(downsample2(m).at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("downsample2 matches per-block mean oracle") {
    std::mt19937_64 rng(7);
    ScalarMap m = random_map(8, 8, rng);
    ScalarMap d = downsample2(m);
    REQUIRE(d.width == 4);
    REQUIRE(d.height == 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(d.at(x, y) == doctest::Approx(block_mean_oracle(m, x, y)).epsilon(1e-12));
}

TEST_CASE("downsample2 odd dims use edge replication") {
    std::mt19937_64 rng(8);
    ScalarMap m = random_map(5, 3, rng);
    ScalarMap d = downsample2(m);
    REQUIRE(d.width == 3);
    REQUIRE(d.height == 2);
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x)
            CHECK(d.at(x, y) == doctest::Approx(block_mean_oracle(m, x, y)).epsilon(1e-12));
    CHECK(d.range == RangeTag::Unit);
}

TEST_CASE("upsample_to constants and linear midpoint") {
    ScalarMap one(1, 1, 0.7, RangeTag::Unit);
    ScalarMap up = upsample_to(one, 4, 4);
    for (Real v : up.v) CHECK(v == doctest::Approx(0.7));

    ScalarMap two(2, 1);
    two.at(0, 0) = 0.0;
    two.at(1, 0) = 1.0;
    ScalarMap three = upsample_to(two, 3, 1);
    CHECK(three.at(0, 0) == doctest::Approx(0.0));
    CHECK(three.at(1, 0) == doctest::Approx(0.5));
    CHECK(three.at(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("upsample then downsample matches scalar interpolation oracle") {
    std::mt19937_64 rng(9);
    ScalarMap m = random_map(4, 4, rng);
    ScalarMap up = upsample_to(m, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            Real sx = x * 3.0 / 7.0;
            Real sy = y * 3.0 / 7.0;
            CHECK(up.at(x, y) == doctest::Approx(interp_oracle(m, sx, sy)).epsilon(1e-6));
        }
    ScalarMap down = downsample2(up);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(down.at(x, y) == doctest::Approx(block_mean_oracle(up, x, y)).epsilon(1e-6));
}

TEST_CASE("upsample_to rejects shrinking") {
    ScalarMap m(4, 4, 0.0);
    CHECK_THROWS_AS(upsample_to(m, 2, 4), std::invalid_argument);
}

TEST_CASE("gradient_magnitude flat, step, ramp") {
    ScalarMap flat(6, 5, 0.25);
    for (Real v : gradient_magnitude(flat).v) CHECK(v == doctest::Approx(0.0));

    // Vertical step 0 -> 1 at column 3: response only within one pixel.
    ScalarMap step(8, 4, 0.0);
    for (int y = 0; y < 4; ++y)
        for (int x = 3; x < 8; ++x) step.at(x, y) = 1.0;
    ScalarMap g = gradient_magnitude(step);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) {
            if (std::abs(x - 3) <= 1)
                continue;
            else
                CHECK(g.at(x, y) == doctest::Approx(0.0));
        }
    CHECK(g.at(3, 0) > 0.0);

    const int W = 10, H = 6;
    ScalarMap ramp(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) ramp.at(x, y) = static_cast<Real>(x) / W;
    ScalarMap gr = gradient_magnitude(ramp);
    for (int y = 1; y < H - 1; ++y)
        for (int x = 1; x < W - 1; ++x)
            CHECK(std::abs(gr.at(x, y) - 1.0 / W) < 1e-9);
}

TEST_CASE("gradient_magnitude rejects degenerate dimension") {
    ScalarMap thin(1, 5, 0.0);
    CHECK_THROWS_AS(gradient_magnitude(thin), std::invalid_argument);
}

TEST_CASE("unit range closed under resolution ops") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        ScalarMap m = random_map(uniform_int(rng, 2, 9), uniform_int(rng, 2, 9), rng);
        ScalarMap d = downsample2(m);
        for (Real v : d.v) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        ScalarMap u = upsample_to(m, m.width + uniform_int(rng, 0, 5),
                                  m.height + uniform_int(rng, 0, 5));
        for (Real v : u.v) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("gradient magnitude zero iff constant") {
    std::mt19937_64 rng(11);
    ScalarMap m = random_map(6, 6, rng);
    m.at(3, 3) += 0.5;  // definitely not constant
    ScalarMap g = gradient_magnitude(m);
    Real max = 0.0;
    for (Real v : g.v) max = std::max(max, v);
    CHECK(max > 1e-12);

    ScalarMap c(6, 6, 0.77);
    for (Real v : gradient_magnitude(c).v) CHECK(v <= 1e-12);
}

TEST_CASE("scalar map validation") {
    ScalarMap m(2, 2, 0.5, RangeTag::Unit);
    CHECK_NOTHROW(m.validate());
    m.at(0, 0) = 1.5;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m.at(0, 0) = std::numeric_limits<Real>::quiet_NaN();
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
