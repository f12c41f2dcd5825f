#include "mbocc/warp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mbocc {

namespace {

void check_same_size(int w1, int h1, int w2, int h2, const char* who) {
    if (w1 != w2 || h1 != h2) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

}  // namespace

MaskedMap direct_warp(const ScalarMap& src, const FlowField& flow) {
    check_same_size(src.width, src.height, flow.width, flow.height, "direct_warp");
    MaskedMap out;
    out.map = ScalarMap(src.width, src.height, 0.0, src.range);
    out.defined_mask.assign(src.size(), 0);
    out.coverage.assign(src.size(), 0);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            long tx = std::lround(x + flow.ux(x, y));
            long ty = std::lround(y + flow.vy(x, y));
            if (tx < 0 || tx >= src.width || ty < 0 || ty >= src.height) continue;
            std::size_t t = out.map.idx(static_cast<int>(tx), static_cast<int>(ty));
            Real val = src.v[src.idx(x, y)];
            if (out.coverage[t] == 0)
                out.map.v[t] = val;
            else
                out.map.v[t] = std::max(out.map.v[t], val);
            out.coverage[t] += 1;
            out.defined_mask[t] = 1;
        }
    }
    return out;
}

ScalarMap reverse_warp(const ScalarMap& src, const FlowField& flow) {
    check_same_size(src.width, src.height, flow.width, flow.height, "reverse_warp");
    ScalarMap out(src.width, src.height, 0.0, src.range);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            out.at(x, y) = sample_bilinear(src, x + flow.ux(x, y), y + flow.vy(x, y));
    return out;
}

ScalarMap flow_symmetry_residual(const FlowField& f12, const FlowField& f21) {
    check_same_size(f12.width, f12.height, f21.width, f21.height, "flow_symmetry_residual");
    if (f12.dir == f21.dir)
        throw std::invalid_argument("flow_symmetry_residual: flows must have opposite directions");
    ScalarMap out(f12.width, f12.height, 0.0, RangeTag::NonNeg);
    for (int y = 0; y < f12.height; ++y) {
        for (int x = 0; x < f12.width; ++x) {
            Real fx = f12.ux(x, y);
            Real fy = f12.vy(x, y);
            Real bu = sample_bilinear_plane(f21.u.data(), f21.width, f21.height, x + fx, y + fy);
            Real bv = sample_bilinear_plane(f21.vflow.data(), f21.width, f21.height, x + fx, y + fy);
            Real rx = fx + bu;
            Real ry = fy + bv;
            out.at(x, y) = std::sqrt(rx * rx + ry * ry);
        }
    }
    return out;
}

}  // namespace mbocc
