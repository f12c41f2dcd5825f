#include "mbocc/cost.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbocc {

Real feature_distance(const FeatureMap& fa, int xa, int ya,
                      const FeatureMap& fb, Real xb, Real yb) {
    if (fa.channels != fb.channels)
        throw std::invalid_argument("feature_distance: channel mismatch");
    Real acc = 0.0;
    for (int c = 0; c < fa.channels; ++c) {
        Real s = sample_bilinear_plane(fb.plane_ptr(c), fb.width, fb.height, xb, yb);
        Real d = fa.at(xa, ya, c) - s;
        acc += d * d;
    }
    return std::sqrt(acc);
}

CostVolume cost_volume(const FeatureMap& fa, const FeatureMap& fb, int radius) {
    if (fa.width != fb.width || fa.height != fb.height)
        throw std::invalid_argument("cost_volume: dimension mismatch");
    if (radius < 0) throw std::invalid_argument("cost_volume: negative radius");
    CostVolume cv;
    cv.width = fa.width;
    cv.height = fa.height;
    cv.radius = radius;
    cv.v.resize(static_cast<std::size_t>(fa.width) * fa.height * cv.bins() * cv.bins());
    for (int y = 0; y < fa.height; ++y)
        for (int x = 0; x < fa.width; ++x)
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    cv.v[cv.idx(x, y, dx, dy)] =
                        feature_distance(fa, x, y, fb, static_cast<Real>(x + dx),
                                         static_cast<Real>(y + dy));
    return cv;
}

ScalarMap cost_block(const FeatureMap& fa, const FeatureMap& fb,
                     const FlowField& flow, int radius) {
    if (fa.width != fb.width || fa.height != fb.height)
        throw std::invalid_argument("cost_block: dimension mismatch");
    if (fa.width != flow.width || fa.height != flow.height)
        throw std::invalid_argument("cost_block: flow dimension mismatch");
    if (radius < 0) throw std::invalid_argument("cost_block: negative radius");
    ScalarMap out(fa.width, fa.height, 0.0, RangeTag::NonNeg);
    for (int y = 0; y < fa.height; ++y) {
        for (int x = 0; x < fa.width; ++x) {
            Real cx = x + flow.ux(x, y);
            Real cy = y + flow.vy(x, y);
            Real best = std::numeric_limits<Real>::infinity();
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    Real d = feature_distance(fa, x, y, fb, cx + dx, cy + dy);
                    if (d < best) best = d;
                }
            out.at(x, y) = best;
        }
    }
    return out;
}

}  // namespace mbocc
