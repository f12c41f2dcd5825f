#pragma once

#include "mbocc/grid.hpp"

namespace mbocc {

// Per-pixel table of feature distances over a (2s+1)^2 displacement window.
// Exists as a reference structure and test oracle; the network path only ever
// materializes the 2-D cost blocks below.
struct CostVolume {
    int width = 0;
    int height = 0;
    int radius = 0;
    std::vector<Real> v;  // (y, x, dy, dx) with dy, dx in [-s, s]

    int bins() const { return 2 * radius + 1; }
    std::size_t idx(int x, int y, int dx, int dy) const {
        std::size_t per_pixel = static_cast<std::size_t>(bins()) * bins();
        return (static_cast<std::size_t>(y) * width + x) * per_pixel +
               static_cast<std::size_t>(dy + radius) * bins() + (dx + radius);
    }
    Real at(int x, int y, int dx, int dy) const { return v[idx(x, y, dx, dy)]; }
};

// L2 distance between the feature vector at integer pixel (xa, ya) in fa and
// the bilinearly sampled (border-clamped) feature vector at continuous
// (xb, yb) in fb. Channel counts must match.
Real feature_distance(const FeatureMap& fa, int xa, int ya,
                      const FeatureMap& fb, Real xb, Real yb);

// V(x, d) = feature_distance(fa, x, fb, x + d) for all |d|_inf <= s.
CostVolume cost_volume(const FeatureMap& fa, const FeatureMap& fb, int radius);

// B(x) = min over |d|_inf <= s of feature_distance(fa, x, fb, x + F(x) + d).
// High values signal vicinity to motion boundaries or occlusions.
ScalarMap cost_block(const FeatureMap& fa, const FeatureMap& fb,
                     const FlowField& flow, int radius);

}  // namespace mbocc
