#pragma once

#include <optional>
#include <random>
#include <vector>

#include "mbocc/grid.hpp"

namespace mbocc {

enum class ShapeKind { Rect, Ellipse };

struct ShapeSpec {
    ShapeKind kind = ShapeKind::Rect;
    Real x = 0, y = 0;   // top-left corner (rect) or center (ellipse), frame 1
    Real w = 1, h = 1;   // extent (rect) or radii (ellipse)
    int depth = 0;       // larger = closer to the camera; must be distinct per scene
    int tx = 0, ty = 0;  // integer translation per frame, pixels

    bool covers(Real px, Real py, int frame) const;  // frame 0 or 1
};

struct SceneSpec {
    int width = 0, height = 0;
    int bg_tx = 0, bg_ty = 0;  // background translation, pixels/frame
    Real noise_sigma = 0.0;    // additive Gaussian image noise
    std::vector<ShapeSpec> shapes;
};

// Two frames with exact bidirectional ground-truth flow, occlusion maps, and
// motion-boundary maps, all on one grid. Occ/MB maps are binary {0,1}.
struct SamplePair {
    FeatureMap frame1, frame2;  // 3-channel images in [0,1]
    FlowField flow12{1, 1, FlowDir::OneToTwo};
    FlowField flow21{1, 1, FlowDir::TwoToOne};
    ScalarMap occ1, occ2;
    ScalarMap mb1, mb2;
};

// Renders the scene in both frames and derives ground truth from exact
// depth-ordered geometry:
//   - flow: per-pixel translation of the topmost visible shape (background
//     translation elsewhere);
//   - occ_a: pixels visible in frame a whose correspondent in the other frame
//     is off-grid or hidden by a different surface;
//   - mb_a: one-pixel band on the foreground side of each flow discontinuity.
// Colors come from the seed; deterministic per (spec, seed).
SamplePair generate(const SceneSpec& spec, std::uint64_t seed);

// Forward-backward consistency check: binary map, 1 where the flow-symmetry
// residual exceeds tau.
ScalarMap occ_from_flow(const FlowField& f12, const FlowField& f21, Real tau);

// Flow-gradient motion-boundary baseline: per-pixel max over the u/v channels
// of the gradient magnitude, capped at cap_fraction times the reference
// maximum (the field's own maximum unless dataset_max >= 0 is supplied) and
// rescaled to [0,1].
ScalarMap mb_from_flow_gradient(const FlowField& f, Real cap_fraction, Real dataset_max = -1.0);

// Per radius r: fraction of MB pixels within Chebyshev distance r of an
// Occ-boundary pixel (an Occ pixel with a non-Occ 4-neighbor). Absent when
// the MB map has no positive pixels.
std::vector<std::optional<Real>> adjacency_stats(const ScalarMap& mb, const ScalarMap& occ,
                                                 const std::vector<int>& radii);

// Convenience: the translating-square scene used throughout the tests — a
// square of the given size at (x, y) moving (tx, ty) over a static background.
SceneSpec square_scene(int width, int height, int x, int y, int size, int tx, int ty);

// Random scene with 1..max_shapes shapes, for dataset generation.
SceneSpec random_scene(int width, int height, std::mt19937_64& rng, int max_shapes = 3,
                       Real noise_sigma = 0.0);

}  // namespace mbocc
