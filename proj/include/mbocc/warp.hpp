#pragma once

#include "mbocc/grid.hpp"

namespace mbocc {

// Forward-splat src (living in the flow's source frame) along the flow. Each
// source value lands on the nearest pixel of its displaced position; targets
// off the grid are dropped. Colliding splats aggregate by MAX, and per-target
// coverage counts are kept. Pixels nothing splats onto are undefined.
MaskedMap direct_warp(const ScalarMap& src, const FlowField& flow);

// Fill the output frame by sampling src at positions displaced by the flow
// (flow direction is output frame -> src frame). Samples falling outside the
// grid clamp to the border, so the output is defined everywhere.
ScalarMap reverse_warp(const ScalarMap& src, const FlowField& flow);

// Per-pixel norm of F_1to2(x) + F_2to1(x + F_1to2(x)), with bilinear,
// border-clamped lookup of the second flow. Large values flag occlusions and
// motion boundaries. Flows must have opposite directions.
ScalarMap flow_symmetry_residual(const FlowField& f12, const FlowField& f21);

}  // namespace mbocc
