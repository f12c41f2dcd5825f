#include "mbocc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mbocc/rng.hpp"
#include "mbocc/warp.hpp"

namespace mbocc {

bool ShapeSpec::covers(Real px, Real py, int frame) const {
    Real ox = frame == 0 ? x : x + tx;
    Real oy = frame == 0 ? y : y + ty;
    if (kind == ShapeKind::Rect)
        return px >= ox && px < ox + w && py >= oy && py < oy + h;
    Real dx = (px - ox) / w;
    Real dy = (py - oy) / h;
    return dx * dx + dy * dy <= 1.0;
}

namespace {

constexpr int kBackground = -1;

void validate_scene(const SceneSpec& spec) {
    if (spec.width < 2 || spec.height < 2)
        throw std::invalid_argument("generate: grid must be at least 2x2");
    if (spec.shapes.empty()) throw std::invalid_argument("generate: empty scene spec");
    for (std::size_t i = 0; i < spec.shapes.size(); ++i)
        for (std::size_t j = i + 1; j < spec.shapes.size(); ++j)
            if (spec.shapes[i].depth == spec.shapes[j].depth)
                throw std::invalid_argument("generate: depth orders must be distinct");
    for (int frame = 0; frame < 2; ++frame) {
        for (const auto& s : spec.shapes) {
            bool any = false;
            for (int y = 0; y < spec.height && !any; ++y)
                for (int x = 0; x < spec.width && !any; ++x)
                    any = s.covers(x, y, frame);
            if (!any)
                throw std::invalid_argument("generate: shape entirely off-grid in one frame");
        }
    }
}

// Topmost visible shape per pixel (kBackground where none).
std::vector<int> visibility(const SceneSpec& spec, int frame) {
    std::vector<int> vis(static_cast<std::size_t>(spec.width) * spec.height, kBackground);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            int best = kBackground;
            int best_depth = std::numeric_limits<int>::min();
            for (std::size_t i = 0; i < spec.shapes.size(); ++i) {
                if (spec.shapes[i].depth > best_depth && spec.shapes[i].covers(x, y, frame)) {
                    best = static_cast<int>(i);
                    best_depth = spec.shapes[i].depth;
                }
            }
            vis[static_cast<std::size_t>(y) * spec.width + x] = best;
        }
    }
    return vis;
}

}  // namespace

SamplePair generate(const SceneSpec& spec, std::uint64_t seed) {
    validate_scene(spec);
    const int W = spec.width, H = spec.height;
    std::mt19937_64 rng(seed);

    Real bg_color[3];
    for (Real& c : bg_color) c = uniform_real(rng, 0.05, 0.95);
    std::vector<std::array<Real, 3>> shape_color(spec.shapes.size());
    for (auto& col : shape_color)
        for (Real& c : col) c = uniform_real(rng, 0.05, 0.95);

    std::vector<int> vis1 = visibility(spec, 0);
    std::vector<int> vis2 = visibility(spec, 1);

    auto translation = [&](int id) {
        if (id == kBackground) return std::pair<int, int>{spec.bg_tx, spec.bg_ty};
        return std::pair<int, int>{spec.shapes[id].tx, spec.shapes[id].ty};
    };
    auto depth_of = [&](int id) {
        return id == kBackground ? std::numeric_limits<int>::min() : spec.shapes[id].depth;
    };

    SamplePair out;
    out.flow12 = FlowField(W, H, FlowDir::OneToTwo);
    out.flow21 = FlowField(W, H, FlowDir::TwoToOne);
    out.occ1 = ScalarMap(W, H, 0.0, RangeTag::Unit);
    out.occ2 = ScalarMap(W, H, 0.0, RangeTag::Unit);
    out.mb1 = ScalarMap(W, H, 0.0, RangeTag::Unit);
    out.mb2 = ScalarMap(W, H, 0.0, RangeTag::Unit);

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * W + x;
            auto [tx1, ty1] = translation(vis1[i]);
            out.flow12.u[i] = tx1;
            out.flow12.vflow[i] = ty1;
            auto [tx2, ty2] = translation(vis2[i]);
            out.flow21.u[i] = -tx2;
            out.flow21.vflow[i] = -ty2;

            // Occluded in frame 1: correspondent off-grid or hidden.
            int cx = x + tx1, cy = y + ty1;
            if (cx < 0 || cx >= W || cy < 0 || cy >= H ||
                vis2[static_cast<std::size_t>(cy) * W + cx] != vis1[i])
                out.occ1.v[i] = 1.0;
            // Occluded in frame 2 (looking backward in time).
            int px = x - tx2, py = y - ty2;
            if (px < 0 || px >= W || py < 0 || py >= H ||
                vis1[static_cast<std::size_t>(py) * W + px] != vis2[i])
                out.occ2.v[i] = 1.0;
        }
    }

    // One-pixel MB band on the foreground side of each flow discontinuity.
    auto mark_boundaries = [&](const FlowField& flow, const std::vector<int>& vis, ScalarMap& mb) {
        const int dx4[4] = {1, -1, 0, 0};
        const int dy4[4] = {0, 0, 1, -1};
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                std::size_t i = static_cast<std::size_t>(y) * W + x;
                for (int k = 0; k < 4; ++k) {
                    int nx = x + dx4[k], ny = y + dy4[k];
                    if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                    std::size_t j = static_cast<std::size_t>(ny) * W + nx;
                    if (flow.u[i] == flow.u[j] && flow.vflow[i] == flow.vflow[j]) continue;
                    if (depth_of(vis[i]) > depth_of(vis[j])) mb.v[i] = 1.0;
                }
            }
        }
    };
    mark_boundaries(out.flow12, vis1, out.mb1);
    mark_boundaries(out.flow21, vis2, out.mb2);

    out.frame1 = FeatureMap(W, H, 3);
    out.frame2 = FeatureMap(W, H, 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * W + x;
            for (int c = 0; c < 3; ++c) {
                out.frame1.at(x, y, c) = vis1[i] == kBackground ? bg_color[c] : shape_color[vis1[i]][c];
                out.frame2.at(x, y, c) = vis2[i] == kBackground ? bg_color[c] : shape_color[vis2[i]][c];
            }
        }
    }
    if (spec.noise_sigma > 0.0) {
        for (auto& val : out.frame1.v)
            val = std::clamp(val + gauss(rng, 0.0, spec.noise_sigma), 0.0, 1.0);
        for (auto& val : out.frame2.v)
            val = std::clamp(val + gauss(rng, 0.0, spec.noise_sigma), 0.0, 1.0);
    }
    return out;
}

ScalarMap occ_from_flow(const FlowField& f12, const FlowField& f21, Real tau) {
    if (f12.dir == f21.dir)
        throw std::invalid_argument("occ_from_flow: flows must have opposite directions");
    ScalarMap residual = flow_symmetry_residual(f12, f21);
    ScalarMap out(f12.width, f12.height, 0.0, RangeTag::Unit);
    for (std::size_t i = 0; i < residual.v.size(); ++i)
        if (residual.v[i] > tau) out.v[i] = 1.0;
    return out;
}

ScalarMap mb_from_flow_gradient(const FlowField& f, Real cap_fraction, Real dataset_max) {
    if (cap_fraction <= 0.0 || cap_fraction > 1.0)
        throw std::invalid_argument("mb_from_flow_gradient: cap_fraction must be in (0,1]");
    ScalarMap uplane(f.width, f.height);
    ScalarMap vplane(f.width, f.height);
    uplane.v = f.u;
    vplane.v = f.vflow;
    ScalarMap gu = gradient_magnitude(uplane);
    ScalarMap gv = gradient_magnitude(vplane);
    ScalarMap g(f.width, f.height, 0.0, RangeTag::NonNeg);
    Real field_max = 0.0;
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        g.v[i] = std::max(gu.v[i], gv.v[i]);
        field_max = std::max(field_max, g.v[i]);
    }
    Real ref = dataset_max >= 0.0 ? dataset_max : field_max;
    Real cap = cap_fraction * ref;
    ScalarMap out(f.width, f.height, 0.0, RangeTag::Unit);
    if (cap <= 0.0) return out;
    for (std::size_t i = 0; i < g.v.size(); ++i) out.v[i] = std::min(g.v[i], cap) / cap;
    return out;
}

std::vector<std::optional<Real>> adjacency_stats(const ScalarMap& mb, const ScalarMap& occ,
                                                 const std::vector<int>& radii) {
    if (mb.width != occ.width || mb.height != occ.height)
        throw std::invalid_argument("adjacency_stats: dimension mismatch");
    const int W = mb.width, H = mb.height;
    const int dx4[4] = {1, -1, 0, 0};
    const int dy4[4] = {0, 0, 1, -1};

    // Occ-boundary pixels: Occ with at least one non-Occ 4-neighbor.
    std::vector<std::uint8_t> boundary(static_cast<std::size_t>(W) * H, 0);
    bool any_boundary = false;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (occ.at(x, y) < 0.5) continue;
            for (int k = 0; k < 4; ++k) {
                int nx = x + dx4[k], ny = y + dy4[k];
                if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                if (occ.at(nx, ny) < 0.5) {
                    boundary[mb.idx(x, y)] = 1;
                    any_boundary = true;
                    break;
                }
            }
        }
    }

    // Chebyshev distance to the boundary set, two-pass chamfer over the
    // 8-neighborhood (exact for the L-inf metric).
    const int big = W + H + 2;
    std::vector<int> dist(static_cast<std::size_t>(W) * H, big);
    if (any_boundary) {
        for (std::size_t i = 0; i < dist.size(); ++i)
            if (boundary[i]) dist[i] = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                std::size_t i = mb.idx(x, y);
                for (int dy = -1; dy <= 0; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dy == 0 && dx >= 0) continue;
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                        dist[i] = std::min(dist[i], dist[mb.idx(nx, ny)] + 1);
                    }
            }
        for (int y = H - 1; y >= 0; --y)
            for (int x = W - 1; x >= 0; --x) {
                std::size_t i = mb.idx(x, y);
                for (int dy = 0; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dy == 0 && dx <= 0) continue;
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                        dist[i] = std::min(dist[i], dist[mb.idx(nx, ny)] + 1);
                    }
            }
    }

    std::size_t mb_count = 0;
    for (Real v : mb.v) mb_count += (v >= 0.5);
    std::vector<std::optional<Real>> out;
    for (int r : radii) {
        if (mb_count == 0) {
            out.push_back(std::nullopt);
            continue;
        }
        std::size_t close = 0;
        for (std::size_t i = 0; i < mb.v.size(); ++i)
            if (mb.v[i] >= 0.5 && dist[i] <= r) ++close;
        out.push_back(static_cast<Real>(close) / static_cast<Real>(mb_count));
    }
    return out;
}

SceneSpec square_scene(int width, int height, int x, int y, int size, int tx, int ty) {
    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    ShapeSpec sq;
    sq.kind = ShapeKind::Rect;
    sq.x = x;
    sq.y = y;
    sq.w = size;
    sq.h = size;
    sq.depth = 1;
    sq.tx = tx;
    sq.ty = ty;
    spec.shapes.push_back(sq);
    return spec;
}

SceneSpec random_scene(int width, int height, std::mt19937_64& rng, int max_shapes,
                       Real noise_sigma) {
    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    spec.noise_sigma = noise_sigma;
    int n = uniform_int(rng, 1, std::max(1, max_shapes));
    int max_t = std::max(1, std::min(4, width / 8));
    for (int i = 0; i < n; ++i) {
        ShapeSpec s;
        s.kind = uniform_int(rng, 0, 1) == 0 ? ShapeKind::Rect : ShapeKind::Ellipse;
        int min_sz = std::max(3, width / 10);
        int max_sz = std::max(min_sz + 1, width / 3);
        int sw = uniform_int(rng, min_sz, max_sz);
        int sh = uniform_int(rng, min_sz, max_sz);
        do {
            s.tx = uniform_int(rng, -max_t, max_t);
            s.ty = uniform_int(rng, -max_t, max_t);
        } while (s.tx == 0 && s.ty == 0 && n == 1);
        // Place the shape so both frames keep it fully in-grid; keeps every
        // visible pixel's correspondent inside the other frame.
        if (s.kind == ShapeKind::Rect) {
            s.w = sw;
            s.h = sh;
            int x_lo = std::max(0, -s.tx);
            int x_hi = std::max(x_lo, width - sw - std::max(0, s.tx));
            int y_lo = std::max(0, -s.ty);
            int y_hi = std::max(y_lo, height - sh - std::max(0, s.ty));
            s.x = uniform_int(rng, x_lo, x_hi);
            s.y = uniform_int(rng, y_lo, y_hi);
        } else {
            s.w = std::max(2, sw / 2);
            s.h = std::max(2, sh / 2);
            int rx = static_cast<int>(s.w), ry = static_cast<int>(s.h);
            int x_lo = rx + std::max(0, -s.tx);
            int x_hi = std::max(x_lo, width - 1 - rx - std::max(0, s.tx));
            int y_lo = ry + std::max(0, -s.ty);
            int y_hi = std::max(y_lo, height - 1 - ry - std::max(0, s.ty));
            s.x = uniform_int(rng, x_lo, x_hi);
            s.y = uniform_int(rng, y_lo, y_hi);
        }
        s.depth = i + 1;
        spec.shapes.push_back(s);
    }
    return spec;
}

}  // namespace mbocc
