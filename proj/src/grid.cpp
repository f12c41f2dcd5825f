#include "mbocc/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mbocc {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

ScalarMap::ScalarMap(int w, int h, Real fill, RangeTag tag)
    : width(w), height(h), range(tag), v(static_cast<std::size_t>(w) * h, fill) {
    require(w >= 1 && h >= 1, "ScalarMap: dimensions must be >= 1");
}

void ScalarMap::validate(const std::string& who) const {
    require(width >= 1 && height >= 1, who + ": dimensions must be >= 1");
    require(v.size() == static_cast<std::size_t>(width) * height, who + ": value count mismatch");
    for (Real x : v) {
        require(std::isfinite(x), who + ": non-finite value");
        if (range == RangeTag::Unit) require(x >= 0.0 && x <= 1.0, who + ": unit-tagged value outside [0,1]");
        if (range == RangeTag::NonNeg) require(x >= 0.0, who + ": negative value in nonneg map");
    }
}

FlowField::FlowField(int w, int h, FlowDir d, Real du, Real dv)
    : width(w), height(h), dir(d),
      u(static_cast<std::size_t>(w) * h, du),
      vflow(static_cast<std::size_t>(w) * h, dv) {
    require(w >= 1 && h >= 1, "FlowField: dimensions must be >= 1");
}

void FlowField::validate(const std::string& who) const {
    require(width >= 1 && height >= 1, who + ": dimensions must be >= 1");
    require(u.size() == vflow.size() && u.size() == static_cast<std::size_t>(width) * height,
            who + ": component count mismatch");
    for (std::size_t i = 0; i < u.size(); ++i)
        require(std::isfinite(u[i]) && std::isfinite(vflow[i]), who + ": non-finite flow");
}

std::size_t MaskedMap::defined_count() const {
    std::size_t n = 0;
    for (auto d : defined_mask) n += (d != 0);
    return n;
}

FeatureMap::FeatureMap(int w, int h, int c, Real fill)
    : width(w), height(h), channels(c), v(static_cast<std::size_t>(w) * h * c, fill) {
    require(w >= 1 && h >= 1 && c >= 1, "FeatureMap: dimensions and channels must be >= 1");
}

void FeatureMap::validate(const std::string& who) const {
    require(width >= 1 && height >= 1 && channels >= 1, who + ": bad shape");
    require(v.size() == plane() * channels, who + ": value count mismatch");
    for (Real x : v) require(std::isfinite(x), who + ": non-finite value");
}

Real sample_bilinear_plane(const Real* plane, int width, int height, Real x, Real y) {
    x = std::clamp(x, 0.0, static_cast<Real>(width - 1));
    y = std::clamp(y, 0.0, static_cast<Real>(height - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    if (x0 == width - 1) x0 = std::max(0, width - 2);
    if (y0 == height - 1) y0 = std::max(0, height - 2);
    int x1 = std::min(x0 + 1, width - 1);
    int y1 = std::min(y0 + 1, height - 1);
    Real wx = x - x0;
    Real wy = y - y0;
    Real a = plane[static_cast<std::size_t>(y0) * width + x0];
    Real b = plane[static_cast<std::size_t>(y0) * width + x1];
    Real c = plane[static_cast<std::size_t>(y1) * width + x0];
    Real d = plane[static_cast<std::size_t>(y1) * width + x1];
    Real top = a + wx * (b - a);
    Real bot = c + wx * (d - c);
    return top + wy * (bot - top);
}

Real sample_bilinear(const ScalarMap& m, Real x, Real y) {
    return sample_bilinear_plane(m.v.data(), m.width, m.height, x, y);
}

namespace {

// Pools one plane; shared by the scalar and feature overloads.
void pool2_plane(const Real* in, int w, int h, Real* out, int ow, int oh) {
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            Real acc = 0.0;
            for (int dy = 0; dy < 2; ++dy) {
                int sy = std::min(2 * oy + dy, h - 1);
                for (int dx = 0; dx < 2; ++dx) {
                    int sx = std::min(2 * ox + dx, w - 1);
                    acc += in[static_cast<std::size_t>(sy) * w + sx];
                }
            }
            out[static_cast<std::size_t>(oy) * ow + ox] = acc * 0.25;
        }
    }
}

}  // namespace

ScalarMap downsample2(const ScalarMap& m) {
    require(m.width >= 1 && m.height >= 1, "downsample2: empty map");
    int ow = (m.width + 1) / 2;
    int oh = (m.height + 1) / 2;
    ScalarMap out(ow, oh, 0.0, m.range);
    pool2_plane(m.v.data(), m.width, m.height, out.v.data(), ow, oh);
    return out;
}

FeatureMap downsample2(const FeatureMap& m) {
    require(m.width >= 1 && m.height >= 1 && m.channels >= 1, "downsample2: empty feature map");
    int ow = (m.width + 1) / 2;
    int oh = (m.height + 1) / 2;
    FeatureMap out(ow, oh, m.channels);
    for (int c = 0; c < m.channels; ++c)
        pool2_plane(m.plane_ptr(c), m.width, m.height, out.plane_ptr(c), ow, oh);
    return out;
}

ScalarMap upsample_to(const ScalarMap& m, int out_width, int out_height) {
    require(out_width >= m.width && out_height >= m.height,
            "upsample_to: target smaller than source");
    ScalarMap out(out_width, out_height, 0.0, m.range);
    // Corner-aligned coordinates: output pixel i samples i*(W-1)/(Wo-1).
    Real sx = out_width > 1 ? static_cast<Real>(m.width - 1) / (out_width - 1) : 0.0;
    Real sy = out_height > 1 ? static_cast<Real>(m.height - 1) / (out_height - 1) : 0.0;
    for (int y = 0; y < out_height; ++y)
        for (int x = 0; x < out_width; ++x)
            out.at(x, y) = sample_bilinear(m, x * sx, y * sy);
    return out;
}

ScalarMap gradient_magnitude(const ScalarMap& m) {
    require(m.width >= 2 && m.height >= 2, "gradient_magnitude: needs H, W >= 2");
    ScalarMap out(m.width, m.height, 0.0, RangeTag::NonNeg);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            Real gx, gy;
            if (x == 0)
                gx = m.at(1, y) - m.at(0, y);
            else if (x == m.width - 1)
                gx = m.at(x, y) - m.at(x - 1, y);
            else
                gx = 0.5 * (m.at(x + 1, y) - m.at(x - 1, y));
            if (y == 0)
                gy = m.at(x, 1) - m.at(x, 0);
            else if (y == m.height - 1)
                gy = m.at(x, y) - m.at(x, y - 1);
            else
                gy = 0.5 * (m.at(x, y + 1) - m.at(x, y - 1));
            out.at(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

}  // namespace mbocc
