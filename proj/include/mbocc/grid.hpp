#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbocc {

using Real = double;

// Value range a map promises to stay inside.
enum class RangeTag { Unit, NonNeg, Free };

// Temporal direction of a flow field, frame a -> frame b.
enum class FlowDir { OneToTwo, TwoToOne };

inline FlowDir opposite(FlowDir d) {
    return d == FlowDir::OneToTwo ? FlowDir::TwoToOne : FlowDir::OneToTwo;
}

inline const char* to_string(FlowDir d) {
    return d == FlowDir::OneToTwo ? "1to2" : "2to1";
}

// H x W grid of scalars, row-major, pixel centers at integer coordinates,
// origin top-left, x rightward, y downward.
struct ScalarMap {
    int width = 0;
    int height = 0;
    RangeTag range = RangeTag::Free;
    std::vector<Real> v;

    ScalarMap() = default;
    ScalarMap(int w, int h, Real fill = 0.0, RangeTag tag = RangeTag::Free);

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    Real& at(int x, int y) { return v[idx(x, y)]; }
    Real at(int x, int y) const { return v[idx(x, y)]; }
    bool in_grid(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t size() const { return v.size(); }

    // Throws std::invalid_argument on non-finite values, bad dims, or
    // unit-tagged values outside [0,1].
    void validate(const std::string& who = "ScalarMap") const;
};

// H x W field of pixel displacements (u = dx, v = dy) in one temporal direction.
struct FlowField {
    int width = 0;
    int height = 0;
    FlowDir dir = FlowDir::OneToTwo;
    std::vector<Real> u;  // dx per pixel
    std::vector<Real> vflow;  // dy per pixel

    FlowField() = default;
    FlowField(int w, int h, FlowDir d, Real du = 0.0, Real dv = 0.0);

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    Real& ux(int x, int y) { return u[idx(x, y)]; }
    Real ux(int x, int y) const { return u[idx(x, y)]; }
    Real& vy(int x, int y) { return vflow[idx(x, y)]; }
    Real vy(int x, int y) const { return vflow[idx(x, y)]; }

    void validate(const std::string& who = "FlowField") const;
};

// Output of direct warping: a map plus per-pixel coverage counts. A pixel is
// defined iff at least one source splatted onto it; the stored value at
// undefined pixels is 0 and must not be read without checking defined().
struct MaskedMap {
    ScalarMap map;
    std::vector<std::uint8_t> defined_mask;
    std::vector<int> coverage;

    bool defined(int x, int y) const { return defined_mask[map.idx(x, y)] != 0; }
    int coverage_at(int x, int y) const { return coverage[map.idx(x, y)]; }
    std::size_t defined_count() const;
};

// H x W x C feature grid, stored as C planes of H x W (plane-major).
struct FeatureMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<Real> v;

    FeatureMap() = default;
    FeatureMap(int w, int h, int c, Real fill = 0.0);

    std::size_t plane() const { return static_cast<std::size_t>(width) * height; }
    std::size_t idx(int x, int y, int c) const { return c * plane() + static_cast<std::size_t>(y) * width + x; }
    Real& at(int x, int y, int c) { return v[idx(x, y, c)]; }
    Real at(int x, int y, int c) const { return v[idx(x, y, c)]; }
    const Real* plane_ptr(int c) const { return v.data() + c * plane(); }
    Real* plane_ptr(int c) { return v.data() + c * plane(); }

    void validate(const std::string& who = "FeatureMap") const;
};

// Bilinear sample with border clamping; (x, y) may be fractional and outside
// the grid.
Real sample_bilinear(const ScalarMap& m, Real x, Real y);
Real sample_bilinear_plane(const Real* plane, int width, int height, Real x, Real y);

// 2x2 average pooling to ceil(H/2) x ceil(W/2). Odd trailing rows/columns
// pool with edge replication. Preserves the range tag.
ScalarMap downsample2(const ScalarMap& m);
FeatureMap downsample2(const FeatureMap& m);

// Bilinear upsampling with corner alignment. Target must not be smaller than
// the source in either dimension.
ScalarMap upsample_to(const ScalarMap& m, int out_width, int out_height);

// Per-pixel gradient magnitude: central differences in the interior,
// one-sided at borders. Requires both dimensions >= 2.
ScalarMap gradient_magnitude(const ScalarMap& m);

}  // namespace mbocc
