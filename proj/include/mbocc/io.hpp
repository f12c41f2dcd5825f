#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbocc/grid.hpp"

namespace mbocc::io {

// Flat binary raster, the on-disk format for every map/flow/feature/parameter
// blob. Little-endian header of five u32 fields (magic "MBR1", dtype, height,
// width, channels) followed by row-major (y, x, c) samples. dtype 1 = f32,
// dtype 2 = f64.
constexpr std::uint32_t kRasterMagic = 0x3152424Du;  // "MBR1"
constexpr std::uint32_t kDtypeF32 = 1;
constexpr std::uint32_t kDtypeF64 = 2;

struct Raster {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<Real> data;  // (y, x, c) interleaved

    std::size_t idx(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
};

void write_raster(const std::string& path, const Raster& r, std::uint32_t dtype = kDtypeF32);
Raster read_raster(const std::string& path);

Raster to_raster(const ScalarMap& m);
Raster to_raster(const FlowField& f);
Raster to_raster(const FeatureMap& f);

ScalarMap raster_to_scalar(const Raster& r, RangeTag tag = RangeTag::Free);
FlowField raster_to_flow(const Raster& r, FlowDir dir);
FeatureMap raster_to_features(const Raster& r);

void save_map(const std::string& path, const ScalarMap& m, std::uint32_t dtype = kDtypeF32);
void save_flow(const std::string& path, const FlowField& f, std::uint32_t dtype = kDtypeF32);
void save_features(const std::string& path, const FeatureMap& f, std::uint32_t dtype = kDtypeF32);
ScalarMap load_map(const std::string& path, RangeTag tag = RangeTag::Free);
FlowField load_flow(const std::string& path, FlowDir dir);
FeatureMap load_features(const std::string& path);

// 8-bit grayscale PGM; values linearly mapped from [lo, hi] and clamped.
void write_pgm(const std::string& path, const ScalarMap& m, Real lo = 0.0, Real hi = 1.0);

// Minimal RGB8 PNG writer (stored-deflate zlib stream).
void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);

// Renders a 3-channel frame (or any raster with 1 or 3 channels) to PNG.
void write_png_preview(const std::string& path, const Raster& r, Real lo = 0.0, Real hi = 1.0);

}  // namespace mbocc::io
