#include "mbocc/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mbocc::io {

namespace {

void put_u32le(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xff),
                                   static_cast<unsigned char>((v >> 8) & 0xff),
                                   static_cast<unsigned char>((v >> 16) & 0xff),
                                   static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32le(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    if (!is) throw std::runtime_error("raster: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_raster(const std::string& path, const Raster& r, std::uint32_t dtype) {
    if (r.height < 1 || r.width < 1 || r.channels < 1)
        throw std::invalid_argument("write_raster: bad shape");
    if (r.data.size() != static_cast<std::size_t>(r.height) * r.width * r.channels)
        throw std::invalid_argument("write_raster: data size mismatch");
    if (dtype != kDtypeF32 && dtype != kDtypeF64)
        throw std::invalid_argument("write_raster: unknown dtype");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_raster: cannot open " + path);
    put_u32le(os, kRasterMagic);
    put_u32le(os, dtype);
    put_u32le(os, static_cast<std::uint32_t>(r.height));
    put_u32le(os, static_cast<std::uint32_t>(r.width));
    put_u32le(os, static_cast<std::uint32_t>(r.channels));
    if (dtype == kDtypeF32) {
        std::vector<float> buf(r.data.size());
        for (std::size_t i = 0; i < r.data.size(); ++i) buf[i] = static_cast<float>(r.data[i]);
        os.write(reinterpret_cast<const char*>(buf.data()), buf.size() * sizeof(float));
    } else {
        os.write(reinterpret_cast<const char*>(r.data.data()), r.data.size() * sizeof(double));
    }
    if (!os) throw std::runtime_error("write_raster: write failed for " + path);
}

Raster read_raster(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_raster: cannot open " + path);
    if (get_u32le(is) != kRasterMagic) throw std::runtime_error("read_raster: bad magic in " + path);
    std::uint32_t dtype = get_u32le(is);
    Raster r;
    r.height = static_cast<int>(get_u32le(is));
    r.width = static_cast<int>(get_u32le(is));
    r.channels = static_cast<int>(get_u32le(is));
    if (r.height < 1 || r.width < 1 || r.channels < 1)
        throw std::runtime_error("read_raster: bad shape in " + path);
    std::size_t n = static_cast<std::size_t>(r.height) * r.width * r.channels;
    r.data.resize(n);
    if (dtype == kDtypeF32) {
        std::vector<float> buf(n);
        is.read(reinterpret_cast<char*>(buf.data()), n * sizeof(float));
        if (!is) throw std::runtime_error("read_raster: truncated data in " + path);
        for (std::size_t i = 0; i < n; ++i) r.data[i] = buf[i];
    } else if (dtype == kDtypeF64) {
        is.read(reinterpret_cast<char*>(r.data.data()), n * sizeof(double));
        if (!is) throw std::runtime_error("read_raster: truncated data in " + path);
    } else {
        throw std::runtime_error("read_raster: unknown dtype in " + path);
    }
    return r;
}

Raster to_raster(const ScalarMap& m) {
    Raster r;
    r.height = m.height;
    r.width = m.width;
    r.channels = 1;
    r.data = m.v;
    return r;
}

Raster to_raster(const FlowField& f) {
    Raster r;
    r.height = f.height;
    r.width = f.width;
    r.channels = 2;
    r.data.resize(f.u.size() * 2);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        r.data[2 * i] = f.u[i];
        r.data[2 * i + 1] = f.vflow[i];
    }
    return r;
}

Raster to_raster(const FeatureMap& f) {
    Raster r;
    r.height = f.height;
    r.width = f.width;
    r.channels = f.channels;
    r.data.resize(f.v.size());
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c)
                r.data[r.idx(x, y, c)] = f.at(x, y, c);
    return r;
}

ScalarMap raster_to_scalar(const Raster& r, RangeTag tag) {
    if (r.channels != 1) throw std::invalid_argument("raster_to_scalar: expected 1 channel");
    ScalarMap m(r.width, r.height, 0.0, tag);
    m.v = r.data;
    return m;
}

FlowField raster_to_flow(const Raster& r, FlowDir dir) {
    if (r.channels != 2) throw std::invalid_argument("raster_to_flow: expected 2 channels");
    FlowField f(r.width, r.height, dir);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        f.u[i] = r.data[2 * i];
        f.vflow[i] = r.data[2 * i + 1];
    }
    return f;
}

FeatureMap raster_to_features(const Raster& r) {
    FeatureMap f(r.width, r.height, r.channels);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
            for (int c = 0; c < r.channels; ++c)
                f.at(x, y, c) = r.data[r.idx(x, y, c)];
    return f;
}

void save_map(const std::string& path, const ScalarMap& m, std::uint32_t dtype) {
    write_raster(path, to_raster(m), dtype);
}
void save_flow(const std::string& path, const FlowField& f, std::uint32_t dtype) {
    write_raster(path, to_raster(f), dtype);
}
void save_features(const std::string& path, const FeatureMap& f, std::uint32_t dtype) {
    write_raster(path, to_raster(f), dtype);
}
ScalarMap load_map(const std::string& path, RangeTag tag) {
    return raster_to_scalar(read_raster(path), tag);
}
FlowField load_flow(const std::string& path, FlowDir dir) {
    return raster_to_flow(read_raster(path), dir);
}
FeatureMap load_features(const std::string& path) {
    return raster_to_features(read_raster(path));
}

void write_pgm(const std::string& path, const ScalarMap& m, Real lo, Real hi) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
    os << "P5\n" << m.width << " " << m.height << "\n255\n";
    Real scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            Real t = (m.at(x, y) - lo) * scale;
            unsigned char b = static_cast<unsigned char>(std::clamp(t, 0.0, 255.0) + 0.5);
            os.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
}

namespace {

std::uint32_t crc32_update(std::uint32_t crc, const unsigned char* p, std::size_t n) {
    static std::uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xff] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

std::uint32_t adler32(const std::vector<unsigned char>& data) {
    std::uint32_t a = 1, b = 0;
    for (unsigned char c : data) {
        a = (a + c) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

void put_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>(v & 0xff));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
    put_u32be(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = crc32_update(0, out.data() + start, out.size() - start);
    put_u32be(out, crc);
}

}  // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
    if (width < 1 || height < 1 || rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw std::invalid_argument("write_png_rgb8: bad input");

    // Raw image stream: one filter byte (0) per scanline.
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(height) * (width * 3 + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = rgb.data() + static_cast<std::size_t>(y) * width * 3;
        raw.insert(raw.end(), row, row + width * 3);
    }

    // zlib stream with stored (uncompressed) deflate blocks.
    std::vector<unsigned char> z;
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t pos = 0;
    while (pos < raw.size() || raw.empty()) {
        std::size_t n = std::min<std::size_t>(65535, raw.size() - pos);
        bool final = pos + n == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(static_cast<unsigned char>(n & 0xff));
        z.push_back(static_cast<unsigned char>((n >> 8) & 0xff));
        z.push_back(static_cast<unsigned char>(~n & 0xff));
        z.push_back(static_cast<unsigned char>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + n);
        pos += n;
        if (final) break;
    }
    put_u32be(z, adler32(raw));

    std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<unsigned char> ihdr;
    put_u32be(ihdr, static_cast<std::uint32_t>(width));
    put_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", z);
    append_chunk(png, "IEND", {});

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_png_rgb8: cannot open " + path);
    os.write(reinterpret_cast<const char*>(png.data()), png.size());
    if (!os) throw std::runtime_error("write_png_rgb8: write failed for " + path);
}

void write_png_preview(const std::string& path, const Raster& r, Real lo, Real hi) {
    if (r.channels != 1 && r.channels != 3)
        throw std::invalid_argument("write_png_preview: need 1 or 3 channels");
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(r.width) * r.height * 3);
    Real scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                Real val = r.data[r.idx(x, y, r.channels == 3 ? c : 0)];
                Real t = (val - lo) * scale;
                rgb[(static_cast<std::size_t>(y) * r.width + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::clamp(t, 0.0, 255.0) + 0.5);
            }
        }
    }
    write_png_rgb8(path, r.width, r.height, rgb);
}

}  // namespace mbocc::io
