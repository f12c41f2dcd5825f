#include "mbocc/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "mbocc/io.hpp"

namespace mbocc::data {

namespace fs = std::filesystem;

void save_sample(const std::string& dir, const SamplePair& s, bool previews) {
    fs::create_directories(dir);
    auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
    io::save_features(at("frame1.bin"), s.frame1);
    io::save_features(at("frame2.bin"), s.frame2);
    io::save_flow(at("flow12.bin"), s.flow12);
    io::save_flow(at("flow21.bin"), s.flow21);
    io::save_map(at("occ1.bin"), s.occ1);
    io::save_map(at("occ2.bin"), s.occ2);
    io::save_map(at("mb1.bin"), s.mb1);
    io::save_map(at("mb2.bin"), s.mb2);
    if (previews) {
        io::write_png_preview(at("frame1.png"), io::to_raster(s.frame1));
        io::write_png_preview(at("frame2.png"), io::to_raster(s.frame2));
        io::write_png_preview(at("occ1.png"), io::to_raster(s.occ1));
        io::write_png_preview(at("occ2.png"), io::to_raster(s.occ2));
        io::write_png_preview(at("mb1.png"), io::to_raster(s.mb1));
        io::write_png_preview(at("mb2.png"), io::to_raster(s.mb2));
    }
}

SamplePair load_sample(const std::string& dir) {
    auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
    SamplePair s;
    s.frame1 = io::load_features(at("frame1.bin"));
    s.frame2 = io::load_features(at("frame2.bin"));
    s.flow12 = io::load_flow(at("flow12.bin"), FlowDir::OneToTwo);
    s.flow21 = io::load_flow(at("flow21.bin"), FlowDir::TwoToOne);
    s.occ1 = io::load_map(at("occ1.bin"), RangeTag::Unit);
    s.occ2 = io::load_map(at("occ2.bin"), RangeTag::Unit);
    s.mb1 = io::load_map(at("mb1.bin"), RangeTag::Unit);
    s.mb2 = io::load_map(at("mb2.bin"), RangeTag::Unit);
    return s;
}

std::string sample_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%04d", index);
    return buf;
}

std::vector<std::string> list_samples(const std::string& root) {
    std::vector<std::string> dirs;
    if (!fs::exists(root)) throw std::runtime_error("dataset: missing root " + root);
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        if (name.rfind("sample_", 0) == 0) dirs.push_back(entry.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw std::runtime_error("dataset: no sample_* directories in " + root);
    return dirs;
}

std::vector<SamplePair> load_dataset(const std::string& root) {
    std::vector<SamplePair> out;
    for (const std::string& dir : list_samples(root)) out.push_back(load_sample(dir));
    return out;
}

}  // namespace mbocc::data
