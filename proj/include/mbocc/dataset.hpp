#pragma once

#include <string>
#include <vector>

#include "mbocc/synth.hpp"

namespace mbocc::data {

// On-disk sample layout: one directory per sample holding frame1/frame2
// (3-channel), flow12/flow21 (2-channel), and the four binary GT maps, all in
// the flat binary raster format.
void save_sample(const std::string& dir, const SamplePair& s, bool previews = false);
SamplePair load_sample(const std::string& dir);

// Sorted sample_* subdirectories of a dataset root.
std::vector<std::string> list_samples(const std::string& root);
std::vector<SamplePair> load_dataset(const std::string& root);

std::string sample_dir_name(int index);

}  // namespace mbocc::data
