#include "mbocc/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#ifndef MBOCC_GIT_DESCRIBE
#define MBOCC_GIT_DESCRIBE "unknown"
#endif

namespace mbocc {

std::string git_describe_string() { return MBOCC_GIT_DESCRIBE; }

RunManifest::RunManifest(std::string cmd) : command(std::move(cmd)) {
    git_describe = git_describe_string();
}

void RunManifest::set(const std::string& key, double value) {
    std::ostringstream os;
    os << value;
    config[key] = os.str();
}

void RunManifest::set(const std::string& key, long value) { config[key] = std::to_string(value); }

void RunManifest::write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["git_describe"] = git_describe;
    j["timings_sec"] = timings_sec;
    j["outputs"] = outputs;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("manifest: cannot open " + path);
    os << j.dump(2) << "\n";
}

}  // namespace mbocc
