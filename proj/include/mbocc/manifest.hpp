#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace mbocc {

// Every artifact-producing command writes one of these next to its outputs so
// the run can be reproduced from the manifest alone.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;  // flattened config echo
    std::uint64_t seed = 0;
    std::string git_describe;
    std::map<std::string, double> timings_sec;
    std::vector<std::string> outputs;

    RunManifest() = default;
    explicit RunManifest(std::string cmd);

    void set(const std::string& key, const std::string& value) { config[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, long value);
    void add_output(const std::string& path) { outputs.push_back(path); }

    void write(const std::string& path) const;
};

// Build-time `git describe` of the source tree ("unknown" outside a checkout).
std::string git_describe_string();

// Simple scope timer feeding RunManifest::timings_sec.
class ScopedTimer {
public:
    ScopedTimer(RunManifest& m, std::string name)
        : manifest_(m), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        auto dt = std::chrono::steady_clock::now() - start_;
        manifest_.timings_sec[name_] = std::chrono::duration<double>(dt).count();
    }

private:
    RunManifest& manifest_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace mbocc
