#pragma once

#include <map>
#include <string>
#include <vector>

namespace mbocc {

// Minimal key/value run-config format: one `key = tokens...` per line,
// '#' starts a comment, keys may repeat (each occurrence keeps its tokens).
// This is the on-disk format for scene specs, train configs, and ablation
// configs; every file diff shows exactly one changed knob.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_string(const std::string& text);

    bool has(const std::string& key) const;
    // Each returns the LAST occurrence when a key repeats.
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // All whitespace-separated tokens of the last occurrence.
    std::vector<std::string> get_tokens(const std::string& key) const;
    // Token lists of every occurrence, in file order.
    std::vector<std::vector<std::string>> all_occurrences(const std::string& key) const;

    const std::vector<std::pair<std::string, std::vector<std::string>>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
};

}  // namespace mbocc
