#include "mbocc/configfile.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mbocc {

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

KeyValueFile KeyValueFile::parse_string(const std::string& text) {
    KeyValueFile kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string eq;
        if (!(ls >> eq) || eq != "=")
            throw std::runtime_error("config: expected 'key = value' at line " +
                                     std::to_string(lineno));
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        kv.entries_.emplace_back(key, std::move(tokens));
    }
    return kv;
}

bool KeyValueFile::has(const std::string& key) const {
    for (const auto& [k, _] : entries_)
        if (k == key) return true;
    return false;
}

std::vector<std::string> KeyValueFile::get_tokens(const std::string& key) const {
    const std::vector<std::string>* last = nullptr;
    for (const auto& [k, v] : entries_)
        if (k == key) last = &v;
    if (!last) throw std::runtime_error("config: missing key " + key);
    return *last;
}

std::string KeyValueFile::get_str(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    auto t = get_tokens(key);
    if (t.empty()) throw std::runtime_error("config: empty value for " + key);
    return t[0];
}

double KeyValueFile::get_real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return std::stod(get_str(key, ""));
}

long KeyValueFile::get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    return std::stol(get_str(key, ""));
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string s = get_str(key, "");
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::runtime_error("config: bad boolean for " + key + ": " + s);
}

std::vector<std::vector<std::string>> KeyValueFile::all_occurrences(const std::string& key) const {
    std::vector<std::vector<std::string>> out;
    for (const auto& [k, v] : entries_)
        if (k == key) out.push_back(v);
    return out;
}

}  // namespace mbocc
