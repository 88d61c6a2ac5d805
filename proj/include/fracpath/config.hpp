#pragma once

#include <cstdint>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracpath {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// INI-style experiment configuration with [experiment], [params], [output]
// sections. Duplicate keys are rejected; consumers mark the keys they read so
// dispatch can reject unknown ones. Seed precedence: FRACPATH_SEED environment
// variable > config > default 0.
class ExperimentConfig {
public:
    static ExperimentConfig parse(const std::string& text) {
        ExperimentConfig cfg;
        std::istringstream in(text);
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ConfigError("config line " + std::to_string(lineno)
                                      + ": unterminated section header");
                section = t.substr(1, t.size() - 2);
                if (section != "experiment" && section != "params" && section != "output")
                    throw ConfigError("config: unknown section [" + section + "]");
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno)
                                  + ": expected key = value");
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno)
                                  + ": key outside a section");
            std::string key = trim(t.substr(0, eq));
            std::string val = trim(t.substr(eq + 1));
            std::string path = "[" + section + "]." + key;
            if (cfg.values_.count(path))
                throw ConfigError("config: duplicate key " + path);
            cfg.values_[path] = val;
        }
        if (const char* env = std::getenv("FRACPATH_SEED"))
            cfg.values_["[experiment].seed"] = env; // env wins over the file
        return cfg;
    }

    static ExperimentConfig empty() {
        ExperimentConfig cfg;
        if (const char* env = std::getenv("FRACPATH_SEED"))
            cfg.values_["[experiment].seed"] = env;
        return cfg;
    }

    bool has(const std::string& path) const { return values_.count(path) > 0; }

    std::string get_string(const std::string& path, const std::string& fallback) const {
        touch(path);
        auto it = values_.find(path);
        return it == values_.end() ? fallback : it->second;
    }

    double get_real(const std::string& path, double fallback) const {
        touch(path);
        auto it = values_.find(path);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ConfigError("config: " + path + " is not a real number");
        }
    }

    double get_real_in(const std::string& path, double fallback, double lo, double hi) const {
        double v = get_real(path, fallback);
        if (!(v >= lo && v <= hi))
            throw ConfigError("config: " + path + " outside [" + std::to_string(lo) + ", "
                              + std::to_string(hi) + "]");
        return v;
    }

    std::uint64_t get_uint(const std::string& path, std::uint64_t fallback) const {
        touch(path);
        auto it = values_.find(path);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size() || v < 0) throw std::invalid_argument("bad");
            return static_cast<std::uint64_t>(v);
        } catch (...) {
            throw ConfigError("config: " + path + " is not a nonnegative integer");
        }
    }

    std::uint64_t seed() const { return get_uint("[experiment].seed", 0); }
    std::uint64_t replicas() const { return get_uint("[experiment].replicas", 10000); }
    std::string out_dir() const { return get_string("[output].dir", "out"); }

    // every key must have been consumed by the experiment
    void reject_unknown() const {
        for (const auto& [path, val] : values_)
            if (!touched_.count(path) && path != "[experiment].id")
                throw ConfigError("config: unknown key " + path);
    }

    void override_value(const std::string& path, const std::string& value) {
        values_[path] = value;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
    void touch(const std::string& path) const { touched_.insert(path); }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> touched_;
};

} // namespace fracpath
