#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fracpath {

inline constexpr const char* kLibraryVersion = "0.1.0";

// ASCII CSV, '.' decimal, 17 significant digits, LF endings: numerically
// bit-stable golden files
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& file, const std::string& header) {
        std::filesystem::create_directories(file.parent_path());
        out_.open(file, std::ios::binary);
        out_ << header << "\n";
    }
    void row(const std::vector<double>& values) {
        char buf[40];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << "\n";
    }
    void raw_row(const std::string& line) { out_ << line << "\n"; }

private:
    std::ofstream out_;
};

struct ResultRow {
    std::string name;
    double estimate = 0.0;
    double stderr_est = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::string criterion; // acceptance criterion id this verdict serves
};

struct ExperimentReport {
    std::string id;
    nlohmann::json config_echo;
    std::vector<ResultRow> rows;
    double wall_seconds = 0.0;

    void add(const std::string& name, double estimate, double stderr_est, double tolerance,
             bool pass, const std::string& criterion) {
        rows.push_back({name, estimate, stderr_est, tolerance, pass, criterion});
    }

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["id"] = id;
        j["library_version"] = kLibraryVersion;
        j["config"] = config_echo;
        j["wall_seconds"] = wall_seconds;
        j["pass"] = all_pass();
        j["results"] = nlohmann::json::array();
        for (const auto& r : rows)
            j["results"].push_back({{"name", r.name},
                                    {"estimate", r.estimate},
                                    {"stderr", r.stderr_est},
                                    {"tolerance", r.tolerance},
                                    {"pass", r.pass},
                                    {"criterion", r.criterion}});
        return j;
    }

    void write_json(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream out(dir / "report.json", std::ios::binary);
        out << to_json().dump(2) << "\n";
    }
};

} // namespace fracpath
