// report.hpp — Machine-readable output: CSV (17 significant digits), JSON reports
// (values rounded to 12 digits), and the run manifest written next to every output.

#pragma once

#include "cgbath/model.hpp"
#include "cgbath/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace cgbath::report {

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// CSV values carry full precision for bit-reproducibility
struct CsvWriter {
    explicit CsvWriter(const std::string& path) : out(path) {
        if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    }

    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            out << (i ? "," : "") << cols[i];
        }
        out << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) {
            out << (i ? "," : "") << csv_double(vals[i]);
        }
        out << "\n";
    }
    std::ofstream out;
};

// JSON reports trade precision for readability
inline double round12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::stod(buf);
}

inline nlohmann::json spec_echo(const model::SystemSpec& spec) {
    nlohmann::json j;
    j["n"] = spec.n;
    j["d"] = spec.d;
    j["beta"] = spec.beta;
    j["potential"] =
        spec.potential_kind == model::PotentialKind::quadratic ? "quadratic" : "quartic";
    j["a"] = spec.pot_a;
    j["b"] = spec.pot_b;
    std::vector<double> dflat, cflat;
    for (int i = 0; i < spec.D.rows(); ++i)
        for (int k = 0; k < spec.D.cols(); ++k) dflat.push_back(spec.D(i, k));
    for (int i = 0; i < spec.C_mat.rows(); ++i)
        for (int k = 0; k < spec.C_mat.cols(); ++k) cflat.push_back(spec.C_mat(i, k));
    j["D"] = dflat;
    j["C"] = cflat;
    return j;
}

inline void write_manifest(const std::string& out_path, const std::string& subcommand,
                           const std::string& config_path, std::uint64_t seed,
                           const model::SystemSpec* spec) {
    nlohmann::json j;
    j["tool"] = "cgbath";
    j["version"] = cgbath::version();
    j["subcommand"] = subcommand;
    j["config"] = config_path;
    j["seed"] = seed;
    j["output"] = out_path;
    if (spec) j["spec"] = spec_echo(*spec);
    const auto now = std::chrono::system_clock::now();
    j["wall_clock_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    std::ofstream out(out_path + ".manifest.json");
    out << j.dump(2) << "\n";
}

} // namespace cgbath::report
