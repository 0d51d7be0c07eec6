// config.hpp — Key-value text config for SystemSpec.
//
// Schema (one `key = value` per line, '#' starts a comment):
//   n         positive integer, System A position dimension
//   d         positive integer, observable bath dimension
//   beta      positive real, inverse temperature
//   potential quadratic | quartic
//   a, b      potential coefficients: V(q) = (a/2)|q|^2 + (b/4) sum_i q_i^4
//   D         d*d reals, row-major          (general bath generator)
//   theta1 theta2 varsigma                   (running-example bath, d = 3;
//                                             mutually exclusive with D)
//   C         d*n reals, row-major coupling coordinates

#pragma once

#include "cgbath/dilation.hpp"
#include "cgbath/errors.hpp"
#include "cgbath/model.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cgbath::config {

struct ParsedConfig {
    model::SystemSpec spec;
    bool running_example_bath{false};
    double theta1{0}, theta2{0}, varsigma{0};

    dilation::DilationBasis basis(double y_max = -1.0) const {
        if (running_example_bath) {
            return dilation::make_running_example_basis(theta1, theta2, varsigma, y_max);
        }
        return dilation::make_general_basis(spec.D, y_max);
    }
};

namespace detail {

struct RawEntry {
    std::string value;
    int line{0};
    int column{0};
};

inline std::vector<double> parse_numbers(const RawEntry& e, const std::string& key,
                                         std::size_t expected) {
    std::vector<double> out;
    std::istringstream iss(e.value);
    std::string tok;
    int col = e.column;
    while (iss >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' has non-numeric token '" + tok + "'",
                              e.line, col);
        }
        col += static_cast<int>(tok.size()) + 1;
    }
    if (expected != 0 && out.size() != expected) {
        throw ConfigError("config: key '" + key + "' expects " + std::to_string(expected) +
                              " numbers, got " + std::to_string(out.size()),
                          e.line, e.column);
    }
    return out;
}

} // namespace detail

inline ParsedConfig parse_config_text(const std::string& text) {
    std::map<std::string, detail::RawEntry> entries;
    std::istringstream stream(text);
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto notspace = line.find_first_not_of(" \t\r");
        if (notspace == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected 'key = value'", lineno,
                              static_cast<int>(notspace) + 1);
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) {
            throw ConfigError("config: empty key", lineno, 1);
        }
        if (entries.count(key)) {
            throw ConfigError("config: duplicate key '" + key + "'", lineno,
                              static_cast<int>(notspace) + 1);
        }
        entries[key] = {value, lineno, static_cast<int>(eq) + 2};
    }

    static const char* known[] = {"n", "d",      "beta",   "potential", "a",
                                  "b", "theta1", "theta2", "varsigma",  "D",
                                  "C"};
    for (const auto& [key, entry] : entries) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("config: unknown key '" + key + "'", entry.line, 1);
    }

    const auto require = [&](const std::string& key) -> const detail::RawEntry& {
        auto it = entries.find(key);
        if (it == entries.end()) {
            throw ConfigError("config: missing required key '" + key + "'", 0, 0);
        }
        return it->second;
    };

    ParsedConfig out;
    auto& spec = out.spec;
    spec.n = static_cast<int>(detail::parse_numbers(require("n"), "n", 1)[0]);
    spec.d = static_cast<int>(detail::parse_numbers(require("d"), "d", 1)[0]);
    spec.beta = detail::parse_numbers(require("beta"), "beta", 1)[0];
    if (spec.n <= 0 || spec.d <= 0 || spec.beta <= 0) {
        throw ConfigError("config: n, d, beta must be positive", 0, 0);
    }

    const auto& pot = require("potential");
    double a = 1.0, b = 1.0;
    if (entries.count("a")) a = detail::parse_numbers(entries["a"], "a", 1)[0];
    if (entries.count("b")) b = detail::parse_numbers(entries["b"], "b", 1)[0];
    if (pot.value == "quadratic") {
        model::set_potential(spec, model::PotentialKind::quadratic, a);
    } else if (pot.value == "quartic") {
        model::set_potential(spec, model::PotentialKind::quartic, a, b);
    } else {
        throw ConfigError("config: potential must be 'quadratic' or 'quartic', got '" +
                              pot.value + "'",
                          pot.line, pot.column);
    }

    const bool has_thetas = entries.count("theta1") || entries.count("theta2") ||
                            entries.count("varsigma");
    if (has_thetas && entries.count("D")) {
        throw ConfigError("config: give either D or theta1/theta2/varsigma, not both",
                          entries["D"].line, 1);
    }
    if (has_thetas) {
        if (spec.d != 3) {
            throw ConfigError("config: running-example bath requires d = 3",
                              entries["theta1"].line, 1);
        }
        out.running_example_bath = true;
        out.theta1 = detail::parse_numbers(require("theta1"), "theta1", 1)[0];
        out.theta2 = detail::parse_numbers(require("theta2"), "theta2", 1)[0];
        out.varsigma = detail::parse_numbers(require("varsigma"), "varsigma", 1)[0];
        spec.D = model::running_example_D(out.theta1, out.theta2, out.varsigma);
    } else {
        const auto nums = detail::parse_numbers(require("D"), "D",
                                                static_cast<std::size_t>(spec.d) * spec.d);
        spec.D = Mat(spec.d, spec.d);
        for (int i = 0; i < spec.d; ++i)
            for (int j = 0; j < spec.d; ++j) spec.D(i, j) = nums[i * spec.d + j];
    }

    const auto cn = detail::parse_numbers(require("C"), "C",
                                          static_cast<std::size_t>(spec.d) * spec.n);
    spec.C_mat = Mat(spec.d, spec.n);
    for (int i = 0; i < spec.d; ++i)
        for (int j = 0; j < spec.n; ++j) spec.C_mat(i, j) = cn[i * spec.n + j];

    return out;
}

inline ParsedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'", 0, 0);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace cgbath::config
