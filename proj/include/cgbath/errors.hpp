// errors.hpp — Error types thrown across the library

#pragma once

#include <stdexcept>
#include <string>

namespace cgbath {

struct SpectralGapError : std::runtime_error {
    explicit SpectralGapError(const std::string& msg) : std::runtime_error(msg) {}
};

struct QuadratureError : std::runtime_error {
    explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridCoverageError : std::runtime_error {
    explicit GridCoverageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FactorizationError : std::runtime_error {
    explicit FactorizationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct JacobianSingularError : std::runtime_error {
    explicit JacobianSingularError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line, int column)
        : std::runtime_error(msg + " (line " + std::to_string(line) +
                             ", column " + std::to_string(column) + ")"),
          line(line), column(column) {}
    int line{0};
    int column{0};
};

} // namespace cgbath
