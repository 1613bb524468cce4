#pragma once

#include <stdexcept>
#include <string>

namespace deepmvc {

// Error taxonomy. Each class maps to one failure mode so callers (and the
// CLI exit-code mapping) can tell misuse apart from bad data or bad runs.

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error("dimension error: " + msg) {}
};

struct ContractViolation : std::runtime_error {
    explicit ContractViolation(const std::string& msg) : std::runtime_error("contract violation: " + msg) {}
};

struct DegenerateInputError : std::runtime_error {
    explicit DegenerateInputError(const std::string& msg) : std::runtime_error("degenerate input: " + msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct GenerationError : std::runtime_error {
    explicit GenerationError(const std::string& msg) : std::runtime_error("generation error: " + msg) {}
};

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error("training error: " + msg) {}
};

} // namespace deepmvc
