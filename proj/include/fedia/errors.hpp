#pragma once

#include <stdexcept>
#include <string>

namespace fedia {

// Invalid or out-of-range configuration (bad key, schedule outside (0,1], ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

// Tensor/grid dimension mismatch.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

// Synthetic data generation failure (e.g. lesion placement exhausted retries).
struct GenerationError : std::runtime_error {
    explicit GenerationError(const std::string& msg)
        : std::runtime_error("generation error: " + msg) {}
};

// Parameter aggregation failure (empty client list, weights off the simplex).
struct AggregationError : std::runtime_error {
    explicit AggregationError(const std::string& msg)
        : std::runtime_error("aggregation error: " + msg) {}
};

// Optimizer update failure (non-finite gradients).
struct UpdateError : std::runtime_error {
    explicit UpdateError(const std::string& msg) : std::runtime_error("update error: " + msg) {}
};

// Federated run failure (all clients aborted, inconsistent state).
struct RunError : std::runtime_error {
    explicit RunError(const std::string& msg) : std::runtime_error("run error: " + msg) {}
};

// Malformed serialized artifact (bad magic, truncated payload).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

}  // namespace fedia
