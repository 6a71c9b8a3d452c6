#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdrt {

/// Degenerate or otherwise unusable geometry (zero-area triangle, zero-length segment).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: scenario, material table, tracer settings, CLI values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line (or record) number it was raised for.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A metric that is undefined for its input (zero baseline spread, misaligned grids).
class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A link with an all-zero channel matrix; no beamforming pair exists.
class LinkOutage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qdrt
