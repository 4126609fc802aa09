#pragma once

#include <stdexcept>
#include <string>

namespace adgcl {

// Base for all library errors. The CLI maps subclasses to exit codes:
// usage/config problems -> 2, IO/checkpoint problems -> 3, training
// divergence -> 4. Anything else escaping main is a bug (uncaught -> abort).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values passed to library operations.
class ParamError : public Error {
public:
    using Error::Error;
};

// Invalid or unknown configuration keys/values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File access or parse failures. Parse errors carry the 1-based line number.
class IoError : public Error {
public:
    using Error::Error;
    IoError(const std::string& path, std::size_t line, const std::string& what_part)
        : Error(path + ":" + std::to_string(line) + ": " + what_part) {}
};

// Unreadable, truncated, or version-mismatched model checkpoints.
class CheckpointError : public Error {
public:
    using Error::Error;
};

// Non-finite loss or other training divergence.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Metric undefined for the given inputs (e.g. ranking with a single class).
class MetricError : public Error {
public:
    using Error::Error;
};

}  // namespace adgcl
