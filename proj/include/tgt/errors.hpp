#pragma once

#include <stdexcept>
#include <string>

namespace tgt {

// Malformed input text: interaction files, vocab files, config files.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid input that violates a data-level requirement
// (unknown behavior label, unknown user id, empty dataset, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: unknown key, unparsable value, invalid combination.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor shapes or out-of-range indices inside the engine.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (loss, gradients),
// or a failed numerical check.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tgt
