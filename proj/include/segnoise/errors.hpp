#pragma once

#include <stdexcept>
#include <string>

namespace segnoise {

// Input data or configuration failed validation (bad JSON structure,
// dangling ids, codec violations, invalid config keys).
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure (unreadable input, unwritable output).
// The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace segnoise
