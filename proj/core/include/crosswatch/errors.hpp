#pragma once

#include <stdexcept>
#include <string>

namespace crosswatch {

// Bad user input: malformed records, out-of-range config values, impossible
// scenario scripts. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble: missing files, unreadable/unwritable paths. Exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace crosswatch
