#pragma once

#include <stdexcept>
#include <string>

namespace actracer {

// Bad command-line usage or malformed invocation. CLI exit code 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid input data or an operation contract violation (out-of-range
// value, exhausted budget, infeasible configuration). CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace actracer
