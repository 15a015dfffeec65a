#pragma once

#include <stdexcept>
#include <string>

namespace evanon {

// Error categories map onto CLI exit codes: validation -> 1, I/O -> 2,
// computation -> 3.

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ComputationError : std::runtime_error {
  explicit ComputationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace evanon
