#pragma once

#include <stdexcept>
#include <string>

namespace embeff {

// Malformed or unreadable input (bad log line, bad scenario file).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid input violating an invariant (non-finite value,
// dimension mismatch, insufficient episode length).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration (unreachable target, invalid parameter).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace embeff
