#pragma once

#include <stdexcept>
#include <string>

namespace fracou {

// Configuration/schema violations (CLI exit code 2).
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Resource budget exceeded (CLI exit code 4).
struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fracou
