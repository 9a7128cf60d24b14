#pragma once
#include <stdexcept>
#include <string>

namespace trackloc {

// Bad configuration or CLI input. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing, unreadable, or malformed files (maps, LUTs, logs). Exit code 3.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A simulated run ended without completing its laps. Exit code 4.
struct DnfError : std::runtime_error {
  explicit DnfError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace trackloc
