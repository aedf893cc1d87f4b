#pragma once

#include <stdexcept>
#include <string>

namespace qrobust {

// An iterative solver ran out of its iteration budget. what() carries the
// iteration trace summary.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario configuration could not be parsed or validated. what() names the
// offending field and, when read from a file, the line number.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qrobust
