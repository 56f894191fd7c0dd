#pragma once
#include <stdexcept>
#include <string>

namespace qwell {

// configuration file problems; `line` is 0 when not tied to a specific line
struct ConfigError : std::runtime_error {
  int line;
  explicit ConfigError(const std::string& msg, int line_ = 0)
      : std::runtime_error(msg), line(line_) {}
};

// fewer bound single-particle states than requested particles
struct UnboundError : std::runtime_error {
  int n;
  explicit UnboundError(int n_)
      : std::runtime_error("UNBOUND(" + std::to_string(n_) +
                           "): fewer bound states than particles"),
        n(n_) {}
};

struct NonConvergedError : std::runtime_error {
  double residual;
  explicit NonConvergedError(const std::string& what_, double residual_)
      : std::runtime_error(what_), residual(residual_) {}
};

struct BracketError : std::runtime_error {
  double lo, hi;
  BracketError(const std::string& what_, double lo_, double hi_)
      : std::runtime_error(what_), lo(lo_), hi(hi_) {}
};

// DMC walker population left the sane range
struct PopulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionCapError : std::length_error {
  using std::length_error::length_error;
};

}  // namespace qwell
