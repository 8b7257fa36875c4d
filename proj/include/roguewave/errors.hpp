#pragma once

#include <stdexcept>
#include <string>

namespace roguewave {

/// Invalid parameters in a configuration or spec.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mode index outside the retained band (or the excluded zero mode).
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Requested time outside a stored trajectory.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Time integration produced a non-finite or runaway state.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace roguewave
