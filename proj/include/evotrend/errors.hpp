#pragma once

#include <stdexcept>
#include <string>

namespace evotrend {

// Bad or unparseable run configuration (usage-level failure).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Filesystem / serialization failure while producing or reading artifacts.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A replay schedule that cannot be honored (wrong pairing, exhausted log,
// forced birth with fewer than two candidate parents, ...).
class ScheduleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Architecture decodes to something that cannot host the output behaviors.
class BrainBuildError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace evotrend
