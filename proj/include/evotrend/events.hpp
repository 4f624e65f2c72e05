#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evotrend/errors.hpp"

namespace evotrend {

enum class EventKind : std::uint8_t { Birth, Death };

enum class DeathCause : std::uint8_t {
  None,
  Starvation,
  OldAge,
  Killed,
  Forced,  // schedule-driven removal in lockstep replays
  Culled,  // lowest-complexity replacement in fitness mode
};

inline std::string to_string(DeathCause c) {
  switch (c) {
    case DeathCause::None: return "";
    case DeathCause::Starvation: return "starvation";
    case DeathCause::OldAge: return "old_age";
    case DeathCause::Killed: return "killed";
    case DeathCause::Forced: return "forced";
    case DeathCause::Culled: return "culled";
  }
  return "";
}

inline DeathCause parse_death_cause(std::string_view s) {
  if (s.empty()) return DeathCause::None;
  if (s == "starvation") return DeathCause::Starvation;
  if (s == "old_age") return DeathCause::OldAge;
  if (s == "killed") return DeathCause::Killed;
  if (s == "forced") return DeathCause::Forced;
  if (s == "culled") return DeathCause::Culled;
  throw IoError("unknown death cause: " + std::string(s));
}

struct Event {
  int step = 0;
  EventKind kind = EventKind::Birth;
  std::uint32_t agent_id = 0;
  std::uint32_t parent1 = 0;  // births only
  std::uint32_t parent2 = 0;
  DeathCause cause = DeathCause::None;  // deaths only
};

// Append-only, step-ordered. Within a step deaths precede births; the world
// emits them in that order and the log enforces monotone steps.
class EventLog {
public:
  void push(Event e) {
    if (!events_.empty() && e.step < events_.back().step)
      throw IoError("event log steps must be non-decreasing");
    events_.push_back(e);
  }

  const std::vector<Event>& events() const { return events_; }
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }

private:
  std::vector<Event> events_;
};

}  // namespace evotrend
