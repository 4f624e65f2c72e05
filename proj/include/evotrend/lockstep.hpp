#pragma once

#include <cstdint>
#include <vector>

#include "evotrend/artifacts.hpp"
#include "evotrend/events.hpp"

namespace evotrend {

// Step-indexed view of a recorded birth/death schedule. Only counts matter
// for a replay: parentage and mortality are re-randomized.
class LockstepSchedule {
public:
  LockstepSchedule(const EventLogFile& file)
      : steps_(file.steps),
        initial_population_(file.initial_population),
        source_header_(file.header) {
    deaths_.assign(static_cast<std::size_t>(steps_) + 1, 0);
    births_.assign(static_cast<std::size_t>(steps_) + 1, 0);
    for (const auto& e : file.log.events()) {
      if (e.step < 0 || e.step > steps_)
        throw ScheduleError("event outside recorded run at step " +
                            std::to_string(e.step));
      if (e.kind == EventKind::Death)
        deaths_[static_cast<std::size_t>(e.step)]++;
      else
        births_[static_cast<std::size_t>(e.step)]++;
      if (e.kind == EventKind::Death) total_deaths_++;
      else total_births_++;
    }
  }

  int steps() const { return steps_; }
  int initial_population() const { return initial_population_; }
  int deaths_at(int step) const { return deaths_[static_cast<std::size_t>(step)]; }
  int births_at(int step) const { return births_[static_cast<std::size_t>(step)]; }
  std::uint64_t total_deaths() const { return total_deaths_; }
  std::uint64_t total_births() const { return total_births_; }
  const ArtifactHeader& source_header() const { return source_header_; }

  // The paired run must share the config and actually be a driven run.
  void check_compatible(std::uint64_t config_hash, int run_steps,
                        int initial_population) const {
    if (source_header_.mode != RunMode::Driven)
      throw ScheduleError("schedule does not come from a driven run");
    if (source_header_.config_hash != config_hash)
      throw ScheduleError("schedule config hash mismatch");
    if (steps_ != run_steps)
      throw ScheduleError("schedule covers " + std::to_string(steps_) +
                          " steps, run wants " + std::to_string(run_steps));
    if (initial_population_ != initial_population)
      throw ScheduleError("schedule initial population mismatch");
  }

private:
  int steps_ = 0;
  int initial_population_ = 0;
  ArtifactHeader source_header_;
  std::vector<int> deaths_;
  std::vector<int> births_;
  std::uint64_t total_deaths_ = 0;
  std::uint64_t total_births_ = 0;
};

}  // namespace evotrend
