#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "evotrend/artifacts.hpp"
#include "evotrend/complexity.hpp"
#include "evotrend/config.hpp"
#include "evotrend/lockstep.hpp"
#include "evotrend/world.hpp"

namespace evotrend {

struct RunSummary {
  std::uint64_t births = 0;
  std::uint64_t deaths = 0;
  std::uint64_t crossover_ops = 0;
  std::uint64_t mutation_ops = 0;
  std::uint64_t stillborn = 0;
  std::uint64_t traces_written = 0;
  int final_population = 0;
  double wall_seconds = 0.0;
  std::uint64_t schedule_hash = 0;  // lockstep: hash of the consumed schedule
};

namespace detail {

inline TraceRecording make_recording(const Agent& a, int death_step) {
  TraceRecording rec;
  rec.agent_id = a.id;
  rec.birth_step = static_cast<std::uint32_t>(a.birth_step);
  rec.death_step = static_cast<std::uint32_t>(death_step);
  rec.n_total = static_cast<std::uint16_t>(a.brain.neuron_count());
  rec.n_input = static_cast<std::uint16_t>(a.brain.input_count);
  rec.is_input.resize(rec.n_total);
  for (std::uint16_t c = 0; c < rec.n_total; ++c)
    rec.is_input[c] = a.brain.roles[c] == NeuronRole::Input ? 1 : 0;
  const auto n = static_cast<std::size_t>(rec.n_total);
  const std::size_t rows = n == 0 ? 0 : a.trace.size() / n;
  if (rows != static_cast<std::size_t>(death_step - a.birth_step) ||
      rows * n != a.trace.size())
    throw IoError("trace row count does not match lifespan for agent " +
                  std::to_string(a.id));
  rec.data.resize(static_cast<Eigen::Index>(rows), rec.n_total);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j)
      rec.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          a.trace[i * n + j];
  return rec;
}

inline void write_run_info(const RunPaths& paths, const ArtifactHeader& h,
                           const RunSummary& s) {
  nlohmann::json j;
  j["config_hash"] = to_hex(h.config_hash);
  j["seed"] = h.seed;
  j["mode"] = to_string(h.mode);
  j["version"] = h.version;
  j["births"] = s.births;
  j["deaths"] = s.deaths;
  j["crossover_ops"] = s.crossover_ops;
  j["mutation_ops"] = s.mutation_ops;
  j["stillborn"] = s.stillborn;
  j["traces_written"] = s.traces_written;
  j["final_population"] = s.final_population;
  j["wall_seconds"] = s.wall_seconds;  // timestamps live only in this sidecar
  if (h.mode == RunMode::Lockstep)
    j["schedule_hash"] = to_hex(s.schedule_hash);
  std::ofstream out(paths.run_info(), std::ios::binary);
  if (!out) throw IoError("cannot write run_info.json");
  out << j.dump(2) << "\n";
}

inline void write_static_artifacts(const RunPaths& paths, const RunConfig& cfg,
                                   const World& world) {
  std::ofstream cfg_out(paths.config(), std::ios::binary);
  if (!cfg_out) throw IoError("cannot write config copy");
  cfg_out << canonical_config(cfg);
  write_gene_map_csv(paths.gene_map(), world.gene_map());
}

class SnapshotCadence {
public:
  SnapshotCadence(SnapshotWriter& writer, const World& world, int interval,
                  int total_steps)
      : writer_(writer), world_(world), interval_(interval), total_(total_steps) {
    take(0);
  }

  void maybe_take(int t) {
    if (t % interval_ == 0 || t == total_) take(t);
  }

private:
  void take(int t) {
    if (t == last_) return;
    writer_.add(t, world_.living_genomes());
    last_ = t;
  }

  SnapshotWriter& writer_;
  const World& world_;
  int interval_;
  int total_;
  int last_ = -1;
};

}  // namespace detail

// Natural-selection run: event log, per-agent traces, periodic genome
// snapshots, population series.
inline RunSummary run_driven(const RunConfig& cfg, std::uint64_t seed,
                             const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunPaths paths{out_dir};
  fs::create_directories(paths.traces());
  ArtifactHeader header{config_hash(cfg), seed, RunMode::Driven,
                        kArtifactVersion};

  World world(cfg, RunMode::Driven, seed);
  RunSummary summary;
  world.on_death = [&](const Agent& a, int death_step) {
    write_trace_file(paths.traces() / trace_filename(a.id), header,
                     detail::make_recording(a, death_step));
    ++summary.traces_written;
  };
  detail::write_static_artifacts(paths, cfg, world);

  SnapshotWriter snapshots(paths.snapshots(), header,
                           static_cast<std::size_t>(cfg.genome.length));
  detail::SnapshotCadence cadence(snapshots, world, cfg.world.snapshot_interval,
                                  cfg.steps);
  for (int t = 1; t <= cfg.steps; ++t) {
    world.step();
    cadence.maybe_take(t);
  }
  snapshots.close();

  write_event_log(paths.events(), header, cfg.steps,
                  cfg.world.initial_population, world.event_log());
  write_population_csv(paths.population(), header, world.population_series());

  summary.births = world.births_total();
  summary.deaths = world.deaths_total();
  summary.crossover_ops = world.crossover_ops();
  summary.mutation_ops = world.mutation_ops();
  summary.stillborn = world.stillborn_total();
  summary.final_population = world.population();
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail::write_run_info(paths, header, summary);
  write_done_marker(paths, header);
  return summary;
}

// Passive replay: same initial conditions as the paired driven run, natural
// births and deaths disabled, the recorded schedule enforced with random
// parentage and mortality.
inline RunSummary run_lockstep(const RunConfig& cfg, std::uint64_t replay_seed,
                               const fs::path& schedule_path,
                               const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const EventLogFile schedule_file = read_event_log(schedule_path);
  const LockstepSchedule schedule(schedule_file);
  schedule.check_compatible(config_hash(cfg), cfg.steps,
                            cfg.world.initial_population);

  RunPaths paths{out_dir};
  fs::create_directories(paths.traces());
  ArtifactHeader header{config_hash(cfg), replay_seed, RunMode::Lockstep,
                        kArtifactVersion};

  // The paired run's seed reproduces the initial world; the replay stream
  // takes over from there.
  World world(cfg, RunMode::Lockstep, schedule_file.header.seed);
  world.reseed(replay_seed);

  RunSummary summary;
  summary.schedule_hash = file_hash(schedule_path);
  world.on_death = [&](const Agent& a, int death_step) {
    write_trace_file(paths.traces() / trace_filename(a.id), header,
                     detail::make_recording(a, death_step));
    ++summary.traces_written;
  };
  detail::write_static_artifacts(paths, cfg, world);

  SnapshotWriter snapshots(paths.snapshots(), header,
                           static_cast<std::size_t>(cfg.genome.length));
  detail::SnapshotCadence cadence(snapshots, world, cfg.world.snapshot_interval,
                                  cfg.steps);
  for (int t = 1; t <= cfg.steps; ++t) {
    world.step_forced(schedule.deaths_at(t), schedule.births_at(t));
    cadence.maybe_take(t);
  }
  snapshots.close();

  write_event_log(paths.events(), header, cfg.steps,
                  cfg.world.initial_population, world.event_log());
  write_population_csv(paths.population(), header, world.population_series());

  summary.births = world.births_total();
  summary.deaths = world.deaths_total();
  summary.crossover_ops = world.crossover_ops();
  summary.mutation_ops = world.mutation_ops();
  summary.stillborn = world.stillborn_total();
  summary.final_population = world.population();
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail::write_run_info(paths, header, summary);
  write_done_marker(paths, header);
  return summary;
}

namespace detail {

// Trailing-window complexity of a living agent, processing neurons only.
inline std::optional<double> window_complexity(const Agent& a, int window,
                                               const ComplexityConfig& cfg,
                                               int step) {
  const auto n = static_cast<std::size_t>(a.brain.neuron_count());
  if (n == 0 || a.trace.empty()) return std::nullopt;
  const std::size_t rows_total = a.trace.size() / n;
  const auto rows = static_cast<std::size_t>(
      std::min<std::size_t>(rows_total, static_cast<std::size_t>(window)));
  TraceRecording rec;
  rec.agent_id = a.id;
  rec.birth_step = 0;
  rec.death_step = static_cast<std::uint32_t>(rows);
  rec.n_total = static_cast<std::uint16_t>(n);
  rec.n_input = static_cast<std::uint16_t>(a.brain.input_count);
  rec.is_input.resize(rec.n_total);
  for (std::uint16_t c = 0; c < rec.n_total; ++c)
    rec.is_input[c] = a.brain.roles[c] == NeuronRole::Input ? 1 : 0;
  rec.data.resize(static_cast<Eigen::Index>(rows), rec.n_total);
  const std::size_t first = rows_total - rows;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j)
      rec.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          a.trace[(first + i) * n + j];
  std::uint64_t jitter_seed = fnv1a64("fitness-window");
  jitter_seed = fnv1a64_mix(jitter_seed, a.id);
  jitter_seed = fnv1a64_mix(jitter_seed, static_cast<std::uint64_t>(step));
  ActivationTrace trace =
      build_trace(rec, NeuronFilter::Processing, cfg.jitter_sigma, jitter_seed,
                  cfg.min_samples_floor);
  if (!trace.valid) return std::nullopt;
  const double c = complexity_approx_bits(covariance_from_trace(trace));
  if (!std::isfinite(c) || c < -1e-6) return std::nullopt;
  return c;
}

inline std::optional<Replacement> fitness_decision(World& world,
                                                   const RunConfig& cfg,
                                                   int step) {
  if (world.population() < 3) return std::nullopt;
  struct Scored {
    std::uint32_t id;
    double c;
  };
  std::vector<Scored> scored;
  for (const auto& a : world.agents()) {
    const auto c =
        window_complexity(a, cfg.fitness.window, cfg.complexity, step);
    if (c) scored.push_back(Scored{a.id, *c});
  }
  if (scored.size() < 3) return std::nullopt;  // victim plus two parents
  std::size_t victim = 0;
  for (std::size_t i = 1; i < scored.size(); ++i)
    if (scored[i].c < scored[victim].c) victim = i;
  Replacement r;
  r.victim_id = scored[victim].id;
  // Parents drawn with probability proportional to window complexity.
  std::vector<Scored> pool;
  for (std::size_t i = 0; i < scored.size(); ++i)
    if (i != victim) pool.push_back(scored[i]);
  auto draw = [&](std::optional<std::uint32_t> exclude) {
    double total = 0.0;
    for (const auto& s : pool)
      if (!exclude || s.id != *exclude) total += std::max(s.c, 1e-9);
    double u = world.rng().uniform() * total;
    for (const auto& s : pool) {
      if (exclude && s.id == *exclude) continue;
      u -= std::max(s.c, 1e-9);
      if (u <= 0.0) return s.id;
    }
    return pool.back().id;
  };
  r.parent1_id = draw(std::nullopt);
  r.parent2_id = draw(r.parent1_id);
  return r;
}

}  // namespace detail

// Driven-style run with periodic replacement of the lowest-complexity agent
// by an offspring of complexity-weighted parents. Natural births and deaths
// stay active throughout.
inline RunSummary run_fitness(const RunConfig& cfg, std::uint64_t seed,
                              const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunPaths paths{out_dir};
  fs::create_directories(paths.traces());
  ArtifactHeader header{config_hash(cfg), seed, RunMode::Fitness,
                        kArtifactVersion};

  World world(cfg, RunMode::Fitness, seed);
  RunSummary summary;
  world.on_death = [&](const Agent& a, int death_step) {
    write_trace_file(paths.traces() / trace_filename(a.id), header,
                     detail::make_recording(a, death_step));
    ++summary.traces_written;
  };
  detail::write_static_artifacts(paths, cfg, world);

  SnapshotWriter snapshots(paths.snapshots(), header,
                           static_cast<std::size_t>(cfg.genome.length));
  detail::SnapshotCadence cadence(snapshots, world, cfg.world.snapshot_interval,
                                  cfg.steps);
  for (int t = 1; t <= cfg.steps; ++t) {
    std::optional<Replacement> replacement;
    if (t % cfg.fitness.interval == 0)
      replacement = detail::fitness_decision(world, cfg, t);
    world.step_with_replacement(replacement);
    cadence.maybe_take(t);
  }
  snapshots.close();

  write_event_log(paths.events(), header, cfg.steps,
                  cfg.world.initial_population, world.event_log());
  write_population_csv(paths.population(), header, world.population_series());

  summary.births = world.births_total();
  summary.deaths = world.deaths_total();
  summary.crossover_ops = world.crossover_ops();
  summary.mutation_ops = world.mutation_ops();
  summary.stillborn = world.stillborn_total();
  summary.final_population = world.population();
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail::write_run_info(paths, header, summary);
  write_done_marker(paths, header);
  return summary;
}

// Paired run set: pair i runs driven with base_seed + i, then lockstep with
// base_seed + i + 1e6 against the recorded schedule. Completed runs are
// skipped on resume; a failed driven run marks its pair failed and the rest
// proceed.
inline constexpr std::uint64_t kLockstepSeedOffset = 1000000;

inline RunSetManifest run_pairset(const RunConfig& cfg, int n_pairs,
                                  std::uint64_t base_seed,
                                  const fs::path& out_root, int jobs = 1) {
  if (n_pairs < 1) throw ConfigError("pairset needs at least one pair");
  fs::create_directories(out_root);
  const fs::path manifest_path = out_root / "manifest.json";
  const std::uint64_t hash = config_hash(cfg);

  RunSetManifest manifest;
  if (fs::exists(manifest_path)) {
    manifest = read_manifest(manifest_path);
    if (manifest.config_hash != hash)
      throw ConfigError("existing manifest was built from a different config");
    if (manifest.n_pairs != n_pairs || manifest.base_seed != base_seed)
      throw ConfigError("existing manifest disagrees on pairs or base seed");
  } else {
    manifest.config_hash = hash;
    manifest.base_seed = base_seed;
    manifest.n_pairs = n_pairs;
    for (int i = 0; i < n_pairs; ++i) {
      PairEntry p;
      p.index = i;
      p.driven_seed = base_seed + static_cast<std::uint64_t>(i);
      p.lockstep_seed = base_seed + static_cast<std::uint64_t>(i) + kLockstepSeedOffset;
      char name[32];
      std::snprintf(name, sizeof name, "pair_%02d", i);
      p.driven_dir = std::string(name) + "/driven";
      p.lockstep_dir = std::string(name) + "/lockstep";
      manifest.pairs.push_back(std::move(p));
    }
    write_manifest(manifest_path, manifest);
  }

  std::mutex manifest_mutex;
  auto update = [&](int index, auto&& fn) {
    std::lock_guard<std::mutex> lock(manifest_mutex);
    fn(manifest.pairs[static_cast<std::size_t>(index)]);
    write_manifest(manifest_path, manifest);
  };

  auto run_pair = [&](int i) {
    PairEntry entry;
    {
      std::lock_guard<std::mutex> lock(manifest_mutex);
      entry = manifest.pairs[static_cast<std::size_t>(i)];
    }
    const fs::path driven_dir = out_root / entry.driven_dir;
    const fs::path lockstep_dir = out_root / entry.lockstep_dir;
    try {
      RunConfig driven_cfg = cfg;
      driven_cfg.mode = RunMode::Driven;
      driven_cfg.seed = entry.driven_seed;
      if (!run_complete(RunPaths{driven_dir}, hash, entry.driven_seed,
                        RunMode::Driven))
        run_driven(driven_cfg, entry.driven_seed, driven_dir);
      const std::string schedule_hash =
          to_hex(file_hash(RunPaths{driven_dir}.events()));
      update(i, [&](PairEntry& p) {
        p.driven_done = true;
        p.schedule_hash = schedule_hash;
      });

      RunConfig lockstep_cfg = cfg;
      lockstep_cfg.mode = RunMode::Lockstep;
      lockstep_cfg.seed = entry.lockstep_seed;
      if (!run_complete(RunPaths{lockstep_dir}, hash, entry.lockstep_seed,
                        RunMode::Lockstep))
        run_lockstep(lockstep_cfg, entry.lockstep_seed,
                     RunPaths{driven_dir}.events(), lockstep_dir);
      update(i, [&](PairEntry& p) { p.lockstep_done = true; });
    } catch (const std::exception&) {
      update(i, [&](PairEntry& p) { p.failed = true; });
    }
  };

  if (jobs <= 1) {
    for (int i = 0; i < n_pairs; ++i) run_pair(i);
  } else {
    std::vector<std::thread> workers;
    std::mutex next_mutex;
    int next = 0;
    for (int w = 0; w < std::min(jobs, n_pairs); ++w) {
      workers.emplace_back([&] {
        while (true) {
          int i;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= n_pairs) return;
            i = next++;
          }
          run_pair(i);
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  return manifest;
}

}  // namespace evotrend
