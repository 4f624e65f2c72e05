#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evotrend/errors.hpp"
#include "evotrend/hash.hpp"

namespace evotrend {

enum class RunMode { Driven, Lockstep, Fitness };

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Driven: return "driven";
    case RunMode::Lockstep: return "lockstep";
    case RunMode::Fitness: return "fitness";
  }
  return "driven";
}

inline RunMode parse_run_mode(std::string_view s) {
  if (s == "driven") return RunMode::Driven;
  if (s == "lockstep") return RunMode::Lockstep;
  if (s == "fitness") return RunMode::Fitness;
  throw ConfigError("unknown run mode: " + std::string(s));
}

struct WorldConfig {
  double width = 100.0;
  double height = 100.0;
  int initial_population = 30;
  int pop_min = 30;
  int pop_max = 120;
  double energy_max = 100.0;
  int max_age = 1000;
  double pressure_low = 1.0;
  double pressure_high = 3.0;
  int fecundity_age = 25;
  double mate_threshold = 0.55;
  double eat_threshold = 0.5;
  double attack_threshold = 0.7;
  double food_growth = 0.4;        // expected new items per step when empty
  double food_cap = 1200.0;        // total food energy ceiling
  double food_value = 30.0;        // energy per spawned item
  int food_init = 25;              // items placed before step 1
  double bite_size = 4.0;
  double attack_damage = 2.0;      // damage = activation * attack_damage
  double corpse_fraction = 0.75;   // kappa
  double speed_max = 1.0;
  double turn_max = 0.6;           // radians per step at full deflection
  double reach = 3.0;              // eat/attack radius, center distance
  double mate_range = 4.0;
  double agent_radius = 0.8;
  double food_radius = 0.8;
  double vision_range = 30.0;
  int sensor_rays = 8;
  double fov_degrees = 120.0;
  double cost_fixed = 0.02;
  double cost_neuron = 0.0005;
  double cost_synapse = 0.00002;
  double cost_move = 0.04;
  double cost_turn = 0.01;
  double cost_eat = 0.01;
  double cost_mate = 0.01;
  double cost_attack = 0.02;
  double parent_energy_min = 30.0;
  double birth_energy_fraction = 0.25;  // of energy_max, donated per parent
  int snapshot_interval = 500;
  double energy_floor_fraction = 0.01;  // lockstep floor, as fraction of e_max
};

struct GenomeConfig {
  int length = 1024;
  double mutation_rate_min = 0.001;
  double mutation_rate_max = 0.05;
  int crossover_points_min = 1;
  int crossover_points_max = 8;
  int groups_min = 1;
  int groups_max = 5;
  int excitatory_min = 5;
  int excitatory_max = 16;
  int inhibitory_min = 0;
  int inhibitory_max = 8;
  bool identity_ops = false;  // test hook: crossover/mutation become identity
};

// Deterministic founder genome values. Encoded through the gene map, so
// everything here is quantized to gene resolution.
struct SeedGenomeConfig {
  double mutation_rate = 0.01;
  int crossover_points = 3;
  int inhibitory_count = 1;
  double connection_density = 0.15;
  double topo_distortion = 0.25;
  double learning_rate = 0.05;
  double bias_magnitude = 0.2;
  double weight_max = 4.0;
  double bias_green_move = 0.8;
  double bias_red_turn = 0.8;
};

struct BrainConfig {
  double learning_rate_max = 0.2;
  double weight_max_min = 1.0;
  double weight_max_max = 8.0;
  double bias_magnitude_max = 2.0;
  double init_weight_fraction = 0.1;  // initial |w| <= fraction * w_max
};

struct ComplexityConfig {
  double jitter_sigma = 1e-6;
  int exact_limit = 12;
  int min_samples_floor = 20;  // trace valid iff T >= max(2n, floor)
};

struct AnalysisConfig {
  int bin_width = 1000;
  int histogram_bins = 40;
  double alpha = 0.05;
  bool two_tailed = false;
};

struct FitnessConfig {
  int interval = 100;   // replacement cadence, steps
  int window = 200;     // trailing activation window
};

struct RunConfig {
  WorldConfig world;
  GenomeConfig genome;
  SeedGenomeConfig seed_genome;
  BrainConfig brain;
  ComplexityConfig complexity;
  AnalysisConfig analysis;
  FitnessConfig fitness;
  int steps = 30000;
  std::uint64_t seed = 1;
  RunMode mode = RunMode::Driven;

  int input_count() const { return 3 * world.sensor_rays + 1; }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

struct ConfigKey {
  std::string name;
  bool hashed;  // excluded for identity-level fields (seed, mode)
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

inline double parse_double_value(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("bad numeric value for " + std::string(key) + ": " +
                      std::string(v));
  return out;
}

inline std::int64_t parse_int_value(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("bad integer value for " + std::string(key) + ": " +
                      std::string(v));
  return out;
}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto dbl = [&k](std::string name, auto ref) {
      k.push_back(ConfigKey{
          name, true,
          [ref](const RunConfig& c) {
            return format_double(ref(const_cast<RunConfig&>(c)));
          },
          [ref, name](RunConfig& c, std::string_view v) {
            ref(c) = parse_double_value(name, v);
          }});
    };
    auto integer = [&k](std::string name, auto ref) {
      k.push_back(ConfigKey{
          name, true,
          [ref](const RunConfig& c) {
            return std::to_string(ref(const_cast<RunConfig&>(c)));
          },
          [ref, name](RunConfig& c, std::string_view v) {
            ref(c) = static_cast<int>(parse_int_value(name, v));
          }});
    };
    auto boolean = [&k](std::string name, auto ref) {
      k.push_back(ConfigKey{
          name, true,
          [ref](const RunConfig& c) {
            return ref(const_cast<RunConfig&>(c)) ? std::string("true")
                                                  : std::string("false");
          },
          [ref, name](RunConfig& c, std::string_view v) {
            if (v == "true")
              ref(c) = true;
            else if (v == "false")
              ref(c) = false;
            else
              throw ConfigError("bad boolean for " + name + ": " +
                                std::string(v));
          }});
    };

    dbl("world.width", [](RunConfig& c) -> double& { return c.world.width; });
    dbl("world.height", [](RunConfig& c) -> double& { return c.world.height; });
    integer("world.initial_population",
            [](RunConfig& c) -> int& { return c.world.initial_population; });
    integer("world.pop_min", [](RunConfig& c) -> int& { return c.world.pop_min; });
    integer("world.pop_max", [](RunConfig& c) -> int& { return c.world.pop_max; });
    dbl("world.energy_max",
        [](RunConfig& c) -> double& { return c.world.energy_max; });
    integer("world.max_age", [](RunConfig& c) -> int& { return c.world.max_age; });
    dbl("world.pressure_low",
        [](RunConfig& c) -> double& { return c.world.pressure_low; });
    dbl("world.pressure_high",
        [](RunConfig& c) -> double& { return c.world.pressure_high; });
    integer("world.fecundity_age",
            [](RunConfig& c) -> int& { return c.world.fecundity_age; });
    dbl("world.mate_threshold",
        [](RunConfig& c) -> double& { return c.world.mate_threshold; });
    dbl("world.eat_threshold",
        [](RunConfig& c) -> double& { return c.world.eat_threshold; });
    dbl("world.attack_threshold",
        [](RunConfig& c) -> double& { return c.world.attack_threshold; });
    dbl("world.food_growth",
        [](RunConfig& c) -> double& { return c.world.food_growth; });
    dbl("world.food_cap", [](RunConfig& c) -> double& { return c.world.food_cap; });
    dbl("world.food_value",
        [](RunConfig& c) -> double& { return c.world.food_value; });
    integer("world.food_init", [](RunConfig& c) -> int& { return c.world.food_init; });
    dbl("world.bite_size", [](RunConfig& c) -> double& { return c.world.bite_size; });
    dbl("world.attack_damage",
        [](RunConfig& c) -> double& { return c.world.attack_damage; });
    dbl("world.corpse_fraction",
        [](RunConfig& c) -> double& { return c.world.corpse_fraction; });
    dbl("world.speed_max", [](RunConfig& c) -> double& { return c.world.speed_max; });
    dbl("world.turn_max", [](RunConfig& c) -> double& { return c.world.turn_max; });
    dbl("world.reach", [](RunConfig& c) -> double& { return c.world.reach; });
    dbl("world.mate_range",
        [](RunConfig& c) -> double& { return c.world.mate_range; });
    dbl("world.agent_radius",
        [](RunConfig& c) -> double& { return c.world.agent_radius; });
    dbl("world.food_radius",
        [](RunConfig& c) -> double& { return c.world.food_radius; });
    dbl("world.vision_range",
        [](RunConfig& c) -> double& { return c.world.vision_range; });
    integer("world.sensor_rays",
            [](RunConfig& c) -> int& { return c.world.sensor_rays; });
    dbl("world.fov_degrees",
        [](RunConfig& c) -> double& { return c.world.fov_degrees; });
    dbl("world.cost_fixed", [](RunConfig& c) -> double& { return c.world.cost_fixed; });
    dbl("world.cost_neuron",
        [](RunConfig& c) -> double& { return c.world.cost_neuron; });
    dbl("world.cost_synapse",
        [](RunConfig& c) -> double& { return c.world.cost_synapse; });
    dbl("world.cost_move", [](RunConfig& c) -> double& { return c.world.cost_move; });
    dbl("world.cost_turn", [](RunConfig& c) -> double& { return c.world.cost_turn; });
    dbl("world.cost_eat", [](RunConfig& c) -> double& { return c.world.cost_eat; });
    dbl("world.cost_mate", [](RunConfig& c) -> double& { return c.world.cost_mate; });
    dbl("world.cost_attack",
        [](RunConfig& c) -> double& { return c.world.cost_attack; });
    dbl("world.parent_energy_min",
        [](RunConfig& c) -> double& { return c.world.parent_energy_min; });
    dbl("world.birth_energy_fraction",
        [](RunConfig& c) -> double& { return c.world.birth_energy_fraction; });
    integer("world.snapshot_interval",
            [](RunConfig& c) -> int& { return c.world.snapshot_interval; });
    dbl("world.energy_floor_fraction",
        [](RunConfig& c) -> double& { return c.world.energy_floor_fraction; });

    integer("genome.length", [](RunConfig& c) -> int& { return c.genome.length; });
    dbl("genome.mutation_rate_min",
        [](RunConfig& c) -> double& { return c.genome.mutation_rate_min; });
    dbl("genome.mutation_rate_max",
        [](RunConfig& c) -> double& { return c.genome.mutation_rate_max; });
    integer("genome.crossover_points_min",
            [](RunConfig& c) -> int& { return c.genome.crossover_points_min; });
    integer("genome.crossover_points_max",
            [](RunConfig& c) -> int& { return c.genome.crossover_points_max; });
    integer("genome.groups_min",
            [](RunConfig& c) -> int& { return c.genome.groups_min; });
    integer("genome.groups_max",
            [](RunConfig& c) -> int& { return c.genome.groups_max; });
    integer("genome.excitatory_min",
            [](RunConfig& c) -> int& { return c.genome.excitatory_min; });
    integer("genome.excitatory_max",
            [](RunConfig& c) -> int& { return c.genome.excitatory_max; });
    integer("genome.inhibitory_min",
            [](RunConfig& c) -> int& { return c.genome.inhibitory_min; });
    integer("genome.inhibitory_max",
            [](RunConfig& c) -> int& { return c.genome.inhibitory_max; });
    boolean("genome.identity_ops",
            [](RunConfig& c) -> bool& { return c.genome.identity_ops; });

    dbl("seed.mutation_rate",
        [](RunConfig& c) -> double& { return c.seed_genome.mutation_rate; });
    integer("seed.crossover_points",
            [](RunConfig& c) -> int& { return c.seed_genome.crossover_points; });
    integer("seed.inhibitory_count",
            [](RunConfig& c) -> int& { return c.seed_genome.inhibitory_count; });
    dbl("seed.connection_density",
        [](RunConfig& c) -> double& { return c.seed_genome.connection_density; });
    dbl("seed.topo_distortion",
        [](RunConfig& c) -> double& { return c.seed_genome.topo_distortion; });
    dbl("seed.learning_rate",
        [](RunConfig& c) -> double& { return c.seed_genome.learning_rate; });
    dbl("seed.bias_magnitude",
        [](RunConfig& c) -> double& { return c.seed_genome.bias_magnitude; });
    dbl("seed.weight_max",
        [](RunConfig& c) -> double& { return c.seed_genome.weight_max; });
    dbl("seed.bias_green_move",
        [](RunConfig& c) -> double& { return c.seed_genome.bias_green_move; });
    dbl("seed.bias_red_turn",
        [](RunConfig& c) -> double& { return c.seed_genome.bias_red_turn; });

    dbl("brain.learning_rate_max",
        [](RunConfig& c) -> double& { return c.brain.learning_rate_max; });
    dbl("brain.weight_max_min",
        [](RunConfig& c) -> double& { return c.brain.weight_max_min; });
    dbl("brain.weight_max_max",
        [](RunConfig& c) -> double& { return c.brain.weight_max_max; });
    dbl("brain.bias_magnitude_max",
        [](RunConfig& c) -> double& { return c.brain.bias_magnitude_max; });
    dbl("brain.init_weight_fraction",
        [](RunConfig& c) -> double& { return c.brain.init_weight_fraction; });

    dbl("complexity.jitter_sigma",
        [](RunConfig& c) -> double& { return c.complexity.jitter_sigma; });
    integer("complexity.exact_limit",
            [](RunConfig& c) -> int& { return c.complexity.exact_limit; });
    integer("complexity.min_samples_floor",
            [](RunConfig& c) -> int& { return c.complexity.min_samples_floor; });

    integer("analysis.bin_width",
            [](RunConfig& c) -> int& { return c.analysis.bin_width; });
    integer("analysis.histogram_bins",
            [](RunConfig& c) -> int& { return c.analysis.histogram_bins; });
    dbl("analysis.alpha", [](RunConfig& c) -> double& { return c.analysis.alpha; });
    boolean("analysis.two_tailed",
            [](RunConfig& c) -> bool& { return c.analysis.two_tailed; });

    integer("fitness.interval",
            [](RunConfig& c) -> int& { return c.fitness.interval; });
    integer("fitness.window", [](RunConfig& c) -> int& { return c.fitness.window; });

    integer("run.steps", [](RunConfig& c) -> int& { return c.steps; });

    // Identity-level fields: part of the file format but not of the config
    // hash, so a driven run and its lockstep partner share one hash.
    k.push_back(ConfigKey{
        "run.seed", false,
        [](const RunConfig& c) { return std::to_string(c.seed); },
        [](RunConfig& c, std::string_view v) {
          c.seed = static_cast<std::uint64_t>(parse_int_value("run.seed", v));
        }});
    k.push_back(ConfigKey{
        "run.mode", false,
        [](const RunConfig& c) { return to_string(c.mode); },
        [](RunConfig& c, std::string_view v) { c.mode = parse_run_mode(v); }});

    std::sort(k.begin(), k.end(),
              [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
  const auto& keys = config_keys();
  auto it = std::lower_bound(
      keys.begin(), keys.end(), name,
      [](const ConfigKey& k, std::string_view n) { return k.name < n; });
  if (it == keys.end() || it->name != name) return nullptr;
  return &*it;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline void apply_config_line(RunConfig& cfg, std::string_view line, int lineno) {
  auto hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  line = detail::trim(line);
  if (line.empty()) return;
  auto eq = line.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
  auto key = detail::trim(line.substr(0, eq));
  auto value = detail::trim(line.substr(eq + 1));
  const auto* def = detail::find_key(key);
  if (def == nullptr)
    throw ConfigError("unknown config key: " + std::string(key));
  def->set(cfg, value);
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) apply_config_line(cfg, line, ++lineno);
  return cfg;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Canonical form: every key, sorted, one per line. Stable under reordering
// and comments in the source file.
inline std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& key : detail::config_keys()) {
    out += key.name;
    out += " = ";
    out += key.get(cfg);
    out += "\n";
  }
  return out;
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
  std::string hashed;
  for (const auto& key : detail::config_keys()) {
    if (!key.hashed) continue;
    hashed += key.name;
    hashed += "=";
    hashed += key.get(cfg);
    hashed += "\n";
  }
  return fnv1a64(hashed);
}

inline void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  const auto& w = cfg.world;
  const auto& g = cfg.genome;
  if (cfg.steps < 1) fail("run.steps must be >= 1");
  if (w.width <= 0 || w.height <= 0) fail("world extent must be positive");
  if (w.initial_population < 1) fail("world.initial_population must be >= 1");
  if (w.pop_min > w.pop_max) fail("world.pop_min must be <= world.pop_max");
  if (w.energy_max <= 0) fail("world.energy_max must be positive");
  if (w.max_age < 1) fail("world.max_age must be >= 1");
  if (w.pressure_low > w.pressure_high)
    fail("world.pressure_low must be <= world.pressure_high");
  for (double t : {w.mate_threshold, w.eat_threshold, w.attack_threshold})
    if (t <= 0 || t >= 1) fail("behavior thresholds must lie in (0, 1)");
  if (w.corpse_fraction < 0 || w.corpse_fraction > 1)
    fail("world.corpse_fraction must lie in [0, 1]");
  if (w.birth_energy_fraction <= 0 || w.birth_energy_fraction > 0.5)
    fail("world.birth_energy_fraction must lie in (0, 0.5]");
  if (w.parent_energy_min < w.birth_energy_fraction * w.energy_max)
    fail("world.parent_energy_min must cover the birth donation");
  if (w.sensor_rays < 1) fail("world.sensor_rays must be >= 1");
  if (w.fov_degrees <= 0 || w.fov_degrees > 360)
    fail("world.fov_degrees must lie in (0, 360]");
  if (w.snapshot_interval < 1) fail("world.snapshot_interval must be >= 1");
  if (w.energy_floor_fraction <= 0 || w.energy_floor_fraction >= 1)
    fail("world.energy_floor_fraction must lie in (0, 1)");
  if (g.length < 8) fail("genome.length too small");
  if (g.mutation_rate_min < 0 || g.mutation_rate_min > g.mutation_rate_max ||
      g.mutation_rate_max > 0.5)
    fail("genome mutation rate bounds invalid");
  if (g.crossover_points_min < 1 || g.crossover_points_min > g.crossover_points_max)
    fail("genome crossover point bounds invalid");
  if (g.groups_min < 1 || g.groups_min > g.groups_max || g.groups_max > 8)
    fail("genome group count bounds invalid");
  if (g.excitatory_min < 5)
    fail("genome.excitatory_min must be >= 5 (output behaviors)");
  if (g.excitatory_min > g.excitatory_max || g.inhibitory_min > g.inhibitory_max ||
      g.inhibitory_min < 0)
    fail("genome neuron count bounds invalid");
  if (cfg.brain.learning_rate_max < 0) fail("brain.learning_rate_max must be >= 0");
  if (cfg.brain.weight_max_min <= 0 ||
      cfg.brain.weight_max_min > cfg.brain.weight_max_max)
    fail("brain weight cap bounds invalid");
  if (cfg.brain.init_weight_fraction <= 0 || cfg.brain.init_weight_fraction > 1)
    fail("brain.init_weight_fraction must lie in (0, 1]");
  if (cfg.complexity.jitter_sigma < 0) fail("complexity.jitter_sigma must be >= 0");
  if (cfg.complexity.exact_limit < 1 || cfg.complexity.exact_limit > 16)
    fail("complexity.exact_limit must lie in [1, 16]");
  if (cfg.complexity.min_samples_floor < 2)
    fail("complexity.min_samples_floor must be >= 2");
  if (cfg.analysis.bin_width < 1) fail("analysis.bin_width must be >= 1");
  if (cfg.analysis.histogram_bins < 1) fail("analysis.histogram_bins must be >= 1");
  if (cfg.analysis.alpha <= 0 || cfg.analysis.alpha >= 0.5)
    fail("analysis.alpha must lie in (0, 0.5)");
  if (cfg.fitness.interval < 1) fail("fitness.interval must be >= 1");
  if (cfg.fitness.window < 1) fail("fitness.window must be >= 1");
}

}  // namespace evotrend
