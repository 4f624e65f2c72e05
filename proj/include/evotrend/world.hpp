#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "evotrend/brain.hpp"
#include "evotrend/config.hpp"
#include "evotrend/events.hpp"
#include "evotrend/genome.hpp"
#include "evotrend/random.hpp"

namespace evotrend {

struct FoodItem {
  double x = 0.0;
  double y = 0.0;
  double energy = 0.0;
};

struct Agent {
  std::uint32_t id = 0;
  Genome genome;
  Brain brain;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double energy = 0.0;
  int birth_step = 0;
  int age = 0;
  std::vector<float> trace;  // row-major, one row of activations per step
  bool killed_this_step = false;
  bool dying = false;
  DeathCause pending_cause = DeathCause::None;

  int neuron_count() const { return brain.neuron_count(); }
};

// Per-step energy flow accounting. Eating and birth donations move energy
// between pools and do not appear; these are the flows that enter or leave
// the closed system.
struct EnergyLedger {
  double depletion = 0.0;      // metabolic cost actually applied
  double attack_drain = 0.0;   // energy dissipated by attacks
  double corpse_lost = 0.0;    // (1 - kappa) share of corpse energy
  double regrowth = 0.0;       // food energy added
  double floor_injected = 0.0; // lockstep floor top-ups (always 0 in driven)
};

struct PopulationRow {
  int step = 0;
  int population = 0;
  int births = 0;
  int deaths = 0;
};

inline double population_pressure(int pop, const WorldConfig& cfg) {
  if (cfg.pop_max == cfg.pop_min)
    return pop >= cfg.pop_max ? cfg.pressure_high : cfg.pressure_low;
  const double f = (static_cast<double>(pop) - cfg.pop_min) /
                   (static_cast<double>(cfg.pop_max) - cfg.pop_min);
  return cfg.pressure_low +
         (cfg.pressure_high - cfg.pressure_low) * std::clamp(f, 0.0, 1.0);
}

// Scheduled replacement for fitness mode: victim dies, parents breed.
struct Replacement {
  std::uint32_t victim_id = 0;
  std::uint32_t parent1_id = 0;
  std::uint32_t parent2_id = 0;
};

class World {
public:
  World(const RunConfig& cfg, RunMode mode, std::uint64_t seed)
      : cfg_(cfg),
        mode_(mode),
        rng_(seed),
        gene_map_(build_gene_map(cfg.genome, cfg.brain)),
        seed_genome_(make_seed_genome(gene_map_, cfg.genome, cfg.seed_genome)) {
    natural_deaths_ = mode != RunMode::Lockstep;
    natural_births_ = mode != RunMode::Lockstep;
    energy_floor_ = mode == RunMode::Lockstep
                        ? cfg.world.energy_floor_fraction * cfg.world.energy_max
                        : 0.0;
    init_world();
  }

  // Lockstep replays reuse the paired run's seed for identical initial
  // conditions, then continue on their own stream.
  void reseed(std::uint64_t seed) { rng_ = RandomStream(seed); }

  void step() { step_impl(0, 0, std::nullopt); }

  void step_forced(int deaths, int births) { step_impl(deaths, births, std::nullopt); }

  void step_with_replacement(const std::optional<Replacement>& r) {
    step_impl(0, 0, r);
  }

  int current_step() const { return t_; }
  int population() const { return static_cast<int>(agents_.size()); }
  const std::vector<Agent>& agents() const { return agents_; }
  std::vector<Agent>& agents() { return agents_; }
  const std::vector<FoodItem>& food() const { return food_; }
  std::vector<FoodItem>& food() { return food_; }
  const EventLog& event_log() const { return log_; }
  const std::vector<PopulationRow>& population_series() const { return pop_series_; }
  const GeneMap& gene_map() const { return gene_map_; }
  const Genome& seed_genome() const { return seed_genome_; }
  const EnergyLedger& last_ledger() const { return ledger_; }
  RandomStream& rng() { return rng_; }

  std::uint64_t births_total() const { return births_total_; }
  std::uint64_t deaths_total() const { return deaths_total_; }
  std::uint64_t crossover_ops() const { return crossover_ops_; }
  std::uint64_t mutation_ops() const { return mutation_ops_; }
  std::uint64_t stillborn_total() const { return stillborn_; }

  double total_agent_energy() const {
    double e = 0.0;
    for (const auto& a : agents_) e += a.energy;
    return e;
  }
  double total_food_energy() const {
    double e = 0.0;
    for (const auto& f : food_) e += f.energy;
    return e;
  }

  const Agent* find_agent(std::uint32_t id) const {
    for (const auto& a : agents_)
      if (a.id == id) return &a;
    return nullptr;
  }

  // Genomes of the living population, id order.
  std::vector<const Genome*> living_genomes() const {
    std::vector<const Genome*> out;
    out.reserve(agents_.size());
    for (const auto& a : agents_) out.push_back(&a.genome);
    return out;
  }

  // Full input vector for one agent: R red, R green, R blue ray channels,
  // then the normalized energy level.
  std::vector<double> sense(const Agent& agent) const {
    const auto& w = cfg_.world;
    const int rays = w.sensor_rays;
    std::vector<double> inputs(static_cast<std::size_t>(3 * rays + 1), 0.0);
    const double fov = w.fov_degrees * kPi / 180.0;
    for (int r = 0; r < rays; ++r) {
      const double angle =
          agent.heading + fov * ((r + 0.5) / static_cast<double>(rays) - 0.5);
      const double dx = std::cos(angle), dy = std::sin(angle);
      double best_t = w.vision_range;
      double red = 0.0, green = 0.0, blue = 0.0, center_dist = 0.0;
      bool hit = false;
      auto consider = [&](double cx, double cy, double radius, double cr,
                          double cg, double cb) {
        const double tox = cx - agent.x, toy = cy - agent.y;
        const double tc = tox * dx + toy * dy;
        const double d2 = tox * tox + toy * toy;
        const double closest2 = d2 - tc * tc;
        const double r2 = radius * radius;
        if (closest2 > r2) return;
        double t_hit = tc - std::sqrt(r2 - closest2);
        if (t_hit < 0.0) {
          if (d2 >= r2) return;  // sphere entirely behind the origin
          t_hit = 0.0;
        }
        if (t_hit >= best_t) return;
        best_t = t_hit;
        red = cr;
        green = cg;
        blue = cb;
        center_dist = std::sqrt(d2);
        hit = true;
      };
      for (const auto& f : food_)
        consider(f.x, f.y, w.food_radius, 0.0, 1.0, 0.0);
      for (const auto& other : agents_) {
        if (other.id == agent.id) continue;
        consider(other.x, other.y, w.agent_radius,
                 other.brain.output(Behavior::Attack), 0.0,
                 other.brain.output(Behavior::Mate));
      }
      if (hit) {
        const double atten =
            std::max(0.0, 1.0 - std::min(center_dist, w.vision_range) /
                                    w.vision_range);
        inputs[static_cast<std::size_t>(r)] = std::clamp(red * atten, 0.0, 1.0);
        inputs[static_cast<std::size_t>(rays + r)] =
            std::clamp(green * atten, 0.0, 1.0);
        inputs[static_cast<std::size_t>(2 * rays + r)] =
            std::clamp(blue * atten, 0.0, 1.0);
      }
    }
    inputs.back() = std::clamp(agent.energy / w.energy_max, 0.0, 1.0);
    return inputs;
  }

  // Called with the complete agent immediately before removal.
  std::function<void(const Agent&, int death_step)> on_death;

private:
  static constexpr double kPi = 3.14159265358979323846;

  void init_world() {
    const auto& w = cfg_.world;
    for (int i = 0; i < w.food_init; ++i) {
      FoodItem f;
      f.x = rng_.uniform(w.food_radius, w.width - w.food_radius);
      f.y = rng_.uniform(w.food_radius, w.height - w.food_radius);
      f.energy = w.food_value;
      food_.push_back(f);
    }
    const double initial_energy =
        std::min(1.0, 2.0 * w.birth_energy_fraction) * w.energy_max;
    for (int i = 0; i < w.initial_population; ++i) {
      spawn_agent(seed_genome_,
                  rng_.uniform(w.agent_radius, w.width - w.agent_radius),
                  rng_.uniform(w.agent_radius, w.height - w.agent_radius),
                  rng_.uniform(0.0, 2.0 * kPi), initial_energy, 0);
    }
    pop_series_.push_back(PopulationRow{0, population(), 0, 0});
  }

  Agent* spawn_agent(const Genome& genome, double x, double y, double heading,
                     double energy, int birth_step) {
    const GeneValues values = decode(genome, gene_map_);
    const NeuralArchitecture arch =
        decode_architecture(values, cfg_.brain, cfg_.world.sensor_rays);
    Agent a;
    a.id = next_id_++;
    a.genome = genome;
    a.brain = build_brain(arch, rng_);
    a.x = x;
    a.y = y;
    a.heading = heading;
    a.energy = std::min(energy, cfg_.world.energy_max);
    a.birth_step = birth_step;
    agents_.push_back(std::move(a));
    return &agents_.back();
  }

  Genome child_genome(const Genome& p1, const Genome& p2) {
    if (cfg_.genome.identity_ops) return p1;
    ++crossover_ops_;
    ++mutation_ops_;
    return mutate(crossover(p1, p2, gene_map_, rng_), gene_map_, rng_);
  }

  void record_trace(Agent& a) {
    const auto n = static_cast<std::size_t>(a.brain.neuron_count());
    const std::size_t base = a.trace.size();
    a.trace.resize(base + n);
    for (std::size_t i = 0; i < n; ++i)
      a.trace[base + i] = static_cast<float>(a.brain.activation[i]);
  }

  void kill_agent(std::size_t index, DeathCause cause) {
    Agent& a = agents_[index];
    const double remains = std::max(0.0, a.energy);
    if (remains > 0.0) {
      const double to_food = cfg_.world.corpse_fraction * remains;
      if (to_food > 0.0)
        food_.push_back(FoodItem{a.x, a.y, to_food});
      ledger_.corpse_lost += remains - to_food;
    }
    Event e;
    e.step = t_;
    e.kind = EventKind::Death;
    e.agent_id = a.id;
    e.cause = cause;
    log_.push(e);
    ++deaths_total_;
    ++deaths_this_step_;
    if (on_death) on_death(a, t_);
  }

  void make_birth(const Agent& p1, const Agent& p2, double x, double y) {
    const Genome child = child_genome(p1.genome, p2.genome);
    const std::uint32_t id1 = p1.id, id2 = p2.id;
    try {
      const double donation = cfg_.world.birth_energy_fraction * cfg_.world.energy_max;
      Agent* baby = spawn_agent(child, x, y, rng_.uniform(0.0, 2.0 * kPi),
                                2.0 * donation, t_);
      Event e;
      e.step = t_;
      e.kind = EventKind::Birth;
      e.agent_id = baby->id;
      e.parent1 = id1;
      e.parent2 = id2;
      log_.push(e);
      ++births_total_;
      ++births_this_step_;
    } catch (const BrainBuildError&) {
      ++stillborn_;  // decoded architecture cannot live; no birth
    }
  }

  void charge_parent(Agent& p) {
    const double donation = cfg_.world.birth_energy_fraction * cfg_.world.energy_max;
    p.energy -= std::min(donation, p.energy - energy_floor_);
  }

  void step_impl(int forced_deaths, int forced_births,
                 const std::optional<Replacement>& replacement) {
    ++t_;
    ledger_ = EnergyLedger{};
    births_this_step_ = 0;
    deaths_this_step_ = 0;
    const auto& w = cfg_.world;

    // (1) sense everyone against the same world snapshot
    std::vector<std::vector<double>> inputs(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i)
      inputs[i] = sense(agents_[i]);
    // (2) think  (3) learn  (4) record
    for (std::size_t i = 0; i < agents_.size(); ++i)
      brain_step(agents_[i].brain, inputs[i]);
    for (auto& a : agents_) hebbian_update(a.brain);
    for (auto& a : agents_) {
      record_trace(a);
      ++a.age;
      a.killed_this_step = false;
    }

    // (5) act, id order
    for (std::size_t i = 0; i < agents_.size(); ++i) act(i);
    std::erase_if(food_, [](const FoodItem& f) { return f.energy <= 1e-12; });

    // (6) deplete, scaled by population pressure
    const int pop_at_pressure = population();
    const double m = population_pressure(pop_at_pressure, w);
    for (auto& a : agents_) {
      double cost = w.cost_fixed + w.cost_neuron * a.brain.neuron_count() +
                    w.cost_synapse * static_cast<double>(a.brain.synapse_count());
      cost += w.cost_move * a.brain.output(Behavior::Move);
      cost += w.cost_turn * a.brain.output(Behavior::Turn);
      cost += w.cost_eat * a.brain.output(Behavior::Eat);
      cost += w.cost_mate * a.brain.output(Behavior::Mate);
      cost += w.cost_attack * a.brain.output(Behavior::Attack);
      cost *= m;
      const double applied = std::min(cost, std::max(0.0, a.energy - energy_floor_));
      a.energy -= applied;
      ledger_.depletion += applied;
    }

    // (7) deaths
    if (natural_deaths_) {
      const bool suppress_old_age = pop_at_pressure <= w.pop_min;
      for (auto& a : agents_) {
        if (a.energy <= 0.0) {
          a.dying = true;
          a.pending_cause =
              a.killed_this_step ? DeathCause::Killed : DeathCause::Starvation;
        } else if (a.age > w.max_age && !suppress_old_age) {
          a.dying = true;
          a.pending_cause = DeathCause::OldAge;
        }
      }
    }
    if (replacement) {
      for (auto& a : agents_)
        if (a.id == replacement->victim_id && !a.dying) {
          a.dying = true;
          a.pending_cause = DeathCause::Culled;
        }
    }
    for (std::size_t i = 0; i < agents_.size(); ++i)
      if (agents_[i].dying) kill_agent(i, agents_[i].pending_cause);
    std::erase_if(agents_, [](const Agent& a) { return a.dying; });
    for (int d = 0; d < forced_deaths; ++d) {
      if (agents_.empty())
        throw ScheduleError("forced death with no living agents at step " +
                            std::to_string(t_));
      const auto idx =
          static_cast<std::size_t>(rng_.uniform_index(agents_.size()));
      kill_agent(idx, DeathCause::Forced);
      agents_.erase(agents_.begin() + static_cast<std::ptrdiff_t>(idx));
    }

    // (8) births
    if (natural_births_) natural_births();
    if (replacement) replacement_birth(*replacement);
    for (int b = 0; b < forced_births; ++b) {
      if (agents_.size() < 2)
        throw ScheduleError("forced birth needs two parents at step " +
                            std::to_string(t_));
      const auto i = static_cast<std::size_t>(rng_.uniform_index(agents_.size()));
      auto j = static_cast<std::size_t>(rng_.uniform_index(agents_.size() - 1));
      if (j >= i) ++j;
      charge_parent(agents_[i]);
      charge_parent(agents_[j]);
      make_birth(agents_[i], agents_[j],
                 rng_.uniform(w.agent_radius, w.width - w.agent_radius),
                 rng_.uniform(w.agent_radius, w.height - w.agent_radius));
    }

    // (9) food regrowth
    if (w.food_growth > 0.0) {
      double total = total_food_energy();
      food_acc_ += w.food_growth * std::max(0.0, 1.0 - total / w.food_cap);
      while (food_acc_ >= 1.0 && total < w.food_cap) {
        FoodItem f;
        f.x = rng_.uniform(w.food_radius, w.width - w.food_radius);
        f.y = rng_.uniform(w.food_radius, w.height - w.food_radius);
        f.energy = w.food_value;
        food_.push_back(f);
        total += f.energy;
        ledger_.regrowth += f.energy;
        food_acc_ -= 1.0;
      }
    }

    // (10) bookkeeping
    pop_series_.push_back(
        PopulationRow{t_, population(), births_this_step_, deaths_this_step_});
  }

  void act(std::size_t i) {
    Agent& a = agents_[i];
    const auto& w = cfg_.world;
    // move, then turn
    const double speed = a.brain.output(Behavior::Move) * w.speed_max;
    a.x = std::clamp(a.x + std::cos(a.heading) * speed, w.agent_radius,
                     w.width - w.agent_radius);
    a.y = std::clamp(a.y + std::sin(a.heading) * speed, w.agent_radius,
                     w.height - w.agent_radius);
    a.heading += (a.brain.output(Behavior::Turn) - 0.5) * w.turn_max;
    a.heading = std::fmod(a.heading, 2.0 * kPi);
    if (a.heading < 0.0) a.heading += 2.0 * kPi;

    if (a.brain.output(Behavior::Eat) > w.eat_threshold) {
      FoodItem* nearest = nullptr;
      double best = w.reach;
      for (auto& f : food_) {
        const double d = std::hypot(f.x - a.x, f.y - a.y);
        if (d <= best) {
          best = d;
          nearest = &f;
        }
      }
      if (nearest != nullptr) {
        const double bite = std::min({w.bite_size, nearest->energy,
                                      w.energy_max - a.energy});
        nearest->energy -= bite;
        a.energy += bite;
      }
    }

    const double attack_act = a.brain.output(Behavior::Attack);
    if (attack_act > w.attack_threshold) {
      Agent* victim = nullptr;
      double best = w.reach;
      for (auto& other : agents_) {
        if (other.id == a.id) continue;
        const double d = std::hypot(other.x - a.x, other.y - a.y);
        if (d <= best) {
          best = d;
          victim = &other;
        }
      }
      if (victim != nullptr) {
        const double damage = attack_act * w.attack_damage;
        const double applied =
            std::min(damage, std::max(0.0, victim->energy - energy_floor_));
        victim->energy -= applied;
        ledger_.attack_drain += applied;
        if (natural_deaths_ && victim->energy <= 0.0)
          victim->killed_this_step = true;
      }
    }
  }

  void natural_births() {
    const auto& w = cfg_.world;
    const std::size_t count = agents_.size();
    std::vector<std::uint8_t> eligible(count, 0), matched(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
      const Agent& a = agents_[i];
      eligible[i] = a.brain.output(Behavior::Mate) > w.mate_threshold &&
                    a.age >= w.fecundity_age && a.energy > w.parent_energy_min;
    }
    struct Pair {
      std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < count; ++i) {
      if (!eligible[i] || matched[i]) continue;
      std::size_t partner = count;
      double best = w.mate_range;
      for (std::size_t j = i + 1; j < count; ++j) {
        if (!eligible[j] || matched[j]) continue;
        const double d = std::hypot(agents_[j].x - agents_[i].x,
                                    agents_[j].y - agents_[i].y);
        if (d <= best) {
          best = d;
          partner = j;
        }
      }
      if (partner == count) continue;
      matched[i] = matched[partner] = 1;
      pairs.push_back(Pair{i, partner});
    }
    for (const auto& p : pairs) {
      Agent& p1 = agents_[p.i];
      Agent& p2 = agents_[p.j];
      charge_parent(p1);
      charge_parent(p2);
      const double cx = 0.5 * (p1.x + p2.x) + rng_.uniform(-1.0, 1.0);
      const double cy = 0.5 * (p1.y + p2.y) + rng_.uniform(-1.0, 1.0);
      make_birth(p1, p2,
                 std::clamp(cx, w.agent_radius, w.width - w.agent_radius),
                 std::clamp(cy, w.agent_radius, w.height - w.agent_radius));
    }
  }

  void replacement_birth(const Replacement& r) {
    const Agent* p1 = find_agent(r.parent1_id);
    const Agent* p2 = find_agent(r.parent2_id);
    if (p1 == nullptr || p2 == nullptr) return;  // a parent died this step
    const auto& w = cfg_.world;
    auto& m1 = agents_[static_cast<std::size_t>(p1 - agents_.data())];
    auto& m2 = agents_[static_cast<std::size_t>(p2 - agents_.data())];
    charge_parent(m1);
    charge_parent(m2);
    const double cx = 0.5 * (m1.x + m2.x) + rng_.uniform(-1.0, 1.0);
    const double cy = 0.5 * (m1.y + m2.y) + rng_.uniform(-1.0, 1.0);
    make_birth(m1, m2, std::clamp(cx, w.agent_radius, w.width - w.agent_radius),
               std::clamp(cy, w.agent_radius, w.height - w.agent_radius));
  }

  RunConfig cfg_;
  RunMode mode_;
  RandomStream rng_;
  GeneMap gene_map_;
  Genome seed_genome_;
  bool natural_deaths_ = true;
  bool natural_births_ = true;
  double energy_floor_ = 0.0;

  int t_ = 0;
  std::uint32_t next_id_ = 1;
  std::vector<Agent> agents_;
  std::vector<FoodItem> food_;
  EventLog log_;
  std::vector<PopulationRow> pop_series_;
  EnergyLedger ledger_;
  double food_acc_ = 0.0;
  int births_this_step_ = 0;
  int deaths_this_step_ = 0;
  std::uint64_t births_total_ = 0;
  std::uint64_t deaths_total_ = 0;
  std::uint64_t crossover_ops_ = 0;
  std::uint64_t mutation_ops_ = 0;
  std::uint64_t stillborn_ = 0;
};

}  // namespace evotrend
