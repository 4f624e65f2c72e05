#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "evotrend/config.hpp"
#include "evotrend/errors.hpp"
#include "evotrend/genome.hpp"
#include "evotrend/random.hpp"

namespace evotrend {

enum class NeuronRole : std::uint8_t { Input, Processing };

enum class Behavior : int { Move = 0, Turn, Eat, Mate, Attack };
inline constexpr int kBehaviorCount = 5;

struct GroupSpec {
  int excitatory = 0;
  int inhibitory = 0;
  int size() const { return excitatory + inhibitory; }
};

struct PairParams {
  double density = 0.0;
  double distortion = 0.0;
  double learning_rate = 0.0;
};

// Decoded wiring plan. Pre groups span the four input groups (red, green,
// blue rays, then the energy cell) followed by the processing groups; post
// groups are processing only -- nothing ever feeds an input neuron.
struct NeuralArchitecture {
  std::array<int, 4> input_group_sizes{};       // red, green, blue, energy
  std::vector<GroupSpec> groups;                // processing groups
  std::vector<std::vector<PairParams>> pairs;   // [pre_group][post_group]
  double bias_magnitude = 0.0;
  double weight_max = 1.0;
  double init_weight_fraction = 0.1;
  double seed_bias_green_move = 0.0;
  double seed_bias_red_turn = 0.0;

  int input_count() const {
    int n = 0;
    for (int s : input_group_sizes) n += s;
    return n;
  }
  int processing_count() const {
    int n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
  int pre_group_count() const {
    return 4 + static_cast<int>(groups.size());
  }
};

inline NeuralArchitecture decode_architecture(const GeneValues& v,
                                              const BrainConfig& brain_cfg,
                                              int sensor_rays) {
  NeuralArchitecture arch;
  arch.input_group_sizes = {sensor_rays, sensor_rays, sensor_rays, 1};
  const int g = v.get_int("group_count");
  arch.groups.resize(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) {
    arch.groups[static_cast<std::size_t>(i)].excitatory =
        v.get_int("excitatory_count_" + std::to_string(i));
    arch.groups[static_cast<std::size_t>(i)].inhibitory =
        v.get_int("inhibitory_count_" + std::to_string(i));
  }
  arch.pairs.resize(static_cast<std::size_t>(4 + g));
  std::vector<std::string> pre_names;
  for (const char* n : detail::kInputGroupNames) pre_names.emplace_back(n);
  for (int i = 0; i < g; ++i) pre_names.push_back("p" + std::to_string(i));
  for (int pre = 0; pre < 4 + g; ++pre) {
    auto& row = arch.pairs[static_cast<std::size_t>(pre)];
    row.resize(static_cast<std::size_t>(g));
    for (int post = 0; post < g; ++post) {
      const std::string suffix = "_" + pre_names[static_cast<std::size_t>(pre)] +
                                 "_p" + std::to_string(post);
      auto& p = row[static_cast<std::size_t>(post)];
      p.density = v.get("density" + suffix);
      p.distortion = v.get("distortion" + suffix);
      p.learning_rate = v.get("learning_rate" + suffix);
    }
  }
  arch.bias_magnitude = v.get("bias_magnitude");
  arch.weight_max = v.get("weight_max");
  arch.init_weight_fraction = brain_cfg.init_weight_fraction;
  arch.seed_bias_green_move = v.get("seed_bias_green_move");
  arch.seed_bias_red_turn = v.get("seed_bias_red_turn");
  return arch;
}

struct Synapse {
  std::uint16_t pre = 0;
  std::uint16_t post = 0;
  double weight = 0.0;
  double learning_rate = 0.0;
};

// Live network state. Synapses are kept grouped by post neuron with a CSR
// offset table so stepping walks memory linearly.
struct Brain {
  std::vector<NeuronRole> roles;
  std::vector<std::int8_t> signs;  // +1 excitatory, -1 inhibitory
  std::vector<double> bias;
  std::vector<double> activation;
  std::vector<Synapse> synapses;
  std::vector<std::uint32_t> post_offsets;  // size neuron_count + 1
  std::array<int, kBehaviorCount> outputs{};
  int input_count = 0;
  double weight_max = 1.0;

  int neuron_count() const { return static_cast<int>(roles.size()); }
  int processing_count() const { return neuron_count() - input_count; }
  std::size_t synapse_count() const { return synapses.size(); }
  double output(Behavior b) const {
    return activation[static_cast<std::size_t>(outputs[static_cast<int>(b)])];
  }

private:
  friend void brain_step(Brain&, std::span<const double>);
  std::vector<double> prev_;
};

// Activations stay strictly inside (0,1); the logistic saturates to exact
// 0/1 in double precision around |s| ~ 37.
inline double squash(double s) {
  constexpr double eps = 1e-12;
  const double a = 1.0 / (1.0 + std::exp(-s));
  return std::min(std::max(a, eps), 1.0 - eps);
}

namespace detail {

// Fan-out targets for one pre neuron: the number of synapses is a sum of
// independent density trials over eligible posts, and each target is either
// the nearest unused index-aligned slot (probability 1 - distortion) or a
// uniformly random unused slot.
inline void wire_pre_neuron(int pre_index, int pre_position, int pre_size,
                            int post_begin, int post_size, bool same_group,
                            const PairParams& p, double sign_magnitude_cap,
                            double sign, RandomStream& rng,
                            std::vector<Synapse>& out) {
  std::vector<int> eligible;
  eligible.reserve(static_cast<std::size_t>(post_size));
  for (int j = 0; j < post_size; ++j) {
    if (same_group && post_begin + j == pre_index) continue;  // no autapse
    eligible.push_back(j);
  }
  if (eligible.empty()) return;
  int count = 0;
  for (std::size_t j = 0; j < eligible.size(); ++j)
    if (rng.bernoulli(p.density)) ++count;
  if (count == 0) return;

  const double aligned = pre_size > 1
      ? static_cast<double>(pre_position) * (post_size - 1) / (pre_size - 1)
      : (post_size - 1) / 2.0;
  std::sort(eligible.begin(), eligible.end(), [aligned](int a, int b) {
    const double da = std::abs(a - aligned), db = std::abs(b - aligned);
    if (da != db) return da < db;
    return a < b;
  });
  // Topographic picks consume the distance-sorted list front to back;
  // uniform picks choose among the remaining unused slots.
  std::vector<std::uint8_t> used(eligible.size(), 0);
  std::size_t head = 0, remaining = eligible.size();
  for (int c = 0; c < count; ++c) {
    std::size_t pick;
    if (rng.bernoulli(1.0 - p.distortion)) {
      while (used[head]) ++head;
      pick = head;
    } else {
      std::size_t k = static_cast<std::size_t>(rng.uniform_index(remaining));
      pick = 0;
      while (used[pick] || k > 0) {
        if (!used[pick]) --k;
        ++pick;
      }
    }
    used[pick] = 1;
    --remaining;
    Synapse s;
    s.pre = static_cast<std::uint16_t>(pre_index);
    s.post = static_cast<std::uint16_t>(post_begin + eligible[pick]);
    s.weight = sign * rng.uniform(0.0, sign_magnitude_cap);
    s.learning_rate = p.learning_rate;
    out.push_back(s);
  }
}

}  // namespace detail

inline Brain build_brain(const NeuralArchitecture& arch, RandomStream& rng) {
  if (arch.processing_count() <= 0)
    throw BrainBuildError("architecture has no processing neurons");

  Brain b;
  const int n_in = arch.input_count();
  const int n = n_in + arch.processing_count();
  if (n > 0xffff) throw BrainBuildError("too many neurons");
  b.input_count = n_in;
  b.weight_max = arch.weight_max;
  b.roles.assign(static_cast<std::size_t>(n), NeuronRole::Processing);
  b.signs.assign(static_cast<std::size_t>(n), 1);
  b.bias.assign(static_cast<std::size_t>(n), 0.0);
  b.activation.assign(static_cast<std::size_t>(n), 0.5);

  // Layout: input groups in order, then each processing group (excitatory
  // neurons first). Group start offsets are recorded for wiring.
  std::vector<int> group_begin;  // pre-group indexing: 4 inputs + processing
  std::vector<int> group_size;
  int cursor = 0;
  for (int gi = 0; gi < 4; ++gi) {
    group_begin.push_back(cursor);
    group_size.push_back(arch.input_group_sizes[static_cast<std::size_t>(gi)]);
    cursor += arch.input_group_sizes[static_cast<std::size_t>(gi)];
  }
  for (int i = 0; i < cursor; ++i) {
    b.roles[static_cast<std::size_t>(i)] = NeuronRole::Input;
    b.activation[static_cast<std::size_t>(i)] = 0.0;
  }
  for (const auto& g : arch.groups) {
    group_begin.push_back(cursor);
    group_size.push_back(g.size());
    for (int i = 0; i < g.excitatory; ++i)
      b.signs[static_cast<std::size_t>(cursor + i)] = 1;
    for (int i = 0; i < g.inhibitory; ++i)
      b.signs[static_cast<std::size_t>(cursor + g.excitatory + i)] = -1;
    cursor += g.size();
  }

  const auto& last = arch.groups.back();
  if (last.excitatory < kBehaviorCount)
    throw BrainBuildError("last group cannot host the output behaviors");
  const int last_begin = group_begin[static_cast<std::size_t>(
      4 + static_cast<int>(arch.groups.size()) - 1)];
  for (int i = 0; i < kBehaviorCount; ++i) b.outputs[i] = last_begin + i;

  const double init_cap = arch.init_weight_fraction * arch.weight_max;
  const int n_groups = static_cast<int>(arch.groups.size());
  for (int post_g = 0; post_g < n_groups; ++post_g) {
    const int post_begin = group_begin[static_cast<std::size_t>(4 + post_g)];
    const int post_size = group_size[static_cast<std::size_t>(4 + post_g)];
    for (int pre_g = 0; pre_g < 4 + n_groups; ++pre_g) {
      const auto& p =
          arch.pairs[static_cast<std::size_t>(pre_g)][static_cast<std::size_t>(post_g)];
      if (p.density <= 0.0) continue;
      const int pre_begin = group_begin[static_cast<std::size_t>(pre_g)];
      const int pre_size = group_size[static_cast<std::size_t>(pre_g)];
      const bool same_group = pre_g == 4 + post_g;
      for (int i = 0; i < pre_size; ++i) {
        const int pre_index = pre_begin + i;
        detail::wire_pre_neuron(pre_index, i, pre_size, post_begin, post_size,
                                same_group, p, init_cap,
                                static_cast<double>(b.signs[static_cast<std::size_t>(
                                    pre_index)]),
                                rng, b.synapses);
      }
    }
  }

  // Hand-set behavior predispositions: green rays push the move output,
  // red rays push the turn output. Negative gene values only depress
  // existing weights (input neurons are excitatory, so weights stay >= 0).
  auto apply_designated = [&](int group, double gene, Behavior behavior) {
    if (std::abs(gene) < 0.05) return;
    const double delta = gene * 0.25 * arch.weight_max;
    const int post = b.outputs[static_cast<int>(behavior)];
    const int begin = group_begin[static_cast<std::size_t>(group)];
    const int size = group_size[static_cast<std::size_t>(group)];
    const auto& p = arch.pairs[static_cast<std::size_t>(group)]
                              [static_cast<std::size_t>(n_groups - 1)];
    for (int i = 0; i < size; ++i) {
      const int pre = begin + i;
      Synapse* existing = nullptr;
      for (auto& s : b.synapses)
        if (s.pre == pre && s.post == post) {
          existing = &s;
          break;
        }
      if (existing != nullptr) {
        existing->weight =
            std::clamp(existing->weight + delta, 0.0, arch.weight_max);
      } else if (delta > 0.0) {
        Synapse s;
        s.pre = static_cast<std::uint16_t>(pre);
        s.post = static_cast<std::uint16_t>(post);
        s.weight = std::min(delta, arch.weight_max);
        s.learning_rate = p.learning_rate;
        b.synapses.push_back(s);
      }
    }
  };
  apply_designated(1, arch.seed_bias_green_move, Behavior::Move);
  apply_designated(0, arch.seed_bias_red_turn, Behavior::Turn);

  for (int i = n_in; i < n; ++i)
    b.bias[static_cast<std::size_t>(i)] =
        rng.uniform(-arch.bias_magnitude, arch.bias_magnitude);

  std::sort(b.synapses.begin(), b.synapses.end(),
            [](const Synapse& x, const Synapse& y) {
              if (x.post != y.post) return x.post < y.post;
              return x.pre < y.pre;
            });
  b.post_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& s : b.synapses) b.post_offsets[s.post + 1u]++;
  for (std::size_t i = 1; i < b.post_offsets.size(); ++i)
    b.post_offsets[i] += b.post_offsets[i - 1];
  return b;
}

// Synchronous update: inputs are written first, then every processing
// neuron reads the same snapshot (current inputs, previous-step processing
// activations), so evaluation order cannot matter.
inline void brain_step(Brain& b, std::span<const double> inputs) {
  const int n = b.neuron_count();
  for (int i = 0; i < b.input_count; ++i)
    b.activation[static_cast<std::size_t>(i)] = inputs[static_cast<std::size_t>(i)];
  b.prev_ = b.activation;
  for (int i = b.input_count; i < n; ++i) {
    double s = b.bias[static_cast<std::size_t>(i)];
    const std::uint32_t begin = b.post_offsets[static_cast<std::size_t>(i)];
    const std::uint32_t end = b.post_offsets[static_cast<std::size_t>(i) + 1];
    for (std::uint32_t k = begin; k < end; ++k) {
      const Synapse& syn = b.synapses[k];
      s += syn.weight * b.prev_[syn.pre];
    }
    b.activation[static_cast<std::size_t>(i)] = squash(s);
  }
}

// dw = eta * (a_pre - 1/2) * (a_post - 1/2), clamped to the pre neuron's
// sign half-interval [0, w_max] or [-w_max, 0].
inline void hebbian_update(Brain& b) {
  for (auto& s : b.synapses) {
    const double dw = s.learning_rate * (b.activation[s.pre] - 0.5) *
                      (b.activation[s.post] - 0.5);
    double w = s.weight + dw;
    if (b.signs[s.pre] > 0)
      w = std::clamp(w, 0.0, b.weight_max);
    else
      w = std::clamp(w, -b.weight_max, 0.0);
    s.weight = w;
  }
}

}  // namespace evotrend
