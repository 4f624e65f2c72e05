#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "evotrend/config.hpp"
#include "evotrend/errors.hpp"
#include "evotrend/random.hpp"

namespace evotrend {

// Fixed-length bit string. One byte per site in memory; packed form is only
// used on disk (8 sites per byte, most significant bit = lowest site index).
struct Genome {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  bool operator==(const Genome&) const = default;
};

inline std::vector<std::uint8_t> pack_bits(const Genome& g) {
  std::vector<std::uint8_t> out((g.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

inline Genome unpack_bits(const std::vector<std::uint8_t>& bytes,
                          std::size_t length) {
  Genome g;
  g.bits.resize(length);
  for (std::size_t i = 0; i < length; ++i)
    g.bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return g;
}

struct GeneSpec {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;
  double min_value = 0.0;
  double max_value = 0.0;
  bool integer = false;
};

class GeneMap {
public:
  explicit GeneMap(std::size_t genome_length) : genome_length_(genome_length) {}

  void add(GeneSpec spec) {
    if (spec.width == 0 || spec.width > 32)
      throw ConfigError("gene width out of range: " + spec.name);
    if (spec.offset + spec.width > genome_length_)
      throw ConfigError("gene map exceeds genome length at " + spec.name);
    if (index_.count(spec.name)) throw ConfigError("duplicate gene: " + spec.name);
    for (const auto& e : entries_) {
      bool disjoint = spec.offset + spec.width <= e.offset ||
                      e.offset + e.width <= spec.offset;
      if (!disjoint) throw ConfigError("overlapping gene: " + spec.name);
    }
    index_[spec.name] = entries_.size();
    entries_.push_back(std::move(spec));
  }

  // Appends at the first free offset.
  void append(std::string name, std::size_t width, double min_value,
              double max_value, bool integer = false) {
    add(GeneSpec{std::move(name), next_offset_, width, min_value, max_value,
                 integer});
    next_offset_ += width;
  }

  const GeneSpec& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown gene: " + name);
    return entries_[it->second];
  }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown gene: " + name);
    return it->second;
  }

  const std::vector<GeneSpec>& entries() const { return entries_; }
  std::size_t genome_length() const { return genome_length_; }
  std::size_t coding_bits() const { return next_offset_; }

private:
  std::vector<GeneSpec> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t genome_length_;
  std::size_t next_offset_ = 0;
};

inline std::uint64_t read_raw_gene(const Genome& g, const GeneSpec& spec) {
  std::uint64_t raw = 0;
  for (std::size_t i = 0; i < spec.width; ++i)
    raw = (raw << 1) | g.bits[spec.offset + i];  // MSB first
  return raw;
}

inline void write_raw_gene(Genome& g, const GeneSpec& spec, std::uint64_t raw) {
  for (std::size_t i = 0; i < spec.width; ++i)
    g.bits[spec.offset + spec.width - 1 - i] = (raw >> i) & 1u;
}

inline double decode_gene(const Genome& g, const GeneSpec& spec) {
  const std::uint64_t raw = read_raw_gene(g, spec);
  const double span = static_cast<double>((1ull << spec.width) - 1);
  double v = spec.min_value +
             (static_cast<double>(raw) / span) * (spec.max_value - spec.min_value);
  if (spec.integer) v = std::round(v);
  return v;
}

// Nearest representable encoding of `value`; decode(encode(v)) quantizes.
inline void encode_gene(Genome& g, const GeneSpec& spec, double value) {
  const double span = static_cast<double>((1ull << spec.width) - 1);
  double clamped = std::clamp(value, spec.min_value, spec.max_value);
  double t = spec.max_value > spec.min_value
                 ? (clamped - spec.min_value) / (spec.max_value - spec.min_value)
                 : 0.0;
  write_raw_gene(g, spec, static_cast<std::uint64_t>(std::llround(t * span)));
}

// Decoded gene values, aligned with the map's entry order.
struct GeneValues {
  const GeneMap* map = nullptr;
  std::vector<double> values;

  double get(const std::string& name) const {
    return values[map->index_of(name)];
  }
  int get_int(const std::string& name) const {
    return static_cast<int>(std::llround(get(name)));
  }
};

inline GeneValues decode(const Genome& g, const GeneMap& map) {
  GeneValues out;
  out.map = &map;
  out.values.reserve(map.entries().size());
  for (const auto& spec : map.entries()) out.values.push_back(decode_gene(g, spec));
  return out;
}

// Deterministic crossover core: cut positions are indices in [1, L-1]; the
// child starts with `first` and alternates at each cut.
inline Genome crossover_at(const Genome& first, const Genome& second,
                           std::vector<std::size_t> cuts) {
  std::sort(cuts.begin(), cuts.end());
  Genome child;
  child.bits.resize(first.size());
  const Genome* src[2] = {&first, &second};
  std::size_t which = 0, begin = 0;
  cuts.push_back(first.size());
  for (std::size_t cut : cuts) {
    std::copy(src[which]->bits.begin() + static_cast<std::ptrdiff_t>(begin),
              src[which]->bits.begin() + static_cast<std::ptrdiff_t>(cut),
              child.bits.begin() + static_cast<std::ptrdiff_t>(begin));
    which ^= 1;
    begin = cut;
  }
  return child;
}

// The point count comes from one parent chosen uniformly at random; cut
// positions are distinct and uniform in [1, L-1]; the leading segment's
// parent is another uniform choice.
inline Genome crossover(const Genome& a, const Genome& b, const GeneMap& map,
                        RandomStream& rng) {
  const std::size_t L = a.size();
  const auto& spec = map.at("crossover_points");
  const Genome& k_parent = rng.uniform_index(2) == 0 ? a : b;
  auto k = static_cast<std::size_t>(decode_gene(k_parent, spec));
  k = std::min(k, L - 1);
  std::vector<std::size_t> cuts;
  cuts.reserve(k);
  while (cuts.size() < k) {
    std::size_t c = 1 + static_cast<std::size_t>(rng.uniform_index(L - 1));
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  const bool a_first = rng.uniform_index(2) == 0;
  return crossover_at(a_first ? a : b, a_first ? b : a, std::move(cuts));
}

// Per-bit flips at the genome's own decoded mutation rate. The rate is read
// before any flip so the operator is well defined.
inline Genome mutate(const Genome& g, const GeneMap& map, RandomStream& rng) {
  const double rate = decode_gene(g, map.at("mutation_rate"));
  Genome out = g;
  for (auto& bit : out.bits)
    if (rng.bernoulli(rate)) bit ^= 1u;
  return out;
}

namespace detail {
inline const char* kInputGroupNames[4] = {"in_red", "in_green", "in_blue",
                                          "in_energy"};
}

// Gene layout: evolution parameters, architecture counts, one
// (density, distortion, learning rate) triple per connecting group pair,
// and four scalar weight genes. Trailing bits beyond the map are
// non-coding but still subject to crossover and mutation.
inline GeneMap build_gene_map(const GenomeConfig& g, const BrainConfig& b) {
  GeneMap map(static_cast<std::size_t>(g.length));
  map.append("mutation_rate", 8, g.mutation_rate_min, g.mutation_rate_max);
  map.append("crossover_points", 8, g.crossover_points_min,
             g.crossover_points_max, true);
  map.append("group_count", 8, g.groups_min, g.groups_max, true);
  for (int i = 0; i < g.groups_max; ++i) {
    map.append("excitatory_count_" + std::to_string(i), 8, g.excitatory_min,
               g.excitatory_max, true);
    map.append("inhibitory_count_" + std::to_string(i), 8, g.inhibitory_min,
               g.inhibitory_max, true);
  }
  std::vector<std::string> pre_names;
  for (const char* n : detail::kInputGroupNames) pre_names.emplace_back(n);
  for (int i = 0; i < g.groups_max; ++i)
    pre_names.push_back("p" + std::to_string(i));
  for (const auto& pre : pre_names) {
    for (int post = 0; post < g.groups_max; ++post) {
      const std::string suffix = "_" + pre + "_p" + std::to_string(post);
      map.append("density" + suffix, 6, 0.0, 1.0);
      map.append("distortion" + suffix, 6, 0.0, 1.0);
      map.append("learning_rate" + suffix, 6, 0.0, b.learning_rate_max);
    }
  }
  map.append("bias_magnitude", 8, 0.0, b.bias_magnitude_max);
  map.append("weight_max", 8, b.weight_max_min, b.weight_max_max);
  map.append("seed_bias_green_move", 8, -1.0, 1.0);
  map.append("seed_bias_red_turn", 8, -1.0, 1.0);
  return map;
}

// Deterministic founder genome: minimal architecture, small fixed densities
// and learning rates, and hand-set sensor-to-behavior weight biases (toward
// green food, away from red aggressors). No randomness anywhere.
inline Genome make_seed_genome(const GeneMap& map, const GenomeConfig& g,
                               const SeedGenomeConfig& s) {
  Genome out;
  out.bits.assign(map.genome_length(), 0);
  auto set = [&](const std::string& name, double v) {
    encode_gene(out, map.at(name), v);
  };
  set("mutation_rate", s.mutation_rate);
  set("crossover_points", s.crossover_points);
  set("group_count", g.groups_min);
  for (int i = 0; i < g.groups_max; ++i) {
    set("excitatory_count_" + std::to_string(i), g.excitatory_min);
    set("inhibitory_count_" + std::to_string(i),
        i == 0 ? s.inhibitory_count : g.inhibitory_min);
  }
  for (const auto& spec : map.entries()) {
    if (spec.name.rfind("density_", 0) == 0) set(spec.name, s.connection_density);
    if (spec.name.rfind("distortion_", 0) == 0) set(spec.name, s.topo_distortion);
    if (spec.name.rfind("learning_rate_", 0) == 0) set(spec.name, s.learning_rate);
  }
  set("bias_magnitude", s.bias_magnitude);
  set("weight_max", s.weight_max);
  set("seed_bias_green_move", s.bias_green_move);
  set("seed_bias_red_turn", s.bias_red_turn);
  return out;
}

}  // namespace evotrend
