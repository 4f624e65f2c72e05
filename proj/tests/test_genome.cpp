#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evotrend/analysis.hpp"
#include "evotrend/genome.hpp"

using namespace evotrend;

namespace {

GeneMap default_map() {
  GenomeConfig g;
  BrainConfig b;
  return build_gene_map(g, b);
}

Genome all_bits(std::size_t length, std::uint8_t value) {
  Genome g;
  g.bits.assign(length, value);
  return g;
}

}  // namespace

TEST_CASE("decode maps raw gene values linearly") {
  GeneMap map(64);
  map.append("rate", 10, 0.001, 0.05);
  map.append("points", 8, 1.0, 8.0, true);
  map.append("frac", 8, 0.0, 1.0);

  SECTION("all-zero bits decode to the minimum") {
    const Genome g = all_bits(64, 0);
    REQUIRE(decode_gene(g, map.at("rate")) == Catch::Approx(0.001));
  }
  SECTION("all-one bits decode to the maximum, integers included") {
    const Genome g = all_bits(64, 1);
    REQUIRE(decode_gene(g, map.at("points")) == 8.0);
  }
  SECTION("8-bit raw 128 on [0,1] lands at 128/255") {
    Genome g = all_bits(64, 0);
    write_raw_gene(g, map.at("frac"), 128);
    REQUIRE(decode_gene(g, map.at("frac")) ==
            Catch::Approx(128.0 / 255.0).epsilon(1e-12));
  }
  SECTION("decode is monotone in the raw value") {
    Genome g = all_bits(64, 0);
    double prev = -1.0;
    for (std::uint64_t raw = 0; raw <= 255; ++raw) {
      write_raw_gene(g, map.at("frac"), raw);
      const double v = decode_gene(g, map.at("frac"));
      REQUIRE(v > prev);
      prev = v;
    }
  }
  SECTION("encode then decode round-trips within quantization") {
    Genome g = all_bits(64, 0);
    encode_gene(g, map.at("rate"), 0.01);
    REQUIRE(decode_gene(g, map.at("rate")) ==
            Catch::Approx(0.01).margin(0.05 / 1023.0));
  }
}

TEST_CASE("gene map rejects overlap and overflow") {
  GeneMap map(16);
  map.add(GeneSpec{"a", 0, 8, 0, 1, false});
  REQUIRE_THROWS_AS(map.add(GeneSpec{"b", 4, 8, 0, 1, false}), ConfigError);
  REQUIRE_THROWS_AS(map.add(GeneSpec{"c", 12, 8, 0, 1, false}), ConfigError);
  map.add(GeneSpec{"d", 8, 8, 0, 1, false});
}

TEST_CASE("crossover basics") {
  const GeneMap map = default_map();
  const std::size_t L = map.genome_length();
  RandomStream rng(123);

  SECTION("identical parents reproduce themselves for any cuts") {
    Genome a = all_bits(L, 0);
    encode_gene(a, map.at("crossover_points"), 5);
    const Genome child = crossover(a, a, map, rng);
    REQUIRE(child == a);
  }
  SECTION("single cut splices a prefix and a suffix") {
    const Genome zeros = all_bits(L, 0), ones = all_bits(L, 1);
    const std::size_t p = 100;
    const Genome child = crossover_at(zeros, ones, {p});
    for (std::size_t i = 0; i < L; ++i)
      REQUIRE(child.bits[i] == (i < p ? 0 : 1));
  }
  SECTION("cut positions compose: alternating segments") {
    const Genome zeros = all_bits(L, 0), ones = all_bits(L, 1);
    const Genome child = crossover_at(zeros, ones, {10, 20, 30});
    REQUIRE(child.bits[5] == 0);
    REQUIRE(child.bits[15] == 1);
    REQUIRE(child.bits[25] == 0);
    REQUIRE(child.bits[35] == 1);
  }
  SECTION("monte carlo: offspring of complementary parents are half ones") {
    Genome zeros = all_bits(L, 0), ones = all_bits(L, 1);
    // keep the crossover-point gene identical so only segment choice varies
    encode_gene(zeros, map.at("crossover_points"), 3);
    encode_gene(ones, map.at("crossover_points"), 3);
    double one_fraction = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      const Genome child = crossover(zeros, ones, map, rng);
      std::size_t ones_count = 0;
      for (auto b : child.bits) ones_count += b;
      one_fraction += static_cast<double>(ones_count) / static_cast<double>(L);
    }
    one_fraction /= trials;
    REQUIRE(one_fraction == Catch::Approx(0.5).margin(0.02));
  }
  SECTION("child length always matches the parents") {
    Genome a = all_bits(L, 0), b = all_bits(L, 1);
    for (int t = 0; t < 100; ++t)
      REQUIRE(crossover(a, b, map, rng).size() == L);
  }
}

TEST_CASE("mutate flips at the genome's own decoded rate") {
  const GeneMap map = default_map();
  const std::size_t L = map.genome_length();
  RandomStream rng(99);

  SECTION("a zero-rate test map never flips") {
    GeneMap zero_map(L);
    zero_map.add(GeneSpec{"mutation_rate", 0, 8, 0.0, 0.0, false});
    const Genome g = all_bits(L, 1);
    REQUIRE(mutate(g, zero_map, rng) == g);
  }
  SECTION("expected flips at the minimum rate are rate*L") {
    Genome g = all_bits(L, 0);  // raw 0 -> rate_min = 0.001
    const double rate = decode_gene(g, map.at("mutation_rate"));
    REQUIRE(rate == Catch::Approx(0.001));
    const int trials = 20000;
    double total_flips = 0.0;
    for (int t = 0; t < trials; ++t) {
      const Genome m = mutate(g, map, rng);
      for (std::size_t i = 0; i < L; ++i) total_flips += m.bits[i] != g.bits[i];
    }
    const double mean = total_flips / trials;
    REQUIRE(mean == Catch::Approx(rate * static_cast<double>(L)).epsilon(0.05));
  }
  SECTION("length is preserved and flips are per-site independent") {
    Genome g = all_bits(L, 0);
    encode_gene(g, map.at("mutation_rate"), 0.05);
    const double rate = decode_gene(g, map.at("mutation_rate"));
    const int trials = 10000;
    // covariance of flip indicators at a few site pairs
    const std::size_t sites[4] = {3, 200, 500, 900};
    double mean_flip[4] = {};
    double co[6] = {};
    for (int t = 0; t < trials; ++t) {
      const Genome m = mutate(g, map, rng);
      REQUIRE(m.size() == L);
      int f[4];
      for (int s = 0; s < 4; ++s) {
        f[s] = m.bits[sites[s]] != g.bits[sites[s]];
        mean_flip[s] += f[s];
      }
      int k = 0;
      for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) co[k++] += f[a] * f[b];
    }
    for (int s = 0; s < 4; ++s) {
      mean_flip[s] /= trials;
      REQUIRE(mean_flip[s] == Catch::Approx(rate).margin(0.01));
    }
    int k = 0;
    const double bound = 4.0 * rate / std::sqrt(static_cast<double>(trials));
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        const double cov = co[k++] / trials - mean_flip[a] * mean_flip[b];
        REQUIRE(std::abs(cov) < bound);
      }
  }
}

TEST_CASE("seed genome is deterministic and minimal") {
  GenomeConfig gc;
  BrainConfig bc;
  SeedGenomeConfig sc;
  const GeneMap map = build_gene_map(gc, bc);
  const Genome s1 = make_seed_genome(map, gc, sc);
  const Genome s2 = make_seed_genome(map, gc, sc);
  REQUIRE(s1 == s2);

  const GeneValues v = decode(s1, map);
  REQUIRE(v.get_int("group_count") == gc.groups_min);
  REQUIRE(v.get_int("excitatory_count_0") == gc.excitatory_min);
  REQUIRE(v.get("mutation_rate") ==
          Catch::Approx(sc.mutation_rate).margin(0.05 / 255.0));
  REQUIRE(v.get("seed_bias_green_move") > 0.0);
  REQUIRE(v.get("seed_bias_red_turn") > 0.0);

  SECTION("a uniform seed population has maximal genomic consistency") {
    std::vector<Genome> pop(20, s1);
    const auto gc_result = genomic_consistency(pop);
    REQUIRE(gc_result.gc == Catch::Approx(static_cast<double>(map.genome_length())));
  }
}

TEST_CASE("gene map fits the configured genome and leaves tail bits free") {
  GenomeConfig gc;
  BrainConfig bc;
  const GeneMap map = build_gene_map(gc, bc);
  REQUIRE(map.coding_bits() <= map.genome_length());
  REQUIRE(map.genome_length() == 1024);
}
