#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evotrend/analysis.hpp"
#include "support/oracles.hpp"

using namespace evotrend;

namespace {

ComplexityReport report(std::uint32_t id, int death, double c, bool valid = true) {
  ComplexityReport r;
  r.agent_id = id;
  r.death_step = static_cast<std::uint32_t>(death);
  r.c_approx = c;
  r.valid = valid;
  if (!valid) r.reason = "insufficient samples";
  return r;
}

Genome genome_of(std::initializer_list<int> bits) {
  Genome g;
  for (int b : bits) g.bits.push_back(static_cast<std::uint8_t>(b));
  return g;
}

}  // namespace

TEST_CASE("bin_by_death") {
  SECTION("death at step 999 with width 1000 lands in the first bin") {
    const auto s = bin_by_death({report(1, 999, 0.4)}, 1000, 5000);
    REQUIRE(s.bins.size() == 5);
    REQUIRE(s.bins[0].has);
    REQUIRE(s.bins[0].count == 1);
    // boundary: exactly 1000 still belongs to bin 1, 1001 to bin 2
    const auto b = bin_by_death({report(1, 1000, 0.4), report(2, 1001, 0.4)},
                                1000, 5000);
    REQUIRE(b.bins[0].count == 1);
    REQUIRE(b.bins[1].count == 1);
  }
  SECTION("per-bin arithmetic mean") {
    const auto s = bin_by_death(
        {report(1, 100, 0.1), report(2, 200, 0.2), report(3, 300, 0.6)}, 1000,
        3000);
    REQUIRE(s.bins[0].mean == Catch::Approx(0.3));
  }
  SECTION("empty bins are missing, never zero") {
    const auto s = bin_by_death({report(1, 2500, 1.0)}, 1000, 3000);
    REQUIRE(!s.bins[0].has);
    REQUIRE(!s.bins[1].has);
    REQUIRE(s.bins[2].has);
  }
  SECTION("invalid reports are excluded but tallied; counts conserve agents") {
    const auto s = bin_by_death(
        {report(1, 100, 0.1), report(2, 150, 0.0, false), report(3, 2900, 0.2)},
        1000, 3000);
    REQUIRE(s.excluded == 1);
    int binned = 0;
    for (const auto& b : s.bins) binned += b.count;
    REQUIRE(binned + s.excluded == s.total_reports);
  }
}

TEST_CASE("paired t series") {
  auto series_with = [](std::vector<double> means) {
    BinnedSeries s;
    s.width = 1000;
    for (double m : means) {
      BinnedSeries::Bin b;
      b.mean = m;
      b.count = 3;
      b.has = true;
      s.bins.push_back(b);
    }
    return s;
  };

  SECTION("the {1,2,3} fixture gives t = 2 sqrt(3), df 2") {
    std::vector<BinnedSeries> driven = {series_with({2.0}), series_with({3.0}),
                                        series_with({4.0})};
    std::vector<BinnedSeries> passive = {series_with({1.0}), series_with({1.0}),
                                         series_with({1.0})};
    const TSeries t = paired_t(driven, passive);
    REQUIRE(t.bins.size() == 1);
    REQUIRE(t.bins[0].has);
    REQUIRE(t.bins[0].df == 2);
    REQUIRE(t.bins[0].t == Catch::Approx(3.4641016151377544).epsilon(1e-12));
  }
  SECTION("10 pairs give df 9 and the 1.833 one-tailed critical value") {
    std::vector<BinnedSeries> driven, passive;
    RandomStream rng(4);
    for (int i = 0; i < 10; ++i) {
      driven.push_back(series_with({0.5 + 0.1 * rng.uniform()}));
      passive.push_back(series_with({0.4 + 0.1 * rng.uniform()}));
    }
    const TSeries t = paired_t(driven, passive, 0.05, false);
    REQUIRE(t.bins[0].df == 9);
    REQUIRE(t.bins[0].critical == Catch::Approx(1.833).margin(0.001));
  }
  SECTION("identical members give t = 0; constant nonzero gap goes infinite") {
    std::vector<BinnedSeries> driven = {series_with({1.0}), series_with({2.0})};
    const TSeries zero = paired_t(driven, driven);
    REQUIRE(zero.bins[0].t == 0.0);
    std::vector<BinnedSeries> passive = {series_with({0.5}), series_with({1.5})};
    const TSeries inf = paired_t(driven, passive);
    REQUIRE(inf.bins[0].infinite);
    REQUIRE(inf.bins[0].t > 0);
  }
  SECTION("a bin contributes only when both members of a pair have data") {
    BinnedSeries full = series_with({1.0, 2.0});
    BinnedSeries holey = series_with({1.0, 2.0});
    holey.bins[1].has = false;
    std::vector<BinnedSeries> driven = {full, full, full};
    std::vector<BinnedSeries> passive = {holey, full, full};
    const TSeries t = paired_t(driven, passive);
    REQUIRE(t.bins[0].pairs == 3);
    REQUIRE(t.bins[1].pairs == 2);
  }
  SECTION("fewer than two contributing pairs is missing") {
    std::vector<BinnedSeries> driven = {series_with({1.0})};
    std::vector<BinnedSeries> passive = {series_with({0.5})};
    const TSeries t = paired_t(driven, passive);
    REQUIRE(!t.bins[0].has);
  }
  SECTION("matches the reference implementation on random paired data") {
    RandomStream rng(123);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 3 + static_cast<int>(rng.uniform_index(18));
      std::vector<BinnedSeries> driven, passive;
      std::vector<double> d;
      for (int i = 0; i < n; ++i) {
        const double a = rng.uniform(0.0, 2.0), b = rng.uniform(0.0, 2.0);
        driven.push_back(series_with({a}));
        passive.push_back(series_with({b}));
        d.push_back(a - b);
      }
      const TSeries t = paired_t(driven, passive);
      const double ref = oracles::reference_paired_t(d);
      REQUIRE(t.bins[0].t == Catch::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("genomic consistency") {
  SECTION("uniform population attains GC = L with zero site entropy") {
    std::vector<Genome> pop(7, genome_of({1, 0, 1, 1, 0}));
    const auto r = genomic_consistency(pop);
    REQUIRE(r.gc == 5.0);
    for (double h : r.site_entropy) REQUIRE(h == 0.0);
  }
  SECTION("every site at p = 1/2 collapses GC to zero") {
    std::vector<Genome> pop = {genome_of({0, 1}), genome_of({1, 0})};
    REQUIRE(genomic_consistency(pop).gc == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("the four-genome hand example") {
    std::vector<Genome> pop = {genome_of({0, 0}), genome_of({0, 1}),
                               genome_of({1, 1}), genome_of({1, 1})};
    REQUIRE(genomic_consistency(pop).gc ==
            Catch::Approx(0.18872187554086717).margin(1e-9));
  }
  SECTION("GC + sum of site entropies equals L exactly") {
    RandomStream rng(5);
    std::vector<Genome> pop;
    for (int i = 0; i < 13; ++i) {
      Genome g;
      for (int b = 0; b < 64; ++b)
        g.bits.push_back(static_cast<std::uint8_t>(rng.uniform_index(2)));
      pop.push_back(g);
    }
    const auto r = genomic_consistency(pop);
    double h_sum = 0.0;
    for (double h : r.site_entropy) h_sum += h;
    REQUIRE(r.gc + h_sum == 64.0);  // exact, by construction
  }
  SECTION("invariant under population reordering") {
    std::vector<Genome> pop = {genome_of({0, 0, 1}), genome_of({1, 0, 1}),
                               genome_of({0, 1, 0})};
    std::vector<Genome> reordered = {pop[2], pop[0], pop[1]};
    REQUIRE(genomic_consistency(pop).gc == genomic_consistency(reordered).gc);
  }
}

TEST_CASE("bit frequency") {
  std::vector<Genome> zeros(3, genome_of({0, 0, 0, 0}));
  REQUIRE(bit_frequency(zeros) == 0.0);
  std::vector<Genome> ones(3, genome_of({1, 1, 1, 1}));
  REQUIRE(bit_frequency(ones) == 1.0);
  std::vector<Genome> mixed = {genome_of({1, 0}), genome_of({0, 0})};
  REQUIRE(bit_frequency(mixed) == 0.25);
}

TEST_CASE("histogram series") {
  SECTION("a single report occupies one cell") {
    const auto h = histogram_series({report(1, 1500, 0.7)}, 1000, 40, 3000);
    int total = 0;
    for (const auto& row : h.counts)
      for (int c : row) total += c;
    REQUIRE(total == 1);
    int row_sum = 0;
    for (int c : h.counts[1]) row_sum += c;
    REQUIRE(row_sum == 1);
  }
  SECTION("identical values land in a single column") {
    std::vector<ComplexityReport> reports;
    for (int i = 0; i < 20; ++i)
      reports.push_back(report(static_cast<std::uint32_t>(i), 100 + 40 * i, 0.42));
    const auto h = histogram_series(reports, 500, 40, 1000);
    int occupied_columns = 0;
    for (std::size_t vb = 0; vb < 40; ++vb) {
      int col = 0;
      for (const auto& row : h.counts) col += row[vb];
      if (col > 0) ++occupied_columns;
    }
    REQUIRE(occupied_columns == 1);
  }
  SECTION("per-time-bin counts equal that bin's valid death count") {
    RandomStream rng(9);
    std::vector<ComplexityReport> reports;
    std::vector<int> expected(4, 0);
    for (int i = 0; i < 200; ++i) {
      const int death = 1 + static_cast<int>(rng.uniform_index(4000));
      const bool valid = rng.uniform() < 0.8;
      reports.push_back(report(static_cast<std::uint32_t>(i), death,
                               rng.uniform(), valid));
      if (valid) expected[static_cast<std::size_t>((death + 999) / 1000 - 1)]++;
    }
    const auto h = histogram_series(reports, 1000, 40, 4000);
    for (std::size_t tb = 0; tb < 4; ++tb) {
      int got = 0;
      for (int c : h.counts[tb]) got += c;
      REQUIRE(got == expected[tb]);
    }
  }
  SECTION("diffusive synthetic data spreads variance over time") {
    // pseudo-agents random-walking in complexity; per-time-bin variance of
    // the histogram mass must increase monotonically
    RandomStream rng(17);
    std::vector<ComplexityReport> reports;
    const int bins = 8;
    for (int agent = 0; agent < 4000; ++agent) {
      double c = 0.0;
      const int death_bin = static_cast<int>(rng.uniform_index(bins));
      const int death = death_bin * 1000 + 500;
      for (int s = 0; s <= death_bin; ++s) c += rng.gaussian(0.0, 0.1);
      reports.push_back(
          report(static_cast<std::uint32_t>(agent), death, c));
    }
    const auto h = histogram_series(reports, 1000, 60, bins * 1000);
    double prev_var = -1.0;
    for (std::size_t tb = 0; tb < static_cast<std::size_t>(bins); ++tb) {
      double mass = 0.0, mean = 0.0;
      for (std::size_t vb = 0; vb < h.counts[tb].size(); ++vb) {
        mass += h.counts[tb][vb];
        mean += h.counts[tb][vb] * static_cast<double>(vb);
      }
      REQUIRE(mass > 0);
      mean /= mass;
      double var = 0.0;
      for (std::size_t vb = 0; vb < h.counts[tb].size(); ++vb)
        var += h.counts[tb][vb] * (static_cast<double>(vb) - mean) *
               (static_cast<double>(vb) - mean);
      var /= mass;
      REQUIRE(var > prev_var);
      prev_var = var;
    }
  }
}

TEST_CASE("t critical values track the configured tail convention") {
  REQUIRE(t_critical(9, 0.05, false) == Catch::Approx(1.8331).margin(0.0005));
  REQUIRE(t_critical(9, 0.05, true) == Catch::Approx(2.2622).margin(0.0005));
  REQUIRE(t_critical(2, 0.05, false) == Catch::Approx(2.9200).margin(0.0005));
}
