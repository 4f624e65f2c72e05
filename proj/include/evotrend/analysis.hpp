#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "evotrend/artifacts.hpp"
#include "evotrend/complexity.hpp"
#include "evotrend/genome.hpp"

namespace evotrend {

// ---------------------------------------------------------------------------
// Death-binned complexity means.

struct BinnedSeries {
  int width = 0;
  struct Bin {
    double mean = 0.0;
    int count = 0;
    bool has = false;  // empty bins are missing, never zero
  };
  std::vector<Bin> bins;  // bins[k] covers (k*width, (k+1)*width]
  int excluded = 0;
  int total_reports = 0;

  int bin_end_step(std::size_t k) const {
    return static_cast<int>(k + 1) * width;
  }
};

inline BinnedSeries bin_by_death(const std::vector<ComplexityReport>& reports,
                                 int width, int run_length) {
  BinnedSeries out;
  out.width = width;
  const auto nbins = static_cast<std::size_t>((run_length + width - 1) / width);
  out.bins.resize(nbins);
  std::vector<double> sums(nbins, 0.0);
  for (const auto& r : reports) {
    ++out.total_reports;
    if (!r.valid) {
      ++out.excluded;
      continue;
    }
    // ceil(death/width), 1-based
    const auto b = static_cast<std::size_t>(
        (static_cast<int>(r.death_step) + width - 1) / width);
    if (b < 1 || b > nbins) continue;
    sums[b - 1] += r.c_approx;
    out.bins[b - 1].count++;
  }
  for (std::size_t k = 0; k < nbins; ++k) {
    if (out.bins[k].count > 0) {
      out.bins[k].mean = sums[k] / out.bins[k].count;
      out.bins[k].has = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dependent (paired) t series over run sets.

struct TSeries {
  int width = 0;
  double alpha = 0.05;
  bool two_tailed = false;
  struct Bin {
    double t = 0.0;
    int df = 0;
    double critical = 0.0;
    bool has = false;
    bool infinite = false;  // sd == 0 with nonzero mean difference
    int pairs = 0;
  };
  std::vector<Bin> bins;

  int bin_end_step(std::size_t k) const {
    return static_cast<int>(k + 1) * width;
  }
};

inline double t_critical(int df, double alpha, bool two_tailed) {
  boost::math::students_t dist(static_cast<double>(df));
  const double p = two_tailed ? 1.0 - alpha / 2.0 : 1.0 - alpha;
  return boost::math::quantile(dist, p);
}

// Per bin: differences d_i = driven_i - passive_i over the pairs where both
// runs have data; t = mean(d) / (sd(d) / sqrt(n)) with the n-1 divisor.
inline TSeries paired_t(const std::vector<BinnedSeries>& driven,
                        const std::vector<BinnedSeries>& passive,
                        double alpha = 0.05, bool two_tailed = false) {
  TSeries out;
  out.alpha = alpha;
  out.two_tailed = two_tailed;
  if (driven.empty() || driven.size() != passive.size()) return out;
  out.width = driven.front().width;
  std::size_t nbins = 0;
  for (const auto& s : driven) nbins = std::max(nbins, s.bins.size());
  for (const auto& s : passive) nbins = std::max(nbins, s.bins.size());
  out.bins.resize(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < driven.size(); ++i) {
      if (b >= driven[i].bins.size() || b >= passive[i].bins.size()) continue;
      if (!driven[i].bins[b].has || !passive[i].bins[b].has) continue;
      d.push_back(driven[i].bins[b].mean - passive[i].bins[b].mean);
    }
    auto& bin = out.bins[b];
    bin.pairs = static_cast<int>(d.size());
    if (d.size() < 2) continue;
    const auto n = static_cast<double>(d.size());
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    bin.df = static_cast<int>(d.size()) - 1;
    bin.critical = t_critical(bin.df, alpha, two_tailed);
    bin.has = true;
    if (sd == 0.0) {
      if (mean == 0.0) {
        bin.t = 0.0;
      } else {
        bin.infinite = true;
        bin.t = mean > 0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      }
    } else {
      bin.t = mean / (sd / std::sqrt(n));
    }
  }
  return out;
}

inline bool t_significant(const TSeries::Bin& bin, bool two_tailed) {
  if (!bin.has) return false;
  return two_tailed ? std::abs(bin.t) > bin.critical : bin.t > bin.critical;
}

// ---------------------------------------------------------------------------
// Genomic consistency: L minus the summed per-site cross-population bit
// entropies. Maximal (= L) for a uniform population, 0 at 50/50 drift.

struct GCResult {
  double gc = 0.0;
  std::vector<double> site_entropy;
};

inline GCResult genomic_consistency(const std::vector<const Genome*>& genomes) {
  GCResult out;
  if (genomes.empty()) return out;
  const std::size_t L = genomes.front()->size();
  out.site_entropy.resize(L, 0.0);
  const auto n = static_cast<double>(genomes.size());
  double entropy_sum = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    std::size_t ones = 0;
    for (const Genome* g : genomes) ones += g->bits[i];
    const double p = static_cast<double>(ones) / n;
    double h = 0.0;
    if (p > 0.0 && p < 1.0)
      h = -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
    out.site_entropy[i] = h;
    entropy_sum += h;
  }
  // GC + sum_i H_i == L holds exactly by construction.
  out.gc = static_cast<double>(L) - entropy_sum;
  return out;
}

inline GCResult genomic_consistency(const std::vector<Genome>& genomes) {
  std::vector<const Genome*> ptrs;
  ptrs.reserve(genomes.size());
  for (const auto& g : genomes) ptrs.push_back(&g);
  return genomic_consistency(ptrs);
}

inline double bit_frequency(const std::vector<const Genome*>& genomes) {
  if (genomes.empty()) return 0.0;
  std::uint64_t ones = 0, total = 0;
  for (const Genome* g : genomes) {
    for (auto b : g->bits) ones += b;
    total += g->size();
  }
  return total == 0 ? 0.0 : static_cast<double>(ones) / static_cast<double>(total);
}

inline double bit_frequency(const std::vector<Genome>& genomes) {
  std::vector<const Genome*> ptrs;
  ptrs.reserve(genomes.size());
  for (const auto& g : genomes) ptrs.push_back(&g);
  return bit_frequency(ptrs);
}

// ---------------------------------------------------------------------------
// Complexity histograms over time (one series per run).

struct HistogramSeries {
  std::vector<double> edges;  // value axis, size value_bins + 1
  int time_width = 0;
  std::vector<std::vector<int>> counts;  // [time_bin][value_bin]
};

inline HistogramSeries histogram_series(
    const std::vector<ComplexityReport>& reports, int time_width,
    int value_bins, int run_length) {
  HistogramSeries out;
  out.time_width = time_width;
  const auto tbins =
      static_cast<std::size_t>((run_length + time_width - 1) / time_width);
  out.counts.assign(tbins, std::vector<int>(static_cast<std::size_t>(value_bins), 0));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    if (!r.valid) continue;
    lo = std::min(lo, r.c_approx);
    hi = std::max(hi, r.c_approx);
  }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi == lo) hi = lo + 1.0;
  out.edges.resize(static_cast<std::size_t>(value_bins) + 1);
  for (int i = 0; i <= value_bins; ++i)
    out.edges[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / value_bins;
  for (const auto& r : reports) {
    if (!r.valid) continue;
    const auto tb = static_cast<std::size_t>(
        (static_cast<int>(r.death_step) + time_width - 1) / time_width);
    if (tb < 1 || tb > tbins) continue;
    auto vb = static_cast<int>((r.c_approx - lo) / (hi - lo) * value_bins);
    vb = std::clamp(vb, 0, value_bins - 1);
    out.counts[tb - 1][static_cast<std::size_t>(vb)]++;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV writers for the report bundle.

namespace detail {

inline std::string csv_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

struct RunSeriesId {
  int run = 0;       // pair index
  RunMode mode = RunMode::Driven;
};

inline void write_mean_series_csv(
    const fs::path& path, const std::vector<RunSeriesId>& ids,
    const std::vector<BinnedSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bin_end_step,run_id,mode,mean_C,count,excluded\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t b = 0; b < series[s].bins.size(); ++b) {
      const auto& bin = series[s].bins[b];
      out << series[s].bin_end_step(b) << ',' << ids[s].run << ','
          << to_string(ids[s].mode) << ',';
      if (bin.has)
        out << detail::csv_num(bin.mean);
      else
        out << "missing";
      out << ',' << bin.count << ',' << series[s].excluded << "\n";
    }
  }
}

inline void write_t_series_csv(const fs::path& path, const TSeries& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bin_end_step,t,df,t_critical,significant\n";
  for (std::size_t b = 0; b < t.bins.size(); ++b) {
    const auto& bin = t.bins[b];
    out << t.bin_end_step(b) << ',';
    if (!bin.has) {
      out << "missing,,,\n";
      continue;
    }
    out << detail::csv_num(bin.t) << ',' << bin.df << ','
        << detail::csv_num(bin.critical) << ','
        << (t_significant(bin, t.two_tailed) ? 1 : 0) << "\n";
  }
}

struct GCRow {
  int step = 0;
  int run = 0;
  RunMode mode = RunMode::Driven;
  double gc = 0.0;
  int population = 0;
  double bit_freq = 0.0;
};

inline void write_gc_csv(const fs::path& path, const std::vector<GCRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,run_id,mode,gc,population\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.run << ',' << to_string(r.mode) << ','
        << detail::csv_num(r.gc) << ',' << r.population << "\n";
}

inline void write_bitfreq_csv(const fs::path& path,
                              const std::vector<GCRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,run_id,mode,bit_freq\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.run << ',' << to_string(r.mode) << ','
        << detail::csv_num(r.bit_freq) << "\n";
}

inline void write_histogram_csv(const fs::path& path, const HistogramSeries& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# edges=";
  for (std::size_t i = 0; i < h.edges.size(); ++i) {
    if (i) out << ';';
    out << detail::csv_num(h.edges[i]);
  }
  out << "\n";
  out << "time_bin,value_bin,count\n";
  for (std::size_t tb = 0; tb < h.counts.size(); ++tb)
    for (std::size_t vb = 0; vb < h.counts[tb].size(); ++vb)
      out << tb + 1 << ',' << vb << ',' << h.counts[tb][vb] << "\n";
}

}  // namespace evotrend
