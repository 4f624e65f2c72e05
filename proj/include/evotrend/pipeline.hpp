#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evotrend/analysis.hpp"
#include "evotrend/artifacts.hpp"
#include "evotrend/complexity.hpp"
#include "evotrend/config.hpp"

namespace evotrend {

struct AnalyzeOptions {
  NeuronFilter filter = NeuronFilter::Processing;
  int bin_width = 0;  // 0: take the run config's analysis.bin_width
};

struct AnalyzeResult {
  int pairs_analyzed = 0;
  int bin_width = 0;
  std::vector<std::string> missing;  // artifacts skipped, one message each
  TSeries t_series;
  std::vector<RunSeriesId> series_ids;
  std::vector<BinnedSeries> series;  // aligned with series_ids
  fs::path out_dir;
};

namespace detail {

struct LoadedRun {
  int pair = 0;
  RunMode mode = RunMode::Driven;
  fs::path dir;
  std::vector<ComplexityReport> reports;
};

inline void check_artifact_identity(const ArtifactHeader& h,
                                    std::uint64_t config_hash,
                                    const std::string& what) {
  if (h.version != kArtifactVersion)
    throw IoError("artifact version mismatch in " + what);
  if (h.config_hash != config_hash)
    throw IoError("artifact config hash mismatch in " + what);
}

inline std::vector<ComplexityReport> reports_for_run(
    const fs::path& run_dir, std::uint64_t config_hash, NeuronFilter filter,
    const ComplexityConfig& ccfg) {
  std::vector<ComplexityReport> reports;
  for (const auto& path : list_trace_files(RunPaths{run_dir}.traces())) {
    TraceFile file = read_trace_file(path);
    check_artifact_identity(file.header, config_hash, path.string());
    reports.push_back(compute_report(file.recording, filter, ccfg));
  }
  return reports;
}

// Plot-support table: one row per bin, columns for each run plus the means
// and the t series. Missing values become "nan" so gnuplot skips them.
inline void write_fig1_table(const fs::path& path,
                             const std::vector<BinnedSeries>& driven,
                             const std::vector<BinnedSeries>& passive,
                             const TSeries& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# bin_end";
  for (std::size_t i = 0; i < driven.size(); ++i) out << "\tdriven_" << i;
  for (std::size_t i = 0; i < passive.size(); ++i) out << "\tpassive_" << i;
  out << "\tdriven_mean\tpassive_mean\tt\tt_critical\n";
  std::size_t nbins = t.bins.size();
  for (const auto& s : driven) nbins = std::max(nbins, s.bins.size());
  auto cell = [](const std::vector<BinnedSeries>& set, std::size_t i,
                 std::size_t b) {
    if (b >= set[i].bins.size() || !set[i].bins[b].has)
      return std::string("nan");
    return detail::csv_num(set[i].bins[b].mean);
  };
  for (std::size_t b = 0; b < nbins; ++b) {
    out << (b + 1) * static_cast<std::size_t>(t.width ? t.width : 1);
    double dsum = 0, psum = 0;
    int dn = 0, pn = 0;
    for (std::size_t i = 0; i < driven.size(); ++i) {
      out << '\t' << cell(driven, i, b);
      if (b < driven[i].bins.size() && driven[i].bins[b].has) {
        dsum += driven[i].bins[b].mean;
        ++dn;
      }
    }
    for (std::size_t i = 0; i < passive.size(); ++i) {
      out << '\t' << cell(passive, i, b);
      if (b < passive[i].bins.size() && passive[i].bins[b].has) {
        psum += passive[i].bins[b].mean;
        ++pn;
      }
    }
    out << '\t' << (dn ? detail::csv_num(dsum / dn) : "nan");
    out << '\t' << (pn ? detail::csv_num(psum / pn) : "nan");
    if (b < t.bins.size() && t.bins[b].has && !t.bins[b].infinite)
      out << '\t' << detail::csv_num(t.bins[b].t) << '\t'
          << detail::csv_num(t.bins[b].critical);
    else
      out << "\tnan\tnan";
    out << "\n";
  }
}

inline void write_fig2_table(const fs::path& path,
                             const std::vector<GCRow>& rows, int n_pairs) {
  // step-indexed wide table: gc per run, then per-mode means
  std::map<int, std::map<std::pair<int, int>, double>> by_step;
  for (const auto& r : rows)
    by_step[r.step][{r.run, r.mode == RunMode::Driven ? 0 : 1}] = r.gc;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# step";
  for (int i = 0; i < n_pairs; ++i) out << "\tdriven_" << i;
  for (int i = 0; i < n_pairs; ++i) out << "\tpassive_" << i;
  out << "\tdriven_mean\tpassive_mean\n";
  for (const auto& [step, cells] : by_step) {
    out << step;
    double sums[2] = {0, 0};
    int counts[2] = {0, 0};
    for (int m = 0; m < 2; ++m) {
      for (int i = 0; i < n_pairs; ++i) {
        auto it = cells.find({i, m});
        if (it == cells.end()) {
          out << "\tnan";
        } else {
          out << '\t' << detail::csv_num(it->second);
          sums[m] += it->second;
          counts[m]++;
        }
      }
    }
    out << '\t' << (counts[0] ? detail::csv_num(sums[0] / counts[0]) : "nan");
    out << '\t' << (counts[1] ? detail::csv_num(sums[1] / counts[1]) : "nan");
    out << "\n";
  }
}

inline void write_hist_matrix(const fs::path& path, const HistogramSeries& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : h.counts) {
    for (std::size_t vb = 0; vb < row.size(); ++vb) {
      if (vb) out << '\t';
      out << row[vb];
    }
    out << "\n";
  }
}

inline void write_plot_scripts(const fs::path& out_dir, int n_pairs,
                               const std::vector<std::string>& hist_matrices) {
  {
    std::ofstream gp(out_dir / "fig_complexity.gp", std::ios::binary);
    gp << "# gnuplot script: per-run complexity means, cross-run means,\n"
          "# and the dependent t series against its critical line.\n"
          "set datafile missing 'nan'\n"
          "set xlabel 'time step'\n"
          "set ylabel 'mean complexity (bits)'\n"
          "set y2label 't statistic'\n"
          "set y2tics\n"
          "set key outside\n"
          "plot \\\n";
    for (int i = 0; i < n_pairs; ++i)
      gp << "  'fig1_data.tsv' using 1:" << 2 + i
         << " with lines lc rgb '#88cc88' lw 1 title '', \\\n";
    for (int i = 0; i < n_pairs; ++i)
      gp << "  'fig1_data.tsv' using 1:" << 2 + n_pairs + i
         << " with lines dt 2 lc rgb '#cc8888' lw 1 title '', \\\n";
    const int mean_col = 2 + 2 * n_pairs;
    gp << "  'fig1_data.tsv' using 1:" << mean_col
       << " with lines lc rgb '#117711' lw 3 title 'driven mean', \\\n";
    gp << "  'fig1_data.tsv' using 1:" << mean_col + 1
       << " with lines dt 2 lc rgb '#aa1111' lw 3 title 'passive mean', \\\n";
    gp << "  'fig1_data.tsv' using 1:" << mean_col + 2
       << " axes x1y2 with lines dt 3 lc rgb '#333333' title 't', \\\n";
    gp << "  'fig1_data.tsv' using 1:" << mean_col + 3
       << " axes x1y2 with lines lc rgb '#999999' title 'T*'\n";
  }
  {
    std::ofstream gp(out_dir / "fig_gc.gp", std::ios::binary);
    gp << "# gnuplot script: genomic consistency vs. time.\n"
          "set datafile missing 'nan'\n"
          "set xlabel 'time step'\n"
          "set ylabel 'genomic consistency'\n"
          "set key outside\n"
          "plot \\\n";
    for (int i = 0; i < n_pairs; ++i)
      gp << "  'fig2_data.tsv' using 1:" << 2 + i
         << " with lines lc rgb '#88cc88' lw 1 title '', \\\n";
    for (int i = 0; i < n_pairs; ++i)
      gp << "  'fig2_data.tsv' using 1:" << 2 + n_pairs + i
         << " with lines dt 2 lc rgb '#cc8888' lw 1 title '', \\\n";
    const int mean_col = 2 + 2 * n_pairs;
    gp << "  'fig2_data.tsv' using 1:" << mean_col
       << " with lines lc rgb '#117711' lw 3 title 'driven mean', \\\n";
    gp << "  'fig2_data.tsv' using 1:" << mean_col + 1
       << " with lines dt 2 lc rgb '#aa1111' lw 3 title 'passive mean'\n";
  }
  {
    std::ofstream gp(out_dir / "fig_histograms.gp", std::ios::binary);
    gp << "# gnuplot script: complexity histogram heatmaps over time.\n"
          "set xlabel 'complexity bin'\n"
          "set ylabel 'time bin'\n"
          "set palette defined (0 'white', 1 'navy')\n"
          "unset key\n";
    int idx = 0;
    for (const auto& name : hist_matrices) {
      gp << "set title '" << name << "'\n";
      gp << "plot '" << name << "' matrix with image\n";
      if (++idx < static_cast<int>(hist_matrices.size())) gp << "pause -1\n";
    }
  }
}

}  // namespace detail

// Full post-hoc pipeline over a completed (or partially completed) pair set:
// per-agent complexity, per-run binned means, the paired t series, genomic
// consistency and bit-frequency series, histograms, and plot scripts.
inline AnalyzeResult analyze_runset(const fs::path& manifest_path,
                                    const fs::path& out_dir,
                                    const AnalyzeOptions& opts = {}) {
  const RunSetManifest manifest = read_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();

  std::vector<const PairEntry*> ready;
  for (const auto& p : manifest.pairs)
    if (p.driven_done && p.lockstep_done && !p.failed) ready.push_back(&p);
  if (ready.empty())
    throw IoError("nothing to analyze: no completed pairs in " +
                  manifest_path.string());

  // One run config governs the whole set; take it from the first completed
  // driven run and verify it hashes to the manifest's value.
  const fs::path cfg_path = root / ready.front()->driven_dir / "config.cfg";
  RunConfig cfg = load_config_file(cfg_path);
  if (config_hash(cfg) != manifest.config_hash)
    throw IoError("run config does not match manifest: " + cfg_path.string());

  AnalyzeResult result;
  result.out_dir = out_dir;
  result.bin_width = opts.bin_width > 0 ? opts.bin_width : cfg.analysis.bin_width;
  fs::create_directories(out_dir);

  std::vector<BinnedSeries> driven_series, passive_series;
  std::vector<GCRow> gc_rows;
  std::vector<std::string> hist_names;

  for (const PairEntry* pair : ready) {
    struct ModeRun {
      RunMode mode;
      fs::path dir;
    };
    const ModeRun runs[2] = {
        {RunMode::Driven, root / pair->driven_dir},
        {RunMode::Lockstep, root / pair->lockstep_dir},
    };
    // pairing integrity: the lockstep run must have consumed exactly the
    // schedule its driven partner produced
    const std::uint64_t driven_events_hash =
        file_hash(RunPaths{runs[0].dir}.events());
    if (!pair->schedule_hash.empty() &&
        parse_hex64(pair->schedule_hash) != driven_events_hash)
      throw ScheduleError("pair " + std::to_string(pair->index) +
                          ": driven event log does not match the manifest");
    {
      std::ifstream info(RunPaths{runs[1].dir}.run_info());
      if (info) {
        nlohmann::json j;
        info >> j;
        if (j.contains("schedule_hash") &&
            parse_hex64(j["schedule_hash"].get<std::string>()) !=
                driven_events_hash)
          throw ScheduleError("pair " + std::to_string(pair->index) +
                              ": lockstep consumed a different schedule");
      }
    }

    // A pair contributes to the t series only when both runs load; a clean
    // half still shows up in the per-run outputs.
    std::array<std::optional<BinnedSeries>, 2> loaded;
    std::vector<GCRow> pair_gc;
    for (int r = 0; r < 2; ++r) {
      const auto& run = runs[r];
      try {
        auto reports = detail::reports_for_run(run.dir, manifest.config_hash,
                                               opts.filter, cfg.complexity);
        char name[64];
        std::snprintf(name, sizeof name, "reports_%s_pair%02d.csv",
                      to_string(run.mode).c_str(), pair->index);
        write_reports_csv(out_dir / name, reports);

        BinnedSeries series = bin_by_death(reports, result.bin_width, cfg.steps);
        result.series_ids.push_back(RunSeriesId{pair->index, run.mode});
        result.series.push_back(series);

        HistogramSeries hist = histogram_series(
            reports, result.bin_width, cfg.analysis.histogram_bins, cfg.steps);
        std::snprintf(name, sizeof name, "hist_%s_pair%02d.csv",
                      to_string(run.mode).c_str(), pair->index);
        write_histogram_csv(out_dir / name, hist);
        std::snprintf(name, sizeof name, "hist_%s_%02d.tsv",
                      to_string(run.mode).c_str(), pair->index);
        detail::write_hist_matrix(out_dir / name, hist);
        hist_names.emplace_back(name);

        SnapshotFile snaps = read_snapshots(RunPaths{run.dir}.snapshots());
        detail::check_artifact_identity(snaps.header, manifest.config_hash,
                                        "snapshots of pair " +
                                            std::to_string(pair->index));
        for (const auto& block : snaps.blocks) {
          GCRow row;
          row.step = block.step;
          row.run = pair->index;
          row.mode = run.mode;
          row.gc = genomic_consistency(block.genomes).gc;
          row.population = static_cast<int>(block.genomes.size());
          row.bit_freq = bit_frequency(block.genomes);
          pair_gc.push_back(row);
        }
        loaded[static_cast<std::size_t>(r)] = std::move(series);
      } catch (const ScheduleError&) {
        throw;
      } catch (const std::exception& e) {
        result.missing.push_back("pair " + std::to_string(pair->index) + " " +
                                 to_string(run.mode) + ": " + e.what());
      }
    }
    gc_rows.insert(gc_rows.end(), pair_gc.begin(), pair_gc.end());
    if (loaded[0] && loaded[1]) {
      driven_series.push_back(std::move(*loaded[0]));
      passive_series.push_back(std::move(*loaded[1]));
      ++result.pairs_analyzed;
    }
  }

  if (driven_series.empty())
    throw IoError("nothing to analyze: no fully loaded pairs");

  result.t_series = paired_t(driven_series, passive_series, cfg.analysis.alpha,
                             cfg.analysis.two_tailed);

  write_mean_series_csv(out_dir / "mean_series.csv", result.series_ids,
                        result.series);
  write_t_series_csv(out_dir / "t_series.csv", result.t_series);
  write_gc_csv(out_dir / "gc.csv", gc_rows);
  write_bitfreq_csv(out_dir / "bitfreq.csv", gc_rows);
  detail::write_fig1_table(out_dir / "fig1_data.tsv", driven_series,
                           passive_series, result.t_series);
  detail::write_fig2_table(out_dir / "fig2_data.tsv", gc_rows,
                           static_cast<int>(ready.size()));
  detail::write_plot_scripts(out_dir, static_cast<int>(driven_series.size()),
                             hist_names);
  return result;
}

}  // namespace evotrend
