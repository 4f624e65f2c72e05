// Command-line front end: single runs, paired driven/lockstep run sets,
// the analysis pipeline, and the complexity-as-fitness mode.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "evotrend/config.hpp"
#include "evotrend/pipeline.hpp"
#include "evotrend/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitInconsistency = 3;

// Relative output paths land under EVOTREND_OUT when it is set.
evotrend::fs::path resolve_out(const std::string& out) {
  evotrend::fs::path p(out);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("EVOTREND_OUT"))
    return evotrend::fs::path(root) / p;
  return p;
}

void print_summary(const char* label, const evotrend::RunSummary& s,
                   const evotrend::fs::path& dir) {
  std::cout << label << ": births=" << s.births << " deaths=" << s.deaths
            << " final_population=" << s.final_population
            << " traces=" << s.traces_written << " wall=" << s.wall_seconds
            << "s -> " << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolutionary ecology simulator with paired passive replays "
               "and neural complexity analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out = "out";
  std::string schedule;
  std::string mode_flag;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", config_path, "run configuration file");
    if (needs_config) c->required();
    cmd->add_option("--out", out, "artifact directory");
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t v) {
          seed_flag = v;
          seed_set = true;
        },
        "random seed (overrides config)");
  };

  auto* cmd_run = app.add_subcommand("run", "execute one simulation run");
  add_common(cmd_run, true);
  cmd_run->add_option("--mode", mode_flag, "driven | lockstep | fitness");
  cmd_run->add_option("--schedule", schedule,
                      "driven event log to replay (lockstep mode)");

  int n_pairs = 10;
  int jobs = 1;
  auto* cmd_pairset =
      app.add_subcommand("pairset", "run paired driven/lockstep simulations");
  add_common(cmd_pairset, true);
  cmd_pairset->add_option("--pairs", n_pairs, "number of pairs")
      ->check(CLI::PositiveNumber);
  cmd_pairset->add_option("--jobs", jobs, "concurrent pairs")
      ->check(CLI::PositiveNumber);

  std::string manifest_path;
  std::string neurons = "processing";
  int bin_width = 0;
  auto* cmd_analyze =
      app.add_subcommand("analyze", "compute the report bundle for a run set");
  cmd_analyze->add_option("--manifest", manifest_path, "pair-set manifest")
      ->required();
  cmd_analyze->add_option("--out", out, "report directory");
  cmd_analyze->add_option("--neurons", neurons,
                          "complexity columns: all | input | processing");
  cmd_analyze->add_option("--bin-width", bin_width,
                          "death-bin width in steps (default from config)");

  auto* cmd_fitness = app.add_subcommand(
      "fitness", "driven run with complexity-as-fitness replacement");
  add_common(cmd_fitness, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_run->parsed() || cmd_fitness->parsed()) {
      evotrend::RunConfig cfg = evotrend::load_config_file(config_path);
      if (cmd_fitness->parsed()) cfg.mode = evotrend::RunMode::Fitness;
      if (!mode_flag.empty()) cfg.mode = evotrend::parse_run_mode(mode_flag);
      if (seed_set) cfg.seed = seed_flag;
      evotrend::validate(cfg);
      const auto dir = resolve_out(out);
      switch (cfg.mode) {
        case evotrend::RunMode::Driven: {
          print_summary("driven", evotrend::run_driven(cfg, cfg.seed, dir), dir);
          break;
        }
        case evotrend::RunMode::Lockstep: {
          if (schedule.empty()) {
            std::cerr << "error: lockstep requires a driven event log "
                         "(--schedule)\n";
            return kExitUsage;
          }
          print_summary("lockstep",
                        evotrend::run_lockstep(cfg, cfg.seed, schedule, dir),
                        dir);
          break;
        }
        case evotrend::RunMode::Fitness: {
          print_summary("fitness", evotrend::run_fitness(cfg, cfg.seed, dir),
                        dir);
          break;
        }
      }
    } else if (cmd_pairset->parsed()) {
      evotrend::RunConfig cfg = evotrend::load_config_file(config_path);
      if (seed_set) cfg.seed = seed_flag;
      evotrend::validate(cfg);
      const auto dir = resolve_out(out);
      const auto manifest =
          evotrend::run_pairset(cfg, n_pairs, cfg.seed, dir, jobs);
      int done = 0, failed = 0;
      for (const auto& p : manifest.pairs) {
        if (p.failed) ++failed;
        if (p.driven_done && p.lockstep_done && !p.failed) ++done;
      }
      std::cout << "pairset: " << done << "/" << manifest.n_pairs
                << " pairs complete";
      if (failed) std::cout << ", " << failed << " failed";
      std::cout << " -> " << dir.string() << "\n";
      if (done == 0) return kExitRuntime;
    } else if (cmd_analyze->parsed()) {
      evotrend::AnalyzeOptions opts;
      opts.filter = evotrend::parse_neuron_filter(neurons);
      opts.bin_width = bin_width;
      const auto dir = resolve_out(out);
      const auto result = evotrend::analyze_runset(manifest_path, dir, opts);
      std::cout << "analyze: " << result.pairs_analyzed
                << " pairs, bin width " << result.bin_width << " -> "
                << dir.string() << "\n";
      for (const auto& m : result.missing)
        std::cout << "  skipped: " << m << "\n";
    }
  } catch (const evotrend::ScheduleError& e) {
    std::cerr << "inconsistency: " << e.what() << "\n";
    return kExitInconsistency;
  } catch (const evotrend::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
