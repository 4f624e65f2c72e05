#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "evotrend/artifacts.hpp"
#include "support/temp_dir.hpp"

using namespace evotrend;

namespace {

ArtifactHeader header() {
  ArtifactHeader h;
  h.config_hash = 0xdeadbeef12345678ull;
  h.seed = 424242;
  h.mode = RunMode::Driven;
  return h;
}

}  // namespace

TEST_CASE("bit packing uses MSB-first site order") {
  Genome g;
  g.bits = {1, 0, 0, 0, 0, 0, 0, 1, 1};  // 9 sites
  const auto packed = pack_bits(g);
  REQUIRE(packed.size() == 2);
  REQUIRE(packed[0] == 0x81);  // site 0 -> bit 7, site 7 -> bit 0
  REQUIRE(packed[1] == 0x80);  // site 8 -> bit 7
  REQUIRE(unpack_bits(packed, 9) == g);
}

TEST_CASE("event log round trip") {
  TempDir dir;
  EventLog log;
  log.push(Event{3, EventKind::Death, 7, 0, 0, DeathCause::Starvation});
  log.push(Event{3, EventKind::Birth, 31, 4, 17, DeathCause::None});
  log.push(Event{10, EventKind::Death, 4, 0, 0, DeathCause::Killed});
  const auto path = dir.path / "events.csv";
  write_event_log(path, header(), 500, 30, log);

  const EventLogFile file = read_event_log(path);
  REQUIRE(file.header.config_hash == header().config_hash);
  REQUIRE(file.header.seed == 424242);
  REQUIRE(file.header.mode == RunMode::Driven);
  REQUIRE(file.steps == 500);
  REQUIRE(file.initial_population == 30);
  REQUIRE(file.log.size() == 3);
  REQUIRE(file.log.events()[0].cause == DeathCause::Starvation);
  REQUIRE(file.log.events()[1].kind == EventKind::Birth);
  REQUIRE(file.log.events()[1].parent2 == 17);

  SECTION("the header line carries the hash, seed and mode") {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    REQUIRE(line.find("config_hash=deadbeef12345678") != std::string::npos);
    REQUIRE(line.find("seed=424242") != std::string::npos);
    REQUIRE(line.find("mode=driven") != std::string::npos);
  }
  SECTION("non-monotone steps are rejected") {
    EventLog bad;
    bad.push(Event{5, EventKind::Birth, 1, 0, 0, DeathCause::None});
    REQUIRE_THROWS_AS(
        bad.push(Event{4, EventKind::Birth, 2, 0, 0, DeathCause::None}),
        IoError);
  }
}

TEST_CASE("population csv round trip") {
  TempDir dir;
  const std::vector<PopulationRow> rows = {
      {0, 30, 0, 0}, {1, 31, 2, 1}, {2, 31, 0, 0}};
  const auto path = dir.path / "population.csv";
  write_population_csv(path, header(), rows);
  const auto got = read_population_csv(path);
  REQUIRE(got.size() == 3);
  REQUIRE(got[1].births == 2);
  REQUIRE(got[2].population == 31);
}

TEST_CASE("snapshot file round trip, id order preserved") {
  TempDir dir;
  Genome a, b;
  a.bits.assign(16, 0);
  b.bits.assign(16, 1);
  a.bits[3] = 1;
  const auto path = dir.path / "snapshots.bin";
  {
    SnapshotWriter writer(path, header(), 16);
    writer.add(0, {&a, &b});
    writer.add(500, {&b});
    writer.close();
  }
  const SnapshotFile file = read_snapshots(path);
  REQUIRE(file.genome_length == 16);
  REQUIRE(file.header.seed == 424242);
  REQUIRE(file.blocks.size() == 2);
  REQUIRE(file.blocks[0].step == 0);
  REQUIRE(file.blocks[0].genomes.size() == 2);
  REQUIRE(file.blocks[0].genomes[0] == a);
  REQUIRE(file.blocks[0].genomes[1] == b);
  REQUIRE(file.blocks[1].step == 500);
  REQUIRE(file.blocks[1].genomes[0] == b);
}

TEST_CASE("trace file round trip preserves exact floats and roles") {
  TempDir dir;
  TraceRecording rec;
  rec.agent_id = 77;
  rec.birth_step = 10;
  rec.death_step = 14;
  rec.n_total = 3;
  rec.n_input = 2;
  rec.is_input = {1, 1, 0};
  rec.data.resize(4, 3);
  float v = 0.1f;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) rec.data(i, j) = (v += 0.061f);
  const auto path = dir.path / trace_filename(rec.agent_id);
  write_trace_file(path, header(), rec);

  const TraceFile file = read_trace_file(path);
  REQUIRE(file.header.config_hash == header().config_hash);
  REQUIRE(file.recording.agent_id == 77);
  REQUIRE(file.recording.birth_step == 10);
  REQUIRE(file.recording.death_step == 14);
  REQUIRE(file.recording.n_input == 2);
  REQUIRE(file.recording.is_input == rec.is_input);
  REQUIRE(file.recording.data == rec.data);  // bit-exact
}

TEST_CASE("config parsing") {
  SECTION("flat key = value with comments") {
    const RunConfig cfg = parse_config_text(
        "# a comment\n"
        "run.steps = 123\n"
        "world.pop_max = 44   # trailing comment\n"
        "genome.length=2048\n");
    REQUIRE(cfg.steps == 123);
    REQUIRE(cfg.world.pop_max == 44);
    REQUIRE(cfg.genome.length == 2048);
  }
  SECTION("unknown keys are rejected") {
    REQUIRE_THROWS_AS(parse_config_text("world.pop_maximum = 3\n"), ConfigError);
  }
  SECTION("malformed values are rejected") {
    REQUIRE_THROWS_AS(parse_config_text("run.steps = soon\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("run.steps\n"), ConfigError);
  }
  SECTION("hash ignores seed and mode but not substance") {
    RunConfig a;
    RunConfig b;
    b.seed = 999;
    b.mode = RunMode::Lockstep;
    REQUIRE(config_hash(a) == config_hash(b));
    b.world.pop_max = 121;
    REQUIRE(config_hash(a) != config_hash(b));
  }
  SECTION("canonical form round-trips through the parser") {
    RunConfig a;
    a.world.pressure_high = 2.75;
    a.steps = 777;
    const RunConfig b = parse_config_text(canonical_config(a));
    REQUIRE(config_hash(a) == config_hash(b));
    REQUIRE(b.world.pressure_high == 2.75);
  }
  SECTION("validation catches inconsistent bounds") {
    RunConfig bad;
    bad.world.pop_min = 50;
    bad.world.pop_max = 10;
    REQUIRE_THROWS_AS(validate(bad), ConfigError);
    RunConfig bad2;
    bad2.world.birth_energy_fraction = 0.9;
    REQUIRE_THROWS_AS(validate(bad2), ConfigError);
    RunConfig good;
    REQUIRE_NOTHROW(validate(good));
  }
}

TEST_CASE("gene map csv lists name, offset, width and range") {
  TempDir dir;
  GenomeConfig gc;
  BrainConfig bc;
  const GeneMap map = build_gene_map(gc, bc);
  const auto path = dir.path / "genemap.csv";
  write_gene_map_csv(path, map);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "name,offset,width,min,max");
  std::getline(in, line);
  REQUIRE(line.rfind("mutation_rate,0,8,", 0) == 0);
  std::size_t rows = 1;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == map.entries().size());
}

TEST_CASE("manifest round trip and completion markers") {
  TempDir dir;
  RunSetManifest m;
  m.config_hash = 0xabc;
  m.base_seed = 100;
  m.n_pairs = 2;
  for (int i = 0; i < 2; ++i) {
    PairEntry p;
    p.index = i;
    p.driven_seed = 100 + static_cast<std::uint64_t>(i);
    p.lockstep_seed = 100 + static_cast<std::uint64_t>(i) + 1000000;
    p.driven_dir = "pair_0" + std::to_string(i) + "/driven";
    p.lockstep_dir = "pair_0" + std::to_string(i) + "/lockstep";
    p.driven_done = i == 0;
    m.pairs.push_back(p);
  }
  const auto path = dir.path / "manifest.json";
  write_manifest(path, m);
  const RunSetManifest got = read_manifest(path);
  REQUIRE(got.config_hash == 0xabc);
  REQUIRE(got.n_pairs == 2);
  REQUIRE(got.pairs[0].driven_done);
  REQUIRE(!got.pairs[1].driven_done);
  REQUIRE(got.pairs[1].lockstep_seed == 100 + 1 + 1000000);

  SECTION("completion markers match on hash, seed and mode") {
    RunPaths paths{dir.path};
    ArtifactHeader h = header();
    write_done_marker(paths, h);
    REQUIRE(run_complete(paths, h.config_hash, h.seed, RunMode::Driven));
    REQUIRE(!run_complete(paths, h.config_hash, h.seed, RunMode::Lockstep));
    REQUIRE(!run_complete(paths, h.config_hash + 1, h.seed, RunMode::Driven));
    REQUIRE(!run_complete(RunPaths{dir.path / "nope"}, h.config_hash, h.seed,
                          RunMode::Driven));
  }
}

TEST_CASE("reports csv layout") {
  TempDir dir;
  std::vector<ComplexityReport> reports(2);
  reports[0].agent_id = 5;
  reports[0].death_step = 123;
  reports[0].filter = NeuronFilter::Processing;
  reports[0].c_approx = 0.25;
  reports[0].c_exact = 0.24;
  reports[0].integration = 1.5;
  reports[0].entropy = 9.0;
  reports[0].valid = true;
  reports[1].agent_id = 6;
  reports[1].death_step = 140;
  reports[1].valid = false;
  reports[1].reason = "insufficient samples";
  const auto path = dir.path / "reports.csv";
  write_reports_csv(path, reports);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  REQUIRE(line ==
          "agent_id,death_step,filter,C_approx,C_exact,integration,entropy,"
          "valid,reason");
  std::getline(in, line);
  REQUIRE(line == "5,123,processing,0.25,0.24,1.5,9,1,");
  std::getline(in, line);
  REQUIRE(line == "6,140,processing,,,,,0,insufficient samples");
}
