#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evotrend/complexity.hpp"
#include "evotrend/config.hpp"
#include "evotrend/events.hpp"
#include "evotrend/genome.hpp"
#include "evotrend/hash.hpp"
#include "evotrend/world.hpp"

#include "json.hpp"

namespace evotrend {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kArtifactVersion = 1;

// Identity stamped on every artifact: analysis refuses mixed versions and
// mismatched configs.
struct ArtifactHeader {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Driven;
  std::uint32_t version = kArtifactVersion;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}
inline void put_u8(std::ostream& out, std::uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), 1);
}
inline void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline std::uint8_t get_u8(std::istream& in) {
  char c;
  in.read(&c, 1);
  return static_cast<std::uint8_t>(c);
}
inline float get_f32(std::istream& in) {
  const std::uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void write_magic(std::ostream& out, const char magic[4]) {
  out.write(magic, 4);
}
inline void expect_magic(std::istream& in, const char magic[4],
                         const std::string& what) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw IoError("bad magic in " + what);
}

inline void put_header(std::ostream& out, const ArtifactHeader& h) {
  put_u32(out, h.version);
  put_u64(out, h.config_hash);
  put_u64(out, h.seed);
  put_u8(out, static_cast<std::uint8_t>(h.mode));
}
inline ArtifactHeader get_header(std::istream& in) {
  ArtifactHeader h;
  h.version = get_u32(in);
  h.config_hash = get_u64(in);
  h.seed = get_u64(in);
  h.mode = static_cast<RunMode>(get_u8(in));
  return h;
}

inline std::string header_comment(const char* kind, const ArtifactHeader& h) {
  std::ostringstream out;
  out << "# evotrend-" << kind << " v" << h.version
      << " config_hash=" << to_hex(h.config_hash) << " seed=" << h.seed
      << " mode=" << to_string(h.mode);
  return out.str();
}

// "# evotrend-<kind> v<N> ..." -> N
inline std::uint32_t header_version(const std::string& line) {
  auto pos = line.find(" v");
  if (pos == std::string::npos) throw IoError("missing artifact version");
  return static_cast<std::uint32_t>(std::stoul(line.substr(pos + 2)));
}

// Parses "key=value" tokens out of a header comment line.
inline std::string header_field(const std::string& line, const std::string& key) {
  const std::string needle = key + "=";
  auto pos = line.find(needle);
  if (pos == std::string::npos)
    throw IoError("missing header field '" + key + "'");
  pos += needle.size();
  auto end = line.find(' ', pos);
  if (end == std::string::npos) end = line.size();
  return line.substr(pos, end - pos);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    auto comma = line.find(',', begin);
    if (comma == std::string::npos) {
      out.push_back(line.substr(begin));
      break;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Event log: one CSV line per event, deaths before births within a step.

struct EventLogFile {
  ArtifactHeader header;
  int steps = 0;
  int initial_population = 0;
  EventLog log;
};

inline void write_event_log(const fs::path& path, const ArtifactHeader& h,
                            int steps, int initial_population,
                            const EventLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << detail::header_comment("events", h) << " steps=" << steps
      << " initial_population=" << initial_population << "\n";
  out << "step,kind,agent_id,parent1,parent2,cause\n";
  for (const auto& e : log.events()) {
    out << e.step << ',';
    if (e.kind == EventKind::Birth)
      out << "birth," << e.agent_id << ',' << e.parent1 << ',' << e.parent2
          << ",\n";
    else
      out << "death," << e.agent_id << ",,," << to_string(e.cause) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline EventLogFile read_event_log(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EventLogFile out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# evotrend-events", 0) != 0)
    throw IoError("not an event log: " + path.string());
  out.header.version = detail::header_version(line);
  out.header.config_hash = parse_hex64(detail::header_field(line, "config_hash"));
  out.header.seed = std::stoull(detail::header_field(line, "seed"));
  out.header.mode = parse_run_mode(detail::header_field(line, "mode"));
  out.steps = std::stoi(detail::header_field(line, "steps"));
  out.initial_population =
      std::stoi(detail::header_field(line, "initial_population"));
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 6) throw IoError("bad event row: " + line);
    Event e;
    e.step = std::stoi(f[0]);
    if (f[1] == "birth") {
      e.kind = EventKind::Birth;
      e.agent_id = static_cast<std::uint32_t>(std::stoul(f[2]));
      e.parent1 = static_cast<std::uint32_t>(std::stoul(f[3]));
      e.parent2 = static_cast<std::uint32_t>(std::stoul(f[4]));
    } else if (f[1] == "death") {
      e.kind = EventKind::Death;
      e.agent_id = static_cast<std::uint32_t>(std::stoul(f[2]));
      e.cause = parse_death_cause(f[5]);
    } else {
      throw IoError("bad event kind: " + f[1]);
    }
    out.log.push(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Population series CSV.

inline void write_population_csv(const fs::path& path, const ArtifactHeader& h,
                                 const std::vector<PopulationRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << detail::header_comment("population", h) << "\n";
  out << "step,population,births,deaths\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.population << ',' << r.births << ',' << r.deaths
        << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::vector<PopulationRow> read_population_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# evotrend-population", 0) != 0)
    throw IoError("not a population series: " + path.string());
  std::getline(in, line);
  std::vector<PopulationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw IoError("bad population row: " + line);
    rows.push_back(PopulationRow{std::stoi(f[0]), std::stoi(f[1]),
                                 std::stoi(f[2]), std::stoi(f[3])});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Genome snapshots: binary blocks of bit-packed genomes in id order.

struct SnapshotBlock {
  int step = 0;
  std::vector<Genome> genomes;
};

class SnapshotWriter {
public:
  SnapshotWriter(const fs::path& path, const ArtifactHeader& h,
                 std::size_t genome_length)
      : out_(path, std::ios::binary), genome_length_(genome_length) {
    if (!out_) throw IoError("cannot write " + path.string());
    detail::write_magic(out_, "EVSN");
    detail::put_header(out_, h);
    detail::put_u32(out_, static_cast<std::uint32_t>(genome_length));
  }

  void add(int step, const std::vector<const Genome*>& genomes) {
    detail::put_u32(out_, static_cast<std::uint32_t>(step));
    detail::put_u32(out_, static_cast<std::uint32_t>(genomes.size()));
    for (const Genome* g : genomes) {
      const auto packed = pack_bits(*g);
      out_.write(reinterpret_cast<const char*>(packed.data()),
                 static_cast<std::streamsize>(packed.size()));
    }
    if (!out_) throw IoError("snapshot write failed");
  }

  void close() { out_.close(); }

private:
  std::ofstream out_;
  std::size_t genome_length_;
};

struct SnapshotFile {
  ArtifactHeader header;
  std::size_t genome_length = 0;
  std::vector<SnapshotBlock> blocks;
};

inline SnapshotFile read_snapshots(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  detail::expect_magic(in, "EVSN", path.string());
  SnapshotFile out;
  out.header = detail::get_header(in);
  out.genome_length = detail::get_u32(in);
  const std::size_t bytes = (out.genome_length + 7) / 8;
  while (true) {
    const std::uint32_t step = detail::get_u32(in);
    if (!in) break;
    const std::uint32_t count = detail::get_u32(in);
    SnapshotBlock block;
    block.step = static_cast<int>(step);
    block.genomes.reserve(count);
    std::vector<std::uint8_t> buf(bytes);
    for (std::uint32_t i = 0; i < count; ++i) {
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(bytes));
      if (!in) throw IoError("truncated snapshot file: " + path.string());
      block.genomes.push_back(unpack_bits(buf, out.genome_length));
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-agent lifetime activation traces.

inline void write_trace_file(const fs::path& path, const ArtifactHeader& h,
                             const TraceRecording& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  detail::write_magic(out, "EVTR");
  detail::put_header(out, h);
  detail::put_u32(out, rec.agent_id);
  detail::put_u32(out, rec.birth_step);
  detail::put_u32(out, rec.death_step);
  detail::put_u16(out, rec.n_total);
  detail::put_u16(out, rec.n_input);
  std::vector<std::uint8_t> mask((rec.n_total + 7u) / 8u, 0);
  for (std::uint16_t c = 0; c < rec.n_total; ++c)
    if (rec.is_input[c]) mask[c / 8u] |= static_cast<std::uint8_t>(0x80u >> (c % 8u));
  out.write(reinterpret_cast<const char*>(mask.data()),
            static_cast<std::streamsize>(mask.size()));
  for (Eigen::Index i = 0; i < rec.data.rows(); ++i)
    for (Eigen::Index j = 0; j < rec.data.cols(); ++j)
      detail::put_f32(out, rec.data(i, j));
  if (!out) throw IoError("failed writing " + path.string());
}

struct TraceFile {
  ArtifactHeader header;
  TraceRecording recording;
};

inline TraceFile read_trace_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  detail::expect_magic(in, "EVTR", path.string());
  TraceFile out;
  out.header = detail::get_header(in);
  auto& rec = out.recording;
  rec.agent_id = detail::get_u32(in);
  rec.birth_step = detail::get_u32(in);
  rec.death_step = detail::get_u32(in);
  rec.n_total = detail::get_u16(in);
  rec.n_input = detail::get_u16(in);
  std::vector<std::uint8_t> mask((rec.n_total + 7u) / 8u);
  in.read(reinterpret_cast<char*>(mask.data()),
          static_cast<std::streamsize>(mask.size()));
  rec.is_input.resize(rec.n_total);
  for (std::uint16_t c = 0; c < rec.n_total; ++c)
    rec.is_input[c] = (mask[c / 8u] >> (7u - c % 8u)) & 1u;
  const auto rows = static_cast<Eigen::Index>(rec.death_step - rec.birth_step);
  rec.data.resize(rows, rec.n_total);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < rec.n_total; ++j)
      rec.data(i, j) = detail::get_f32(in);
  if (!in) throw IoError("truncated trace file: " + path.string());
  return out;
}

inline std::string trace_filename(std::uint32_t agent_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trace_%08u.bin", agent_id);
  return buf;
}

inline std::vector<fs::path> list_trace_files(const fs::path& traces_dir) {
  std::vector<fs::path> files;
  if (!fs::exists(traces_dir)) return files;
  for (const auto& entry : fs::directory_iterator(traces_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".bin")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// Gene map table, so archived genomes stay decodable.

inline void write_gene_map_csv(const fs::path& path, const GeneMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "name,offset,width,min,max\n";
  for (const auto& e : map.entries())
    out << e.name << ',' << e.offset << ',' << e.width << ','
        << detail::format_double(e.min_value) << ','
        << detail::format_double(e.max_value) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Run directory layout, completion markers, sidecar info.

struct RunPaths {
  fs::path root;
  fs::path events() const { return root / "events.csv"; }
  fs::path population() const { return root / "population.csv"; }
  fs::path snapshots() const { return root / "snapshots.bin"; }
  fs::path gene_map() const { return root / "genemap.csv"; }
  fs::path config() const { return root / "config.cfg"; }
  fs::path traces() const { return root / "traces"; }
  fs::path run_info() const { return root / "run_info.json"; }
  fs::path done_marker() const { return root / "DONE"; }
};

inline void write_done_marker(const RunPaths& paths, const ArtifactHeader& h) {
  std::ofstream out(paths.done_marker(), std::ios::binary);
  out << "config_hash=" << to_hex(h.config_hash) << " seed=" << h.seed
      << " mode=" << to_string(h.mode) << " version=" << h.version << "\n";
  if (!out) throw IoError("cannot write completion marker");
}

inline bool run_complete(const RunPaths& paths, std::uint64_t config_hash,
                         std::uint64_t seed, RunMode mode) {
  std::ifstream in(paths.done_marker(), std::ios::binary);
  if (!in) return false;
  std::string line;
  std::getline(in, line);
  try {
    return parse_hex64(detail::header_field(line, "config_hash")) == config_hash &&
           std::stoull(detail::header_field(line, "seed")) == seed &&
           parse_run_mode(detail::header_field(line, "mode")) == mode;
  } catch (const std::exception&) {
    return false;
  }
}

inline std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

// ---------------------------------------------------------------------------
// Paired run-set manifest.

struct PairEntry {
  int index = 0;
  std::uint64_t driven_seed = 0;
  std::uint64_t lockstep_seed = 0;
  std::string driven_dir;
  std::string lockstep_dir;
  bool driven_done = false;
  bool lockstep_done = false;
  bool failed = false;
  std::string schedule_hash;  // hex of the driven events.csv
};

struct RunSetManifest {
  std::uint64_t config_hash = 0;
  std::uint64_t base_seed = 0;
  int n_pairs = 0;
  std::vector<PairEntry> pairs;
};

inline void write_manifest(const fs::path& path, const RunSetManifest& m) {
  nlohmann::json j;
  j["format"] = "evotrend-manifest";
  j["version"] = kArtifactVersion;
  j["config_hash"] = to_hex(m.config_hash);
  j["base_seed"] = m.base_seed;
  j["n_pairs"] = m.n_pairs;
  auto& pairs = j["pairs"] = nlohmann::json::array();
  for (const auto& p : m.pairs) {
    nlohmann::json e;
    e["index"] = p.index;
    e["driven_seed"] = p.driven_seed;
    e["lockstep_seed"] = p.lockstep_seed;
    e["driven_dir"] = p.driven_dir;
    e["lockstep_dir"] = p.lockstep_dir;
    e["driven_done"] = p.driven_done;
    e["lockstep_done"] = p.lockstep_done;
    e["failed"] = p.failed;
    e["schedule_hash"] = p.schedule_hash;
    pairs.push_back(std::move(e));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline RunSetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest json: " + std::string(e.what()));
  }
  if (j.value("format", "") != "evotrend-manifest")
    throw IoError("not a manifest: " + path.string());
  if (j.value("version", 0u) != kArtifactVersion)
    throw IoError("manifest version mismatch");
  RunSetManifest m;
  m.config_hash = parse_hex64(j.value("config_hash", "0"));
  m.base_seed = j.value("base_seed", std::uint64_t{0});
  m.n_pairs = j.value("n_pairs", 0);
  for (const auto& e : j["pairs"]) {
    PairEntry p;
    p.index = e.value("index", 0);
    p.driven_seed = e.value("driven_seed", std::uint64_t{0});
    p.lockstep_seed = e.value("lockstep_seed", std::uint64_t{0});
    p.driven_dir = e.value("driven_dir", "");
    p.lockstep_dir = e.value("lockstep_dir", "");
    p.driven_done = e.value("driven_done", false);
    p.lockstep_done = e.value("lockstep_done", false);
    p.failed = e.value("failed", false);
    p.schedule_hash = e.value("schedule_hash", "");
    m.pairs.push_back(std::move(p));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Complexity report CSV.

inline void write_reports_csv(const fs::path& path,
                              const std::vector<ComplexityReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "agent_id,death_step,filter,C_approx,C_exact,integration,entropy,valid,reason\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    out << r.agent_id << ',' << r.death_step << ',' << to_string(r.filter) << ',';
    if (r.valid) {
      out << num(r.c_approx) << ',';
      if (r.c_exact) out << num(*r.c_exact);
      out << ',' << num(r.integration) << ',' << num(r.entropy) << ",1,\n";
    } else {
      out << ",,,,0," << r.reason << "\n";
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace evotrend
