#pragma once

// File formats: a binary checkpoint container (named double arrays), a
// line-oriented scenario text format, raw and 16-bit PGM heat-map exports,
// plain-text track files sliced into fixed-length windows, and the metrics
// CSV. Scenario and raw heat-map round-trips are lossless.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gazemap/eval.hpp"
#include "gazemap/grid.hpp"
#include "gazemap/models.hpp"
#include "gazemap/render.hpp"
#include "gazemap/simgen.hpp"
#include "gazemap/tensor.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace gazemap {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] inline void parse_fail(const std::filesystem::path& path, int line,
                                    const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

inline std::ifstream open_in(const std::filesystem::path& path,
                             std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path,
                              std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

inline uint32_t read_u32(std::istream& in, const std::filesystem::path& path) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4))
    throw ParseError(path.string() + ": truncated file");
  return v;
}

inline void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in,
                               const std::filesystem::path& path) {
  const uint32_t n = read_u32(in, path);
  if (n > (1u << 20)) throw ParseError(path.string() + ": corrupt string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw ParseError(path.string() + ": truncated file");
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// checkpoint container: header (magic, version, name, array shapes) followed
// by raw little-endian double blobs in declaration order

inline constexpr std::string_view kCheckpointMagic = "GAZEMAPCK";
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string name;
  std::vector<std::pair<std::string, nn::Tensor>> arrays;

  const nn::Tensor& array(std::string_view n) const {
    for (const auto& [an, t] : arrays)
      if (an == n) return t;
    throw std::runtime_error("checkpoint: missing array " + std::string(n));
  }
};

inline void write_checkpoint(const std::filesystem::path& path,
                             const Checkpoint& ck) {
  std::ofstream out = detail::open_out(path, std::ios::binary);
  out.write(kCheckpointMagic.data(),
            static_cast<std::streamsize>(kCheckpointMagic.size()));
  detail::write_u32(out, kCheckpointVersion);
  detail::write_string(out, ck.name);
  detail::write_u32(out, static_cast<uint32_t>(ck.arrays.size()));
  for (const auto& [name, t] : ck.arrays) {
    detail::write_string(out, name);
    detail::write_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) detail::write_u32(out, static_cast<uint32_t>(d));
  }
  for (const auto& [name, t] : ck.arrays)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path, std::ios::binary);
  std::string magic(kCheckpointMagic.size(), '\0');
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) ||
      magic != kCheckpointMagic)
    throw ParseError(path.string() + ": not a checkpoint file");
  const uint32_t version = detail::read_u32(in, path);
  if (version != kCheckpointVersion)
    throw ParseError(path.string() + ": unsupported checkpoint version " +
                     std::to_string(version));
  Checkpoint ck;
  ck.name = detail::read_string(in, path);
  const uint32_t n_arrays = detail::read_u32(in, path);
  std::vector<std::vector<int>> shapes;
  for (uint32_t i = 0; i < n_arrays; ++i) {
    std::string name = detail::read_string(in, path);
    const uint32_t rank = detail::read_u32(in, path);
    if (rank == 0 || rank > 8)
      throw ParseError(path.string() + ": corrupt array rank");
    std::vector<int> shape(rank);
    for (uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<int>(detail::read_u32(in, path));
    ck.arrays.emplace_back(std::move(name), nn::Tensor{});
    shapes.push_back(std::move(shape));
  }
  for (uint32_t i = 0; i < n_arrays; ++i) {
    nn::Tensor t(shapes[i]);
    if (!in.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double))))
      throw ParseError(path.string() + ": truncated array data");
    ck.arrays[i].second = std::move(t);
  }
  return ck;
}

// ---------------------------------------------------------------------------
// model checkpoints: parameters plus a self-describing spec array

namespace detail {

inline nn::Tensor spec_array(const ModelSpec& spec) {
  nn::Tensor t({13});
  t.data = {static_cast<double>(static_cast<int>(spec.kind)),
            static_cast<double>(spec.grid.s_u),
            static_cast<double>(spec.grid.s_v),
            spec.grid.x_min,
            spec.grid.x_max,
            spec.grid.y_min,
            spec.grid.y_max,
            static_cast<double>(spec.horizon),
            static_cast<double>(spec.channels[0]),
            static_cast<double>(spec.channels[1]),
            static_cast<double>(spec.channels[2]),
            static_cast<double>(static_cast<uint32_t>(spec.seed >> 32)),
            static_cast<double>(static_cast<uint32_t>(spec.seed))};
  return t;
}

inline ModelSpec spec_from_array(const nn::Tensor& t,
                                 const std::filesystem::path& path) {
  if (t.data.size() != 13)
    throw ParseError(path.string() + ": corrupt model spec array");
  ModelSpec spec;
  spec.kind = static_cast<ModelKind>(static_cast<int>(t.data[0]));
  spec.grid.s_u = static_cast<int>(t.data[1]);
  spec.grid.s_v = static_cast<int>(t.data[2]);
  spec.grid.x_min = t.data[3];
  spec.grid.x_max = t.data[4];
  spec.grid.y_min = t.data[5];
  spec.grid.y_max = t.data[6];
  spec.horizon = static_cast<int>(t.data[7]);
  spec.channels = {static_cast<int>(t.data[8]), static_cast<int>(t.data[9]),
                   static_cast<int>(t.data[10])};
  spec.seed = (static_cast<uint64_t>(static_cast<uint32_t>(t.data[11])) << 32) |
              static_cast<uint64_t>(static_cast<uint32_t>(t.data[12]));
  return spec;
}

}  // namespace detail

inline void save_model(const std::filesystem::path& path,
                       const TrainedModel& m) {
  Checkpoint ck;
  ck.name = std::string(kind_name(m.spec.kind));
  ck.arrays.emplace_back("__spec", detail::spec_array(m.spec));
  for (const auto& [name, p] : m.params) ck.arrays.emplace_back(name, p->value);
  write_checkpoint(path, ck);
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  const Checkpoint ck = read_checkpoint(path);
  const ModelSpec spec = detail::spec_from_array(ck.array("__spec"), path);
  if (ck.name != kind_name(spec.kind))
    throw ParseError(path.string() + ": checkpoint name does not match kind");
  TrainedModel m = build(spec);
  for (auto& [name, p] : m.params) {
    const nn::Tensor& stored = ck.array(name);
    if (stored.shape != p->value.shape)
      throw ParseError(path.string() + ": shape mismatch for parameter " + name);
    p->value = stored;
  }
  return m;
}

// ---------------------------------------------------------------------------
// scenario text format

inline constexpr std::string_view kScenarioMagic = "gazemap-scenario";
inline constexpr int kScenarioVersion = 1;

inline void write_scenario(const std::filesystem::path& path,
                           const Scenario& s) {
  std::ofstream out = detail::open_out(path);
  out << kScenarioMagic << ' ' << kScenarioVersion << '\n';
  out << "grid " << s.grid.s_u << ' ' << s.grid.s_v << ' '
      << detail::fmt_double(s.grid.x_min) << ' '
      << detail::fmt_double(s.grid.x_max) << ' '
      << detail::fmt_double(s.grid.y_min) << ' '
      << detail::fmt_double(s.grid.y_max) << '\n';
  out << "seed " << s.seed << '\n';
  out << "camera " << s.camera_cell.u << ' ' << s.camera_cell.v << '\n';
  out << "objects " << s.objects.size() << '\n';
  for (const GridCell& c : s.objects)
    out << "object " << c.u << ' ' << c.v << '\n';
  const size_t n_people = s.frames.empty() ? 0 : s.frames[0].persons.size();
  out << "people " << n_people << '\n';
  out << "frames " << s.frames.size() << '\n';
  for (size_t t = 0; t < s.frames.size(); ++t) {
    out << "frame " << t << '\n';
    for (const PersonState& p : s.frames[t].persons)
      out << "person " << detail::fmt_double(p.position.x) << ' '
          << detail::fmt_double(p.position.y) << ' '
          << detail::fmt_double(p.pan) << '\n';
  }
  out << "targets " << s.latent_targets.size() << '\n';
  for (size_t n = 0; n < s.latent_targets.size(); ++n)
    for (size_t t = 0; t < s.latent_targets[n].size(); ++t) {
      const AttentionTarget& a = s.latent_targets[n][t];
      const char* kind = "wander";
      switch (a.kind) {
        case AttentionTarget::Kind::Object: kind = "object"; break;
        case AttentionTarget::Kind::Person: kind = "person"; break;
        case AttentionTarget::Kind::Camera: kind = "camera"; break;
        case AttentionTarget::Kind::Wander: kind = "wander"; break;
      }
      out << "target " << n << ' ' << t << ' ' << kind << ' ' << a.index << ' '
          << detail::fmt_double(a.wander_dir) << '\n';
    }
  out << "end\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Scenario read_scenario(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  int line_no = 0;
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line))
      detail::parse_fail(path, line_no, "unexpected end of file");
    ++line_no;
    return std::istringstream(line);
  };
  auto expect_key = [&](std::istringstream& ls, std::string_view key) {
    std::string k;
    if (!(ls >> k) || k != key)
      detail::parse_fail(path, line_no,
                         "expected '" + std::string(key) + "' in: " + line);
  };

  Scenario s;
  {
    auto ls = next_line();
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != kScenarioMagic)
      detail::parse_fail(path, line_no, "not a scenario file");
    if (version != kScenarioVersion)
      detail::parse_fail(path, line_no, "unsupported version");
  }
  {
    auto ls = next_line();
    expect_key(ls, "grid");
    if (!(ls >> s.grid.s_u >> s.grid.s_v >> s.grid.x_min >> s.grid.x_max >>
          s.grid.y_min >> s.grid.y_max))
      detail::parse_fail(path, line_no, "malformed grid line");
    s.grid.validate();
  }
  {
    auto ls = next_line();
    expect_key(ls, "seed");
    if (!(ls >> s.seed)) detail::parse_fail(path, line_no, "malformed seed");
  }
  {
    auto ls = next_line();
    expect_key(ls, "camera");
    if (!(ls >> s.camera_cell.u >> s.camera_cell.v) ||
        !cell_in_range(s.camera_cell, s.grid))
      detail::parse_fail(path, line_no, "malformed camera cell");
  }
  size_t n_objects = 0;
  {
    auto ls = next_line();
    expect_key(ls, "objects");
    if (!(ls >> n_objects)) detail::parse_fail(path, line_no, "malformed count");
  }
  for (size_t i = 0; i < n_objects; ++i) {
    auto ls = next_line();
    expect_key(ls, "object");
    GridCell c;
    if (!(ls >> c.u >> c.v) || !cell_in_range(c, s.grid))
      detail::parse_fail(path, line_no, "malformed object cell");
    s.objects.push_back(c);
  }
  size_t n_people = 0, n_frames = 0;
  {
    auto ls = next_line();
    expect_key(ls, "people");
    if (!(ls >> n_people)) detail::parse_fail(path, line_no, "malformed count");
  }
  {
    auto ls = next_line();
    expect_key(ls, "frames");
    if (!(ls >> n_frames)) detail::parse_fail(path, line_no, "malformed count");
  }
  s.frames.resize(n_frames);
  for (size_t t = 0; t < n_frames; ++t) {
    auto ls = next_line();
    expect_key(ls, "frame");
    size_t idx = 0;
    if (!(ls >> idx) || idx != t)
      detail::parse_fail(path, line_no, "frame index out of order");
    s.frames[t].persons.resize(n_people);
    for (size_t p = 0; p < n_people; ++p) {
      auto pl = next_line();
      expect_key(pl, "person");
      PersonState& ps = s.frames[t].persons[p];
      if (!(pl >> ps.position.x >> ps.position.y >> ps.pan))
        detail::parse_fail(path, line_no, "malformed person row");
      if (!std::isfinite(ps.position.x) || !std::isfinite(ps.position.y) ||
          !std::isfinite(ps.pan))
        detail::parse_fail(path, line_no, "non-finite person state");
    }
  }
  size_t n_target_rows_people = 0;
  {
    auto ls = next_line();
    expect_key(ls, "targets");
    if (!(ls >> n_target_rows_people) || n_target_rows_people != n_people)
      detail::parse_fail(path, line_no, "target person count mismatch");
  }
  s.latent_targets.assign(n_people, std::vector<AttentionTarget>(n_frames));
  for (size_t n = 0; n < n_people; ++n)
    for (size_t t = 0; t < n_frames; ++t) {
      auto ls = next_line();
      expect_key(ls, "target");
      size_t rn = 0, rt = 0;
      std::string kind;
      AttentionTarget a;
      if (!(ls >> rn >> rt >> kind >> a.index >> a.wander_dir) || rn != n ||
          rt != t)
        detail::parse_fail(path, line_no, "malformed target row");
      if (kind == "object") a.kind = AttentionTarget::Kind::Object;
      else if (kind == "person") a.kind = AttentionTarget::Kind::Person;
      else if (kind == "camera") a.kind = AttentionTarget::Kind::Camera;
      else if (kind == "wander") a.kind = AttentionTarget::Kind::Wander;
      else detail::parse_fail(path, line_no, "unknown target kind: " + kind);
      s.latent_targets[n][t] = a;
    }
  {
    auto ls = next_line();
    expect_key(ls, "end");
  }
  return s;
}

// ---------------------------------------------------------------------------
// heat-maps: lossless raw container and lossy 16-bit PGM

inline void write_heatmap(const std::filesystem::path& path, const HeatMap& m) {
  Checkpoint ck;
  ck.name = "heatmap";
  nn::Tensor meta({7});
  meta.data = {static_cast<double>(m.config().s_u),
               static_cast<double>(m.config().s_v),
               m.config().x_min,
               m.config().x_max,
               m.config().y_min,
               m.config().y_max,
               m.normalized() ? 1.0 : 0.0};
  ck.arrays.emplace_back("__grid", std::move(meta));
  ck.arrays.emplace_back(
      "values", nn::Tensor({m.config().s_u, m.config().s_v}, m.values()));
  write_checkpoint(path, ck);
}

inline HeatMap read_heatmap(const std::filesystem::path& path) {
  const Checkpoint ck = read_checkpoint(path);
  if (ck.name != "heatmap")
    throw ParseError(path.string() + ": not a heat-map file");
  const nn::Tensor& meta = ck.array("__grid");
  if (meta.data.size() != 7)
    throw ParseError(path.string() + ": corrupt heat-map header");
  GridConfig g;
  g.s_u = static_cast<int>(meta.data[0]);
  g.s_v = static_cast<int>(meta.data[1]);
  g.x_min = meta.data[2];
  g.x_max = meta.data[3];
  g.y_min = meta.data[4];
  g.y_max = meta.data[5];
  return HeatMap(g, ck.array("values").data, meta.data[6] != 0.0);
}

/// 16-bit binary PGM (maxval 65535, big-endian sample bytes per the format),
/// pixel = round(65535 * clamp(v, 0, 1)). Rows run along u, columns along v.
inline void write_heatmap_pgm(const std::filesystem::path& path,
                              const HeatMap& m) {
  std::ofstream out = detail::open_out(path, std::ios::binary);
  out << "P5\n" << m.config().s_v << ' ' << m.config().s_u << "\n65535\n";
  for (double v : m.values()) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    const auto q = static_cast<uint16_t>(std::lround(65535.0 * c));
    const char bytes[2] = {static_cast<char>(q >> 8),
                           static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// track files: pre-extracted positions and pans, sliced into windows

struct TrackHeader {
  GridConfig grid;
  double fps = 0.0;
  GridCell camera_cell{1, 1};
};

struct TrackData {
  TrackHeader header;
  int t_min = 0;               ///< frame number of frames[0] in the file
  std::vector<Frame> frames;   ///< contiguous frames, possibly empty per frame
};

inline constexpr std::string_view kTracksMagic = "gazemap-tracks";
inline constexpr int kTracksVersion = 1;

inline void write_tracks(const std::filesystem::path& path, const TrackData& td,
                         std::span<const std::vector<int>> person_ids = {}) {
  std::ofstream out = detail::open_out(path);
  out << kTracksMagic << ' ' << kTracksVersion << '\n';
  const GridConfig& g = td.header.grid;
  out << "grid " << g.s_u << ' ' << g.s_v << ' ' << detail::fmt_double(g.x_min)
      << ' ' << detail::fmt_double(g.x_max) << ' '
      << detail::fmt_double(g.y_min) << ' ' << detail::fmt_double(g.y_max)
      << '\n';
  out << "fps " << detail::fmt_double(td.header.fps) << '\n';
  out << "camera " << td.header.camera_cell.u << ' ' << td.header.camera_cell.v
      << '\n';
  for (size_t i = 0; i < td.frames.size(); ++i)
    for (size_t p = 0; p < td.frames[i].persons.size(); ++p) {
      const PersonState& ps = td.frames[i].persons[p];
      const int pid = person_ids.empty() ? static_cast<int>(p)
                                         : person_ids[i][p];
      out << (td.t_min + static_cast<int>(i)) << ' ' << pid << ' '
          << detail::fmt_double(ps.position.x) << ' '
          << detail::fmt_double(ps.position.y) << ' '
          << detail::fmt_double(ps.pan) << '\n';
    }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Parses a track file: header then one row per (frame, person) sorted by
/// (t, person id), t contiguous per person. NaN coordinates are rejected,
/// pans are wrapped into (-pi, pi].
inline TrackData read_tracks(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  int line_no = 0;
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line))
      detail::parse_fail(path, line_no, "unexpected end of file");
    ++line_no;
    return std::istringstream(line);
  };

  TrackData td;
  {
    auto ls = next_line();
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != kTracksMagic)
      detail::parse_fail(path, line_no, "not a track file");
    if (version != kTracksVersion)
      detail::parse_fail(path, line_no, "unsupported version");
  }
  {
    auto ls = next_line();
    std::string key;
    GridConfig& g = td.header.grid;
    if (!(ls >> key >> g.s_u >> g.s_v >> g.x_min >> g.x_max >> g.y_min >>
          g.y_max) ||
        key != "grid")
      detail::parse_fail(path, line_no, "malformed grid line");
    g.validate();
  }
  {
    auto ls = next_line();
    std::string key;
    if (!(ls >> key >> td.header.fps) || key != "fps" || !(td.header.fps > 0.0))
      detail::parse_fail(path, line_no, "malformed fps line");
  }
  {
    auto ls = next_line();
    std::string key;
    if (!(ls >> key >> td.header.camera_cell.u >> td.header.camera_cell.v) ||
        key != "camera" || !cell_in_range(td.header.camera_cell, td.header.grid))
      detail::parse_fail(path, line_no, "malformed camera line");
  }

  struct Row {
    int t, pid;
    PersonState state;
  };
  std::vector<Row> rows;
  bool have_prev = false;
  int prev_t = 0, prev_pid = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Row r;
    if (!(ls >> r.t >> r.pid >> r.state.position.x >> r.state.position.y >>
          r.state.pan))
      detail::parse_fail(path, line_no, "malformed track row");
    if (!std::isfinite(r.state.position.x) ||
        !std::isfinite(r.state.position.y) || !std::isfinite(r.state.pan))
      detail::parse_fail(path, line_no, "non-finite track row");
    if (have_prev && (r.t < prev_t || (r.t == prev_t && r.pid <= prev_pid)))
      detail::parse_fail(path, line_no, "rows not sorted by (t, person id)");
    r.state.pan = wrap_angle(r.state.pan);
    have_prev = true;
    prev_t = r.t;
    prev_pid = r.pid;
    rows.push_back(r);
  }
  if (rows.empty()) return td;

  // per-person lifespan contiguity
  std::map<int, std::pair<int, int>> span;  // pid -> (first t, last t)
  std::map<int, int> seen_count;
  for (const Row& r : rows) {
    auto [it, fresh] = span.try_emplace(r.pid, r.t, r.t);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.t);
      it->second.second = std::max(it->second.second, r.t);
    }
    ++seen_count[r.pid];
  }
  for (const auto& [pid, se] : span)
    if (seen_count[pid] != se.second - se.first + 1)
      throw ParseError(path.string() + ": person " + std::to_string(pid) +
                       " has gaps in its frame range");

  td.t_min = rows.front().t;
  const int t_max = rows.back().t;
  td.frames.resize(static_cast<size_t>(t_max - td.t_min) + 1);
  for (const Row& r : rows)
    td.frames[static_cast<size_t>(r.t - td.t_min)].persons.push_back(r.state);
  return td;
}

/// Fixed-length windows with 50% overlap (step T/2); a trailing window
/// shorter than T is dropped.
inline std::vector<std::vector<Frame>> slice_windows(
    std::span<const Frame> frames, int window_len) {
  if (window_len < 1)
    throw std::invalid_argument("slice_windows: window length must be >= 1");
  const int step = std::max(1, window_len / 2);
  std::vector<std::vector<Frame>> windows;
  for (size_t start = 0; start + window_len <= frames.size(); start += step)
    windows.emplace_back(frames.begin() + start,
                         frames.begin() + start + window_len);
  return windows;
}

// ---------------------------------------------------------------------------
// metrics table

struct MetricsRow {
  std::string method;
  std::string dataset;
  double mse = 0.0;  ///< raw MSE; written as mse * 100
  PRF1 prf;          ///< fractions; written as percentages
  MatchCounts counts;
  int n_sequences = 0;
  uint64_t seed = 0;
};

inline void write_metrics(const std::filesystem::path& path,
                          std::span<const MetricsRow> rows) {
  std::ofstream out = detail::open_out(path);
  out << "method,dataset,mse_x100,precision,recall,f1,tp,fp,fn,n_sequences,"
         "seed\n";
  char buf[160];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.3f,%.3f,%.3f", r.mse * 100.0,
                  r.prf.precision * 100.0, r.prf.recall * 100.0,
                  r.prf.f1 * 100.0);
    out << r.method << ',' << r.dataset << ',' << buf << ',' << r.counts.tp
        << ',' << r.counts.fp << ',' << r.counts.fn << ',' << r.n_sequences
        << ',' << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace gazemap
