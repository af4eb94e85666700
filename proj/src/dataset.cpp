#include "rig/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "rig/error.hpp"

namespace fs = std::filesystem;

namespace rig {

namespace {

constexpr const char* kIndexHeader = "stamp_ns,file,bytes";
constexpr const char* kImuHeader = "t_ns,gx,gy,gz,ax,ay,az";
constexpr const char* kImuFile = "data.csv";
constexpr const char* kTrajectoryFile = "trajectory.txt";

bool valid_stream_id(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c == '-' || c == '.';
  });
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  const std::string s = read_text(p);
  return {s.begin(), s.end()};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out << s;
  if (!out) throw Error(Errc::IoError, "write failed for " + p.string());
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct Locator {
  std::string file;
  std::optional<std::size_t> row;
};

// Accepts "file" or "file#row"; the file must stay inside the stream directory.
std::optional<Locator> parse_locator(const std::string& s) {
  Locator loc;
  const auto hash = s.find('#');
  loc.file = s.substr(0, hash);
  if (hash != std::string::npos) {
    std::size_t row = 0;
    if (!parse_int(std::string_view(s).substr(hash + 1), row)) return std::nullopt;
    loc.row = row;
  }
  if (loc.file.empty()) return std::nullopt;
  const fs::path p(loc.file);
  if (p.is_absolute()) return std::nullopt;
  for (const auto& part : p) {
    if (part == "..") return std::nullopt;
  }
  return loc;
}

// Data rows of a row-based payload file. Each row keeps its newline so the
// index byte size can be checked against it.
std::vector<std::string> split_rows(const std::string& text, StreamKind kind) {
  std::vector<std::string> rows;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl + 1;
    std::string line = text.substr(pos, end - pos);
    pos = end;
    std::string_view body(line);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    if (kind == StreamKind::Imu && first) {
      first = false;
      if (body == kImuHeader) continue;
    }
    first = false;
    if (body.empty() || body.front() == '#') continue;
    rows.push_back(std::move(line));
  }
  return rows;
}

ImuSample parse_imu_row(const std::string& row) {
  std::string_view body(row);
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (true) {
    const auto comma = body.find(',', pos);
    cols.emplace_back(body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (cols.size() != 7) throw Error(Errc::ParseError, fmt::format("expected 7 columns, got {}", cols.size()));
  ImuSample s;
  if (!parse_int(cols[0], s.stamp_ns)) throw Error(Errc::ParseError, "bad stamp '" + cols[0] + "'");
  double v[6];
  for (int i = 0; i < 6; ++i) {
    std::size_t used = 0;
    try {
      v[i] = std::stod(cols[i + 1], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cols[i + 1].size()) throw Error(Errc::ParseError, "bad value '" + cols[i + 1] + "'");
  }
  s.gyro = {v[0], v[1], v[2]};
  s.accel = {v[3], v[4], v[5]};
  return s;
}

std::string pose_row(const StampedPose& p) {
  Trajectory t;
  t.entries.push_back(p);
  return format_trajectory(t);
}

}  // namespace

const char* to_string(StreamKind k) {
  switch (k) {
    case StreamKind::Camera: return "camera";
    case StreamKind::Imu: return "imu";
    case StreamKind::Lidar: return "lidar";
    case StreamKind::Trajectory: return "trajectory";
  }
  return "?";
}

StreamKind parse_stream_kind(const std::string& s) {
  if (s == "camera") return StreamKind::Camera;
  if (s == "imu") return StreamKind::Imu;
  if (s == "lidar") return StreamKind::Lidar;
  if (s == "trajectory") return StreamKind::Trajectory;
  throw Error(Errc::SchemaError, "unknown stream kind '" + s + "'");
}

const SensorSpec* SequenceManifest::find(const std::string& stream_id) const {
  for (const auto& s : streams) {
    if (s.stream_id == stream_id) return &s;
  }
  return nullptr;
}

void SequenceManifest::check() const {
  if (format_version != kSequenceFormatVersion) {
    throw Error(Errc::SchemaError, fmt::format("unsupported format_version {}", format_version));
  }
  if (sequence_id.empty()) throw Error(Errc::SchemaError, "sequence_id is empty");
  if (streams.empty()) throw Error(Errc::SchemaError, "manifest declares no streams");
  std::set<std::string> seen;
  for (const auto& s : streams) {
    if (!valid_stream_id(s.stream_id)) throw Error(Errc::SchemaError, "invalid stream_id '" + s.stream_id + "'");
    if (!seen.insert(s.stream_id).second) throw Error(Errc::SchemaError, "duplicate stream_id '" + s.stream_id + "'");
    if (s.kind != StreamKind::Trajectory && !(s.nominal_rate_hz > 0.0 && std::isfinite(s.nominal_rate_hz))) {
      throw Error(Errc::SchemaError, "stream '" + s.stream_id + "' needs a positive nominal_rate_hz");
    }
    if (s.nominal_rate_hz < 0.0) throw Error(Errc::SchemaError, "stream '" + s.stream_id + "' has a negative rate");
  }
}

SequenceManifest parse_manifest(const std::string& text, const std::string& origin) {
  static const std::set<std::string> kTop{"format_version", "sequence_id", "scenario", "description", "clock",
                                          "streams"};
  static const std::set<std::string> kStream{"stream_id", "kind", "nominal_rate_hz", "frame"};
  SequenceManifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_object()) throw Error(Errc::SchemaError, origin + ": top level must be an object");
    for (const auto& [k, v] : doc.items()) {
      if (kTop.count(k) == 0) throw Error(Errc::SchemaError, origin + ": unknown key '" + k + "'");
    }
    m.format_version = doc.at("format_version").get<int>();
    if (m.format_version != kSequenceFormatVersion) {
      throw Error(Errc::SchemaError, fmt::format("{}: unsupported format_version {}", origin, m.format_version));
    }
    m.sequence_id = doc.at("sequence_id").get<std::string>();
    const auto scenario = doc.at("scenario").get<std::string>();
    if (scenario == "indoor") {
      m.scenario = Scenario::Indoor;
    } else if (scenario == "outdoor") {
      m.scenario = Scenario::Outdoor;
    } else {
      throw Error(Errc::SchemaError, origin + ": scenario must be 'indoor' or 'outdoor'");
    }
    m.description = doc.value("description", std::string());
    try {
      m.clock = parse_clock_domain(doc.at("clock").get<std::string>());
    } catch (const Error& e) {
      throw Error(Errc::SchemaError, origin + ": " + e.what());
    }
    std::size_t idx = 0;
    for (const auto& js : doc.at("streams")) {
      const std::string where = fmt::format("{}: streams[{}]", origin, idx++);
      if (!js.is_object()) throw Error(Errc::SchemaError, where + ": must be an object");
      for (const auto& [k, v] : js.items()) {
        if (kStream.count(k) == 0) throw Error(Errc::SchemaError, where + ": unknown key '" + k + "'");
      }
      SensorSpec s;
      s.stream_id = js.at("stream_id").get<std::string>();
      s.kind = parse_stream_kind(js.at("kind").get<std::string>());
      s.nominal_rate_hz = js.value("nominal_rate_hz", 0.0);
      s.frame = js.at("frame").get<std::string>();
      m.streams.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, origin + ": " + e.what());
  }
  try {
    m.check();
  } catch (const Error& e) {
    throw Error(Errc::SchemaError, origin + ": " + e.what());
  }
  return m;
}

std::string format_manifest(const SequenceManifest& m) {
  m.check();
  ordered_json j;
  j["format_version"] = m.format_version;
  j["sequence_id"] = m.sequence_id;
  j["scenario"] = m.scenario == Scenario::Indoor ? "indoor" : "outdoor";
  j["description"] = m.description;
  j["clock"] = to_string(m.clock);
  j["streams"] = ordered_json::array();
  for (const auto& s : m.streams) {
    ordered_json js;
    js["stream_id"] = s.stream_id;
    js["kind"] = to_string(s.kind);
    js["nominal_rate_hz"] = s.nominal_rate_hz;
    js["frame"] = s.frame;
    j["streams"].push_back(std::move(js));
  }
  return dump_canonical(j, 6);
}

SequenceManifest read_manifest(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw Error(Errc::MissingManifest, "no manifest.json in " + dir.string());
  return parse_manifest(read_text(p), p.string());
}

StreamIndex read_stream_index(const fs::path& dir, const std::string& stream_id) {
  const fs::path p = dir / stream_id / "index.csv";
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw Error(Errc::IoError, "missing index " + p.string());
  const std::string text = read_text(p);
  StreamIndex idx;
  idx.stream_id = stream_id;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kIndexHeader) {
        throw Error(Errc::ParseError, fmt::format("{}:1: expected header '{}'", p.string(), kIndexHeader));
      }
      continue;
    }
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw Error(Errc::ParseError, fmt::format("{}:{}: expected 3 columns", p.string(), lineno));
    }
    IndexRecord r;
    r.file = line.substr(c1 + 1, c2 - c1 - 1);
    if (!parse_int(std::string_view(line).substr(0, c1), r.stamp_ns) ||
        !parse_int(std::string_view(line).substr(c2 + 1), r.bytes) || r.file.empty()) {
      throw Error(Errc::ParseError, fmt::format("{}:{}: malformed record", p.string(), lineno));
    }
    idx.records.push_back(std::move(r));
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Reader

StreamReader::StreamReader(fs::path dir, SensorSpec spec, StreamIndex index, bool lenient)
    : stream_dir_(std::move(dir) / spec.stream_id), spec_(std::move(spec)), index_(std::move(index)),
      lenient_(lenient) {}

const std::vector<std::string>& StreamReader::rows(const std::string& file) {
  auto it = row_cache_.find(file);
  if (it == row_cache_.end()) {
    const fs::path p = stream_dir_ / file;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) throw Error(Errc::CorruptRecord, "missing payload " + p.string());
    it = row_cache_.emplace(file, split_rows(read_text(p), spec_.kind)).first;
  }
  return it->second;
}

std::vector<std::uint8_t> StreamReader::payload_bytes(const IndexRecord& r) {
  const auto loc = parse_locator(r.file);
  if (!loc) throw Error(Errc::CorruptRecord, "unresolvable locator '" + r.file + "'");
  if (loc->row) {
    const auto& rs = rows(loc->file);
    if (*loc->row >= rs.size()) {
      throw Error(Errc::CorruptRecord, fmt::format("row {} beyond the {} rows of {}", *loc->row, rs.size(), loc->file));
    }
    return {rs[*loc->row].begin(), rs[*loc->row].end()};
  }
  const fs::path p = stream_dir_ / loc->file;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw Error(Errc::CorruptRecord, "missing payload " + p.string());
  return read_bytes(p);
}

Record StreamReader::decode(std::size_t i) {
  const IndexRecord& r = index_.records[i];
  Record rec;
  rec.index = i;
  rec.stamp_ns = r.stamp_ns;
  rec.locator = r.file;
  rec.bytes = r.bytes;
  try {
    const auto bytes = payload_bytes(r);
    if (bytes.size() != r.bytes) {
      throw Error(Errc::CorruptRecord, fmt::format("payload has {} bytes, index says {}", bytes.size(), r.bytes));
    }
    switch (spec_.kind) {
      case StreamKind::Camera: {
        const auto h = read_png_header(bytes);
        rec.payload = ImageRef{stream_dir_ / parse_locator(r.file)->file, h.width, h.height};
        break;
      }
      case StreamKind::Lidar: {
        PointCloud c = decode_ply(bytes);
        if (c.frame.empty()) c.frame = spec_.frame;
        rec.payload = std::move(c);
        break;
      }
      case StreamKind::Imu: {
        const ImuSample s = parse_imu_row(std::string(bytes.begin(), bytes.end()));
        if (s.stamp_ns != r.stamp_ns) {
          throw Error(Errc::CorruptRecord, fmt::format("row stamp {} differs from index stamp {}", s.stamp_ns, r.stamp_ns));
        }
        rec.payload = s;
        break;
      }
      case StreamKind::Trajectory: {
        const Trajectory t = parse_trajectory(std::string(bytes.begin(), bytes.end()), r.file);
        if (t.entries.size() != 1) throw Error(Errc::CorruptRecord, "pose row must hold exactly one pose");
        if (t.entries[0].stamp_ns != r.stamp_ns) {
          throw Error(Errc::CorruptRecord,
                      fmt::format("pose stamp {} differs from index stamp {}", t.entries[0].stamp_ns, r.stamp_ns));
        }
        rec.payload = t.entries[0];
        break;
      }
    }
  } catch (const Error& e) {
    const std::string msg = fmt::format("stream '{}' record {}: {}", spec_.stream_id, i, e.what());
    throw Error(Errc::CorruptRecord, msg);
  }
  return rec;
}

std::optional<Record> StreamReader::next() {
  while (cursor_ < index_.records.size()) {
    const std::size_t i = cursor_++;
    try {
      return decode(i);
    } catch (const Error& e) {
      if (!lenient_) throw;
      errors_.push_back({i, e.what()});
    }
  }
  return std::nullopt;
}

std::vector<Record> StreamReader::read_all() {
  std::vector<Record> out;
  while (auto r = next()) out.push_back(std::move(*r));
  return out;
}

StreamReader open_stream(const fs::path& dir, const std::string& stream_id, bool lenient) {
  const SequenceManifest m = read_manifest(dir);
  const SensorSpec* spec = m.find(stream_id);
  if (spec == nullptr) throw Error(Errc::UnknownStream, "stream '" + stream_id + "' is not in the manifest");
  return StreamReader(dir, *spec, read_stream_index(dir, stream_id), lenient);
}

// ---------------------------------------------------------------------------
// Writer

std::string imu_row(const ImuSample& s) {
  return fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.stamp_ns, s.gyro.x(), s.gyro.y(),
                     s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
}

SequenceWriter::SequenceWriter(fs::path dir, SequenceManifest manifest)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {
  manifest_.check();
  for (const auto& s : manifest_.streams) pending_[s.stream_id];
}

SequenceWriter::Pending& SequenceWriter::stream(const std::string& id, StreamKind expected) {
  if (finished_) throw Error(Errc::InvalidArgument, "sequence writer already finished");
  const SensorSpec* spec = manifest_.find(id);
  if (spec == nullptr) throw Error(Errc::UnknownStream, "stream '" + id + "' is not in the manifest");
  if (spec->kind != expected) {
    throw Error(Errc::InvalidArgument,
                fmt::format("stream '{}' is a {} stream, not {}", id, to_string(spec->kind), to_string(expected)));
  }
  return pending_[id];
}

namespace {
void require_order(const std::string& id, const std::vector<IndexRecord>& recs, std::int64_t stamp) {
  if (!recs.empty() && stamp < recs.back().stamp_ns) {
    throw Error(Errc::NonMonotonic,
                fmt::format("stream '{}': stamp {} after {}", id, stamp, recs.back().stamp_ns));
  }
}
}  // namespace

void SequenceWriter::add_file(const std::string& stream_id, StreamKind kind, std::int64_t stamp_ns,
                              const std::string& ext, const std::vector<std::uint8_t>& bytes) {
  Pending& p = stream(stream_id, kind);
  require_order(stream_id, p.records, stamp_ns);
  const std::string file = fmt::format("{:06d}.{}", p.records.size(), ext);
  const fs::path sdir = dir_ / stream_id;
  fs::create_directories(sdir);
  write_text(sdir / file, std::string(bytes.begin(), bytes.end()));
  p.records.push_back({stamp_ns, file, bytes.size()});
}

void SequenceWriter::add_image(const std::string& stream_id, std::int64_t stamp_ns, const Image& img) {
  add_file(stream_id, StreamKind::Camera, stamp_ns, "png", encode_png(img));
}

void SequenceWriter::add_scan(const std::string& stream_id, std::int64_t stamp_ns, const PointCloud& cloud) {
  add_file(stream_id, StreamKind::Lidar, stamp_ns, "ply", encode_ply(cloud));
}

void SequenceWriter::add_imu(const std::string& stream_id, const ImuSample& s) {
  Pending& p = stream(stream_id, StreamKind::Imu);
  require_order(stream_id, p.records, s.stamp_ns);
  const std::string row = imu_row(s);
  p.records.push_back({s.stamp_ns, fmt::format("{}#{}", kImuFile, p.records.size()), row.size()});
  p.rows += row;
}

void SequenceWriter::add_pose(const std::string& stream_id, const StampedPose& pose) {
  Pending& p = stream(stream_id, StreamKind::Trajectory);
  require_order(stream_id, p.records, pose.stamp_ns);
  const std::string row = pose_row(pose);
  p.records.push_back({pose.stamp_ns, fmt::format("{}#{}", kTrajectoryFile, p.records.size()), row.size()});
  p.rows += row;
}

void SequenceWriter::finish() {
  if (finished_) throw Error(Errc::InvalidArgument, "sequence writer already finished");
  fs::create_directories(dir_);
  write_text(dir_ / "manifest.json", format_manifest(manifest_));
  for (const auto& spec : manifest_.streams) {
    const Pending& p = pending_[spec.stream_id];
    const fs::path sdir = dir_ / spec.stream_id;
    fs::create_directories(sdir);
    if (spec.kind == StreamKind::Imu) write_text(sdir / kImuFile, std::string(kImuHeader) + "\n" + p.rows);
    if (spec.kind == StreamKind::Trajectory) write_text(sdir / kTrajectoryFile, p.rows);
    std::string index = std::string(kIndexHeader) + "\n";
    for (const auto& r : p.records) index += fmt::format("{},{},{}\n", r.stamp_ns, r.file, r.bytes);
    write_text(sdir / "index.csv", index);
  }
  finished_ = true;
}

// ---------------------------------------------------------------------------
// Validation and statistics

namespace {

struct LoadedStream {
  SensorSpec spec;
  std::optional<StreamIndex> index;
  std::string load_error;
};

std::vector<LoadedStream> load_streams(const fs::path& dir, const SequenceManifest& m) {
  std::vector<LoadedStream> out;
  for (const auto& s : m.streams) {
    LoadedStream ls{s, std::nullopt, {}};
    try {
      ls.index = read_stream_index(dir, s.stream_id);
    } catch (const Error& e) {
      ls.load_error = e.what();
    }
    out.push_back(std::move(ls));
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> stamp_range(const StreamIndex& idx) {
  std::int64_t lo = idx.records.front().stamp_ns;
  std::int64_t hi = lo;
  for (const auto& r : idx.records) {
    lo = std::min(lo, r.stamp_ns);
    hi = std::max(hi, r.stamp_ns);
  }
  return {lo, hi};
}

Finding finding(Severity sev, std::string code, const std::string& stream, std::optional<std::size_t> index,
                std::string message) {
  return Finding{sev, std::move(code), stream, index, std::move(message)};
}

}  // namespace

ValidationReport validate_sequence(const fs::path& dir, const ValidationPolicy& policy) {
  const SequenceManifest m = read_manifest(dir);
  const auto streams = load_streams(dir, m);
  ValidationReport rep;
  auto& out = rep.findings;

  std::optional<std::int64_t> seq_lo;
  std::optional<std::int64_t> seq_hi;
  for (const auto& ls : streams) {
    if (!ls.index || ls.index->records.empty()) continue;
    const auto [lo, hi] = stamp_range(*ls.index);
    seq_lo = seq_lo ? std::min(*seq_lo, lo) : lo;
    seq_hi = seq_hi ? std::max(*seq_hi, hi) : hi;
  }
  const std::int64_t seq_span = seq_lo ? *seq_hi - *seq_lo : 0;

  for (const auto& ls : streams) {
    const std::string& id = ls.spec.stream_id;
    if (!ls.index) {
      out.push_back(finding(Severity::Error, "bad_index", id, std::nullopt, ls.load_error));
      continue;
    }
    const auto& recs = ls.index->records;
    if (recs.empty()) {
      out.push_back(finding(Severity::Warning, "empty_stream", id, std::nullopt, "stream has no records"));
      continue;
    }

    const double nominal_period_ns = ls.spec.nominal_rate_hz > 0.0 ? 1e9 / ls.spec.nominal_rate_hz : 0.0;
    for (std::size_t i = 1; i < recs.size(); ++i) {
      const std::int64_t dt = recs[i].stamp_ns - recs[i - 1].stamp_ns;
      if (dt < 0) {
        out.push_back(finding(Severity::Error, "non_monotonic", id, i,
                              fmt::format("stamp {} precedes previous stamp {}", recs[i].stamp_ns,
                                          recs[i - 1].stamp_ns)));
      } else if (nominal_period_ns > 0.0 && static_cast<double>(dt) > policy.gap_factor * nominal_period_ns) {
        out.push_back(finding(Severity::Warning, "gap", id, i,
                              fmt::format("{:.6f} s interval exceeds {} nominal periods",
                                          static_cast<double>(dt) * 1e-9, policy.gap_factor)));
      }
    }

    // Payload presence and size. Row files are read once per stream.
    StreamReader reader(dir, ls.spec, *ls.index, true);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto loc = parse_locator(recs[i].file);
      if (!loc) {
        out.push_back(finding(Severity::Error, "missing_payload", id, i,
                              "locator '" + recs[i].file + "' does not resolve inside the stream directory"));
        continue;
      }
      std::vector<std::uint8_t> bytes;
      try {
        bytes = reader.payload_bytes(recs[i]);
      } catch (const Error& e) {
        out.push_back(finding(Severity::Error, "missing_payload", id, i, e.what()));
        continue;
      }
      if (bytes.size() != recs[i].bytes) {
        out.push_back(finding(Severity::Error, "payload_size_mismatch", id, i,
                              fmt::format("payload has {} bytes, index says {}", bytes.size(), recs[i].bytes)));
      }
    }

    const auto [lo, hi] = stamp_range(*ls.index);
    const std::int64_t span = hi - lo;
    if (ls.spec.nominal_rate_hz > 0.0 && recs.size() >= 2 && span > 0) {
      const double measured = static_cast<double>(recs.size() - 1) / (static_cast<double>(span) * 1e-9);
      const double dev = std::abs(measured - ls.spec.nominal_rate_hz) / ls.spec.nominal_rate_hz;
      if (dev > policy.rate_tol) {
        out.push_back(finding(Severity::Warning, "rate_deviation", id, std::nullopt,
                              fmt::format("measured {:.3f} Hz vs nominal {:.3f} Hz ({:.1f}% > {:.1f}%)", measured,
                                          ls.spec.nominal_rate_hz, dev * 100.0, policy.rate_tol * 100.0)));
      }
    }
    if (seq_span > 0) {
      const double coverage = static_cast<double>(span) / static_cast<double>(seq_span);
      if (coverage < policy.overlap) {
        out.push_back(finding(Severity::Warning, "short_coverage", id, std::nullopt,
                              fmt::format("stream spans {:.2f}% of the sequence (< {:.2f}%)", coverage * 100.0,
                                          policy.overlap * 100.0)));
      }
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
    const std::size_t ai = a.index ? *a.index + 1 : 0;
    const std::size_t bi = b.index ? *b.index + 1 : 0;
    return std::tie(a.subject, ai, a.code) < std::tie(b.subject, bi, b.code);
  });
  return rep;
}

SequenceStats sequence_stats(const fs::path& dir, const ValidationPolicy& policy) {
  const SequenceManifest m = read_manifest(dir);
  SequenceStats st;
  st.sequence_id = m.sequence_id;
  std::optional<std::int64_t> lo_all;
  std::optional<std::int64_t> hi_all;
  for (const auto& spec : m.streams) {
    const StreamIndex idx = read_stream_index(dir, spec.stream_id);
    StreamStats s;
    s.stream_id = spec.stream_id;
    s.count = idx.records.size();
    for (const auto& r : idx.records) s.bytes += r.bytes;
    if (!idx.records.empty()) {
      const auto [lo, hi] = stamp_range(idx);
      lo_all = lo_all ? std::min(*lo_all, lo) : lo;
      hi_all = hi_all ? std::max(*hi_all, hi) : hi;
      if (hi > lo) s.measured_rate_hz = static_cast<double>(s.count - 1) / (static_cast<double>(hi - lo) * 1e-9);
      const double nominal_period_ns = spec.nominal_rate_hz > 0.0 ? 1e9 / spec.nominal_rate_hz : 0.0;
      for (std::size_t i = 1; i < idx.records.size(); ++i) {
        const std::int64_t dt = idx.records[i].stamp_ns - idx.records[i - 1].stamp_ns;
        s.max_gap_s = std::max(s.max_gap_s, static_cast<double>(dt) * 1e-9);
        if (nominal_period_ns > 0.0 && static_cast<double>(dt) > policy.gap_factor * nominal_period_ns) ++s.gap_count;
      }
    }
    if (spec.kind == StreamKind::Trajectory && !st.trajectory_length_m && !idx.records.empty()) {
      StreamReader reader(dir, spec, idx, false);
      Trajectory t;
      t.frame = spec.frame;
      while (auto rec = reader.next()) t.entries.push_back(std::get<StampedPose>(rec->payload));
      st.trajectory_length_m = trajectory_length(t);
    }
    st.streams.push_back(std::move(s));
  }
  if (!lo_all) throw Error(Errc::EmptySequence, "sequence '" + m.sequence_id + "' has no records");
  st.duration_ns = *hi_all - *lo_all;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) st.total_bytes += e.file_size();
  }
  return st;
}

std::string format_duration(std::int64_t ns) {
  if (ns < 0) throw Error(Errc::InvalidArgument, "negative duration");
  const std::int64_t s = (ns + 500'000'000) / 1'000'000'000;
  return fmt::format("{:02d}m {:02d}s", s / 60, s % 60);
}

std::string format_gigabytes(std::uint64_t bytes) {
  return fmt::format("{:.1f} GB", static_cast<double>(bytes) / 1e9);
}

ordered_json to_json(const SequenceStats& s) {
  ordered_json j;
  j["sequence_id"] = s.sequence_id;
  j["duration_s"] = static_cast<double>(s.duration_ns) * 1e-9;
  j["duration"] = format_duration(s.duration_ns);
  j["total_bytes"] = s.total_bytes;
  j["size"] = format_gigabytes(s.total_bytes);
  if (s.trajectory_length_m) {
    j["trajectory_length_m"] = *s.trajectory_length_m;
  } else {
    j["trajectory_length_m"] = nullptr;
  }
  j["streams"] = ordered_json::array();
  for (const auto& st : s.streams) {
    ordered_json js;
    js["stream_id"] = st.stream_id;
    js["count"] = st.count;
    js["measured_rate_hz"] = st.measured_rate_hz;
    js["gap_count"] = st.gap_count;
    js["max_gap_s"] = st.max_gap_s;
    js["bytes"] = st.bytes;
    j["streams"].push_back(std::move(js));
  }
  return j;
}

ordered_json to_json(const ValidationReport& r) {
  ordered_json j;
  j["ok"] = r.ok();
  j["errors"] = r.count(Severity::Error);
  j["warnings"] = r.count(Severity::Warning);
  j["findings"] = ordered_json::array();
  for (const auto& f : r.findings) j["findings"].push_back(to_json(f));
  return j;
}

std::string to_text(const SequenceStats& s) {
  std::string out;
  out += fmt::format("sequence  {}\n", s.sequence_id);
  out += fmt::format("duration  {}\n", format_duration(s.duration_ns));
  out += fmt::format("size      {} ({} bytes)\n", format_gigabytes(s.total_bytes), s.total_bytes);
  if (s.trajectory_length_m) out += fmt::format("length    {:.1f} m\n", *s.trajectory_length_m);
  out += fmt::format("{:<20} {:>8} {:>12} {:>6} {:>10} {:>14}\n", "stream", "count", "rate_hz", "gaps", "max_gap_s",
                     "bytes");
  for (const auto& st : s.streams) {
    out += fmt::format("{:<20} {:>8} {:>12.3f} {:>6} {:>10.3f} {:>14}\n", st.stream_id, st.count, st.measured_rate_hz,
                       st.gap_count, st.max_gap_s, st.bytes);
  }
  return out;
}

std::string to_text(const ValidationReport& r) {
  std::string out;
  for (const auto& f : r.findings) {
    out += fmt::format("{:<7} {:<22} {}", to_string(f.severity), f.code, f.subject);
    if (f.index) out += fmt::format("[{}]", *f.index);
    out += ": " + f.message + "\n";
  }
  out += fmt::format("{} error(s), {} warning(s)\n", r.count(Severity::Error), r.count(Severity::Warning));
  return out;
}

}  // namespace rig
