#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rig/clock_sync.hpp"
#include "rig/image.hpp"
#include "rig/point_cloud.hpp"
#include "rig/report.hpp"
#include "rig/trajectory.hpp"

namespace rig {

// Sequence directory layout (format_version 1):
//
//   <dir>/manifest.json
//   <dir>/<stream_id>/index.csv        header `stamp_ns,file,bytes`
//   <dir>/<stream_id>/000000.png ...   camera frames, one file per record
//   <dir>/<stream_id>/000000.ply ...   LiDAR scans, one file per record
//   <dir>/<stream_id>/data.csv         IMU rows, `t_ns,gx,gy,gz,ax,ay,az`
//   <dir>/<stream_id>/trajectory.txt   poses, `t x y z qx qy qz qw`
//
// `file` is relative to the stream directory. Row-based payloads use
// `<file>#<row>` (0-based data row) and `bytes` is the row length including
// its newline.

inline constexpr int kSequenceFormatVersion = 1;

enum class StreamKind { Camera, Imu, Lidar, Trajectory };
const char* to_string(StreamKind k);
StreamKind parse_stream_kind(const std::string& s);

struct SensorSpec {
  std::string stream_id;
  StreamKind kind = StreamKind::Imu;
  double nominal_rate_hz = 0.0;  ///< required > 0 except for trajectories
  std::string frame;
};

enum class Scenario { Indoor, Outdoor };

struct SequenceManifest {
  int format_version = kSequenceFormatVersion;
  std::string sequence_id;
  Scenario scenario = Scenario::Indoor;
  std::string description;
  ClockDomainKind clock = ClockDomainKind::Ptp;
  std::vector<SensorSpec> streams;

  const SensorSpec* find(const std::string& stream_id) const;
  /// Throws SchemaError.
  void check() const;
};

SequenceManifest parse_manifest(const std::string& text, const std::string& origin = "manifest.json");
std::string format_manifest(const SequenceManifest& m);
/// Throws MissingManifest or SchemaError.
SequenceManifest read_manifest(const std::filesystem::path& dir);

struct IndexRecord {
  std::int64_t stamp_ns = 0;
  std::string file;
  std::uint64_t bytes = 0;
};

struct StreamIndex {
  std::string stream_id;
  std::vector<IndexRecord> records;
};

/// Throws IoError (missing index) or ParseError.
StreamIndex read_stream_index(const std::filesystem::path& dir, const std::string& stream_id);

struct ImuSample {
  std::int64_t stamp_ns = 0;
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
};

struct ImageRef {
  std::filesystem::path path;
  int width = 0;
  int height = 0;
};

using RecordPayload = std::variant<ImuSample, ImageRef, PointCloud, StampedPose>;

struct Record {
  std::size_t index = 0;
  std::int64_t stamp_ns = 0;
  std::string locator;
  std::uint64_t bytes = 0;
  RecordPayload payload;
};

struct RecordError {
  std::size_t index = 0;
  std::string message;
};

/**
 * @brief Sequential reader over one stream, in index order.
 *
 * A record whose payload is missing, has the wrong size, fails to decode or
 * disagrees with its index stamp throws CorruptRecord; with `lenient` it is
 * skipped and listed in errors() instead.
 */
class StreamReader {
 public:
  StreamReader(std::filesystem::path dir, SensorSpec spec, StreamIndex index, bool lenient);

  std::optional<Record> next();
  std::vector<Record> read_all();

  const SensorSpec& spec() const { return spec_; }
  const StreamIndex& index() const { return index_; }
  const std::vector<RecordError>& errors() const { return errors_; }

  /// Raw payload bytes of a record (file contents, or the row with newline).
  std::vector<std::uint8_t> payload_bytes(const IndexRecord& r);

 private:
  Record decode(std::size_t i);
  const std::vector<std::string>& rows(const std::string& file);

  std::filesystem::path stream_dir_;
  SensorSpec spec_;
  StreamIndex index_;
  bool lenient_;
  std::size_t cursor_ = 0;
  std::vector<RecordError> errors_;
  std::map<std::string, std::vector<std::string>> row_cache_;
};

/// Throws UnknownStream (and whatever reading the manifest/index throws).
StreamReader open_stream(const std::filesystem::path& dir, const std::string& stream_id, bool lenient = false);

/// Writes the native layout. Single owner per directory; call finish() once.
class SequenceWriter {
 public:
  SequenceWriter(std::filesystem::path dir, SequenceManifest manifest);

  void add_image(const std::string& stream_id, std::int64_t stamp_ns, const Image& img);
  void add_scan(const std::string& stream_id, std::int64_t stamp_ns, const PointCloud& cloud);
  void add_imu(const std::string& stream_id, const ImuSample& s);
  void add_pose(const std::string& stream_id, const StampedPose& p);
  void finish();

 private:
  struct Pending {
    std::vector<IndexRecord> records;
    std::string rows;  // row-based data file contents
  };
  Pending& stream(const std::string& id, StreamKind expected);
  void add_file(const std::string& stream_id, StreamKind kind, std::int64_t stamp_ns, const std::string& ext,
                const std::vector<std::uint8_t>& bytes);

  std::filesystem::path dir_;
  SequenceManifest manifest_;
  std::map<std::string, Pending> pending_;
  bool finished_ = false;
};

std::string imu_row(const ImuSample& s);

struct ValidationPolicy {
  double rate_tol = 0.10;
  double gap_factor = 3.0;
  double overlap = 0.99;
};

/// Findings ordered by (stream, record index, code). Monotonicity and
/// payload problems are errors; rate, gap and coverage findings warnings.
ValidationReport validate_sequence(const std::filesystem::path& dir, const ValidationPolicy& policy = {});

struct StreamStats {
  std::string stream_id;
  std::size_t count = 0;
  double measured_rate_hz = 0.0;
  std::size_t gap_count = 0;
  double max_gap_s = 0.0;
  std::uint64_t bytes = 0;  ///< sum of index byte sizes
};

struct SequenceStats {
  std::string sequence_id;
  std::int64_t duration_ns = 0;
  std::vector<StreamStats> streams;
  std::uint64_t total_bytes = 0;  ///< every regular file under the directory
  std::optional<double> trajectory_length_m;
};

/// Throws EmptySequence when no stream has a record.
SequenceStats sequence_stats(const std::filesystem::path& dir, const ValidationPolicy& policy = {});

/// "MMm SSs", seconds rounded to nearest.
std::string format_duration(std::int64_t ns);
/// Decimal gigabytes with one decimal, e.g. "5.7 GB".
std::string format_gigabytes(std::uint64_t bytes);

ordered_json to_json(const SequenceStats& s);
ordered_json to_json(const ValidationReport& r);
std::string to_text(const SequenceStats& s);
std::string to_text(const ValidationReport& r);

}  // namespace rig
