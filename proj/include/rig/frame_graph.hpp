#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rig/report.hpp"
#include "rig/se3.hpp"

namespace rig {

enum class EdgeSource { Estimated, Manufacturer, Cad };

const char* to_string(EdgeSource s);
EdgeSource parse_edge_source(const std::string& s);

/// `transform` maps child-frame coordinates into the parent frame.
struct CalibEdge {
  std::string parent;
  std::string child;
  Transform transform;
  EdgeSource source = EdgeSource::Estimated;
  std::string label;
};

/// Frame names must be non-empty and contain no whitespace.
bool is_valid_frame_id(const std::string& name);

/**
 * @brief Rooted transformation tree of named coordinate frames.
 *
 * Frames are created implicitly by add_edge. At most one edge may join an
 * unordered pair of frames. Cycles through three or more frames can be
 * built but are reported by validate(); lookups assume a validated tree.
 */
class FrameGraph {
 public:
  FrameGraph() = default;
  explicit FrameGraph(std::string root);

  /// Throws SelfLoop, DuplicateEdge, or InvalidArgument for a bad frame name.
  void add_edge(CalibEdge edge);

  const std::string& root() const { return root_; }
  void set_root(std::string root);

  const std::set<std::string>& frames() const { return frames_; }
  bool has_frame(const std::string& f) const { return frames_.count(f) != 0; }

  /// Edges in canonical (parent, child) order.
  std::vector<CalibEdge> edges() const;
  std::size_t edge_count() const { return edges_.size(); }

  ValidationReport validate() const;

  /// Pose of `to` expressed in `from`: maps `to` coordinates into `from`.
  /// Throws UnknownFrame or Disconnected.
  Transform lookup(const std::string& from, const std::string& to) const;

 private:
  using Pair = std::pair<std::string, std::string>;
  static Pair key(const std::string& a, const std::string& b);

  std::string root_;
  std::set<std::string> frames_;
  std::map<Pair, CalibEdge> edges_;
  std::map<std::string, std::vector<std::string>> adjacency_;
};

struct ExtrinsicDiff {
  std::string from;
  std::string to;
  double position_diff_m = 0.0;
  double angular_diff_deg = 0.0;
};

std::vector<ExtrinsicDiff> diff_graphs(const FrameGraph& a, const FrameGraph& b,
                                       const std::vector<std::pair<std::string, std::string>>& pairs);

// Calibration text format (version 1):
//
//   # comment lines and blank lines are ignored
//   format_version 1
//   root <frame>
//   edge <parent> <child> <tx> <ty> <tz> <qw> <qx> <qy> <qz> <source> [label...]
//
// Translation in metres with 9 decimals, quaternion with 12 decimals and
// canonical sign; edges sorted by (parent, child). See docs/calibration_format.md.

inline constexpr int kCalibFormatVersion = 1;

std::string format_calibration(const FrameGraph& g);
FrameGraph parse_calibration(const std::string& text, const std::string& origin = "<string>");

void export_calibration(const FrameGraph& g, const std::filesystem::path& path);
FrameGraph import_calibration(const std::filesystem::path& path);

/**
 * JSON equivalent, one object per edge:
 *
 *   {"format_version": 1, "root": "base_link",
 *    "edges": [{"parent": "...", "child": "...", "translation": [x, y, z],
 *               "rotation": {"w":..,"x":..,"y":..,"z":..},
 *               "source": "estimated", "label": "..."}]}
 *
 * Instead of "rotation" an edge may carry "euler_deg": [X, Y, Z] with an
 * optional "euler_convention" (default intrinsic_xyz). "root" is optional
 * for edge-only files.
 */
FrameGraph parse_calibration_json(const std::string& text, const std::string& origin = "<string>");
FrameGraph import_calibration_json(const std::filesystem::path& path);

/// Dispatches on extension: ".json" uses the JSON reader, anything else the text reader.
FrameGraph load_calibration_any(const std::filesystem::path& path);

}  // namespace rig
