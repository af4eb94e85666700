#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rig/image.hpp"

namespace rig {

struct PointCloud {
  std::string frame;
  std::vector<Eigen::Vector3d> points;
  std::vector<Rgb8> colors;                               ///< empty, or one per point
  std::vector<std::optional<std::uint32_t>> camera_ids;   ///< empty, or one per point

  std::size_t size() const { return points.size(); }
  bool has_colors() const { return !colors.empty(); }
  /// Throws InvalidArgument on non-finite coordinates or partial colors.
  void check() const;
};

// Binary little-endian PLY with a single "vertex" element. Coordinates are
// written as float32 x, y, z, followed by uchar red, green, blue when the
// cloud has colors.

std::vector<std::uint8_t> encode_ply(const PointCloud& cloud);
PointCloud decode_ply(const std::vector<std::uint8_t>& bytes);

void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace rig
