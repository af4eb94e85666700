#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rig/image.hpp"
#include "rig/point_cloud.hpp"
#include "rig/se3.hpp"

namespace rig {

/// Radial-tangential (plumb bob) coefficients.
struct Distortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  bool is_zero() const { return k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0; }
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  Distortion distortion;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies in the image.
  void check() const;
};

/// Applies radial-tangential distortion to a normalized image point.
Eigen::Vector2d distort(const Distortion& d, const Eigen::Vector2d& xy);

/// Fixed-point inverse of distort(). Throws NoConvergence when |k1| >= 1 or
/// after 50 iterations without reaching 1e-12.
Eigen::Vector2d undistort(const CameraIntrinsics& k, const Eigen::Vector2d& distorted);

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  bool valid = false;
};

/// Invalid for z <= 0 or a pixel outside [0, width) x [0, height).
Projection project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam);

/// Point at depth `depth` (> 0) along the ray through `pixel`.
Eigen::Vector3d backproject(const CameraIntrinsics& k, const Eigen::Vector2d& pixel, double depth);

struct ReprojObservation {
  Eigen::Vector2d measured;
  Eigen::Vector3d point_world;
};

struct ReprojStats {
  double mean_px = 0.0;
  double std_px = 0.0;  ///< population
  double max_px = 0.0;
  std::size_t n_points = 0;
  std::size_t n_invalid = 0;      ///< observations that did not project and were skipped
  std::vector<double> residuals;  ///< per valid observation, input order
};

/// `cam_from_world` maps world points into the camera frame. Throws
/// NoValidProjections when nothing projects.
ReprojStats reprojection_stats(const std::vector<ReprojObservation>& observations, const Transform& cam_from_world,
                               const CameraIntrinsics& k);

struct CameraView {
  std::string id;
  Transform cam_from_base;  ///< maps cloud (base frame) points into this camera
  CameraIntrinsics intrinsics;
  Image image;
};

/// Nearest-pixel colour lookup; (u, v) must be a valid projection.
Rgb8 sample_nearest(const Image& img, const Eigen::Vector2d& pixel);

/**
 * @brief Colours a base-frame cloud from calibrated cameras.
 *
 * Each point takes the colour of the camera, among those it projects into,
 * whose optical axis is closest in angle to the point's viewing ray (ties
 * keep the earlier camera). Points no camera sees get (0, 0, 0) and no
 * camera id. No occlusion handling. Output order matches input, and the
 * result does not depend on `threads`.
 *
 * Throws DimensionMismatch when an image does not match its intrinsics.
 */
PointCloud colorize_cloud(const PointCloud& cloud, const std::vector<CameraView>& cameras, unsigned threads = 1);

/// Camera description file entry (JSON, see docs).
struct CameraRecord {
  std::string id;
  std::string frame;
  CameraIntrinsics intrinsics;
};

std::vector<CameraRecord> read_camera_file(const std::filesystem::path& path);
std::vector<CameraRecord> parse_camera_json(const std::string& text, const std::string& origin = "<string>");

}  // namespace rig
