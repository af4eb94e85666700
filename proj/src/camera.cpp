#include "rig/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "rig/error.hpp"

namespace rig {

void CameraIntrinsics::check() const {
  if (!(fx > 0.0 && fy > 0.0)) throw Error(Errc::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(Errc::InvalidArgument, "principal point must lie inside the image");
  }
}

Eigen::Vector2d distort(const Distortion& d, const Eigen::Vector2d& xy) {
  const double x = xy.x();
  const double y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + d.k1 * r2 + d.k2 * r2 * r2;
  return {x * radial + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
          y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y};
}

Eigen::Vector2d undistort(const CameraIntrinsics& k, const Eigen::Vector2d& distorted) {
  const Distortion& d = k.distortion;
  if (d.is_zero()) return distorted;
  if (!(std::abs(d.k1) < 1.0)) {
    throw Error(Errc::NoConvergence, fmt::format("|k1| = {} is outside the contraction range", std::abs(d.k1)));
  }
  Eigen::Vector2d xy = distorted;
  for (int it = 0; it < 50; ++it) {
    const double x = xy.x();
    const double y = xy.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + d.k1 * r2 + d.k2 * r2 * r2;
    const Eigen::Vector2d tangential(2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
                                     d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y);
    xy = (distorted - tangential) / radial;
    if ((distort(d, xy) - distorted).norm() < 1e-12) return xy;
  }
  if ((distort(d, xy) - distorted).norm() < 1e-10) return xy;
  throw Error(Errc::NoConvergence, "undistortion did not converge in 50 iterations");
}

Projection project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam) {
  Projection out;
  if (!(p_cam.z() > 0.0)) return out;
  const Eigen::Vector2d xd = distort(k.distortion, {p_cam.x() / p_cam.z(), p_cam.y() / p_cam.z()});
  out.pixel = {k.fx * xd.x() + k.cx, k.fy * xd.y() + k.cy};
  out.valid = out.pixel.x() >= 0.0 && out.pixel.x() < k.width && out.pixel.y() >= 0.0 && out.pixel.y() < k.height;
  return out;
}

Eigen::Vector3d backproject(const CameraIntrinsics& k, const Eigen::Vector2d& pixel, double depth) {
  if (!(depth > 0.0)) throw Error(Errc::InvalidArgument, "depth must be positive");
  const Eigen::Vector2d xd((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy);
  const Eigen::Vector2d xy = undistort(k, xd);
  return Eigen::Vector3d(xy.x(), xy.y(), 1.0) * depth;
}

ReprojStats reprojection_stats(const std::vector<ReprojObservation>& observations, const Transform& cam_from_world,
                               const CameraIntrinsics& k) {
  ReprojStats s;
  for (const auto& o : observations) {
    const auto proj = project(k, transform_point(cam_from_world, o.point_world));
    if (!proj.valid) {
      ++s.n_invalid;
      continue;
    }
    s.residuals.push_back((proj.pixel - o.measured).norm());
  }
  if (s.residuals.empty()) throw Error(Errc::NoValidProjections, "no observation projects into the image");
  const auto n = static_cast<double>(s.residuals.size());
  double sum = 0.0;
  for (const double r : s.residuals) sum += r;
  s.mean_px = sum / n;
  double ss = 0.0;
  for (const double r : s.residuals) ss += (r - s.mean_px) * (r - s.mean_px);
  s.std_px = std::sqrt(ss / n);
  s.max_px = *std::max_element(s.residuals.begin(), s.residuals.end());
  s.n_points = s.residuals.size();
  return s;
}

Rgb8 sample_nearest(const Image& img, const Eigen::Vector2d& pixel) {
  const int col = std::clamp(static_cast<int>(std::floor(pixel.x() + 0.5)), 0, img.width - 1);
  const int row = std::clamp(static_cast<int>(std::floor(pixel.y() + 0.5)), 0, img.height - 1);
  return img.at(col, row);
}

PointCloud colorize_cloud(const PointCloud& cloud, const std::vector<CameraView>& cameras, unsigned threads) {
  cloud.check();
  for (const auto& c : cameras) {
    c.intrinsics.check();
    if (c.image.width != c.intrinsics.width || c.image.height != c.intrinsics.height ||
        c.image.rgb.size() != static_cast<std::size_t>(c.image.width) * static_cast<std::size_t>(c.image.height) * 3) {
      throw Error(Errc::DimensionMismatch,
                  fmt::format("camera '{}': image {}x{} vs intrinsics {}x{}", c.id, c.image.width, c.image.height,
                              c.intrinsics.width, c.intrinsics.height));
    }
  }

  PointCloud out;
  out.frame = cloud.frame;
  out.points = cloud.points;
  out.colors.assign(cloud.size(), Rgb8{0, 0, 0});
  out.camera_ids.assign(cloud.size(), std::nullopt);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best_angle = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < cameras.size(); ++c) {
        const Eigen::Vector3d p = transform_point(cameras[c].cam_from_base, cloud.points[i]);
        if (!(p.z() > 0.0)) continue;
        const auto proj = project(cameras[c].intrinsics, p);
        if (!proj.valid) continue;
        const double angle = std::atan2(std::hypot(p.x(), p.y()), p.z());
        if (angle < best_angle) {
          best_angle = angle;
          out.colors[i] = sample_nearest(cameras[c].image, proj.pixel);
          out.camera_ids[i] = static_cast<std::uint32_t>(c);
        }
      }
    }
  };

  const std::size_t n = cloud.size();
  const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (t == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + t - 1) / t;
    for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
  }
  return out;
}

std::vector<CameraRecord> parse_camera_json(const std::string& text, const std::string& origin) {
  static const std::set<std::string> kKeys{"id", "frame", "fx", "fy", "cx", "cy", "width", "height", "distortion"};
  std::vector<CameraRecord> out;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& [k, v] : doc.items()) {
      if (k != "cameras") throw Error(Errc::ParseError, origin + ": unknown key '" + k + "'");
    }
    std::size_t idx = 0;
    for (const auto& jc : doc.at("cameras")) {
      const std::string where = fmt::format("{}: cameras[{}]", origin, idx++);
      for (const auto& [k, v] : jc.items()) {
        if (kKeys.count(k) == 0) throw Error(Errc::ParseError, where + ": unknown key '" + k + "'");
      }
      CameraRecord r;
      r.id = jc.at("id").get<std::string>();
      r.frame = jc.value("frame", r.id);
      auto& k = r.intrinsics;
      k.fx = jc.at("fx");
      k.fy = jc.at("fy");
      k.cx = jc.at("cx");
      k.cy = jc.at("cy");
      k.width = jc.at("width");
      k.height = jc.at("height");
      if (jc.contains("distortion")) {
        const auto d = jc["distortion"].get<std::vector<double>>();
        if (d.size() != 4) throw Error(Errc::ParseError, where + ": distortion needs [k1, k2, p1, p2]");
        k.distortion = {d[0], d[1], d[2], d[3]};
      }
      try {
        k.check();
      } catch (const Error& e) {
        throw Error(Errc::ParseError, where + ": " + e.what());
      }
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, origin + ": " + e.what());
  }
  return out;
}

std::vector<CameraRecord> read_camera_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_camera_json(ss.str(), path.string());
}

}  // namespace rig
