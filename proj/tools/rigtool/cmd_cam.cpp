#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "cli.hpp"
#include "rig/camera.hpp"
#include "rig/error.hpp"
#include "rig/frame_graph.hpp"
#include "rig/point_cloud.hpp"

namespace rig::cli {

namespace {

struct ReprojArgs {
  std::string cameras;
  std::string camera;
  std::string observations;
  std::string calib;
  std::string world_frame;
  std::string residuals_out;
  std::string histogram_out;
  double bin_px = 0.1;
};

struct ColorizeArgs {
  std::string cloud;
  std::string cameras;
  std::string calib;
  std::vector<std::string> images;
  std::string out;
  std::string cloud_frame;
  unsigned threads = 1;
};

const CameraRecord& find_camera(const std::vector<CameraRecord>& cams, const std::string& id) {
  for (const auto& c : cams) {
    if (c.id == id) return c;
  }
  throw Error(Errc::InvalidArgument, "camera '" + id + "' is not in the camera file");
}

// CSV with header `u,v,x,y,z`: measured pixel and the world point.
std::vector<ReprojObservation> read_observations(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<ReprojObservation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "u,v,x,y,z") throw Error(Errc::ParseError, path + ":1: expected header 'u,v,x,y,z'");
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double v[5];
    char sep = 0;
    bool ok = static_cast<bool>(ls >> v[0]);
    for (int i = 1; ok && i < 5; ++i) ok = (ls >> sep) && sep == ',' && (ls >> v[i]);
    if (!ok || !(ls >> std::ws).eof()) throw Error(Errc::ParseError, fmt::format("{}:{}: malformed row", path, lineno));
    out.push_back({{v[0], v[1]}, {v[2], v[3], v[4]}});
  }
  return out;
}

Result reproj(Context& ctx, const ReprojArgs& a) {
  ctx.inputs.emplace_back(a.cameras);
  ctx.inputs.emplace_back(a.observations);
  const auto cams = read_camera_file(a.cameras);
  const CameraRecord& cam = find_camera(cams, a.camera);
  Transform cam_from_world = Transform::identity();
  if (!a.calib.empty()) {
    ctx.inputs.emplace_back(a.calib);
    if (a.world_frame.empty()) throw Error(Errc::InvalidArgument, "--calib needs --world-frame");
    cam_from_world = load_calibration_any(a.calib).lookup(cam.frame, a.world_frame);
  }
  const ReprojStats s = reprojection_stats(read_observations(a.observations), cam_from_world, cam.intrinsics);

  Result r;
  r.metrics["camera"] = cam.id;
  r.metrics["mean_px"] = s.mean_px;
  r.metrics["std_px"] = s.std_px;
  r.metrics["max_px"] = s.max_px;
  r.metrics["n_points"] = s.n_points;
  r.metrics["n_invalid"] = s.n_invalid;
  r.text = fmt::format("camera {}: mean {:.3f} px, std {:.3f} px, max {:.3f} px over {} points ({} skipped)\n",
                       cam.id, s.mean_px, s.std_px, s.max_px, s.n_points, s.n_invalid);
  r.csv = "camera,mean_px,std_px,max_px,n_points,n_invalid\n" +
          fmt::format("{},{},{},{},{},{}\n", cam.id, format_fixed(s.mean_px, 6), format_fixed(s.std_px, 6),
                      format_fixed(s.max_px, 6), s.n_points, s.n_invalid);
  if (s.n_invalid > 0) {
    r.findings.push_back({Severity::Warning, "invalid_projection", cam.id, std::nullopt,
                          fmt::format("{} observation(s) did not project into the image", s.n_invalid)});
  }
  if (!a.residuals_out.empty()) {
    std::string csv = "index,residual_px\n";
    for (std::size_t i = 0; i < s.residuals.size(); ++i) csv += fmt::format("{},{:.9f}\n", i, s.residuals[i]);
    write_file(a.residuals_out, csv);
  }
  if (!a.histogram_out.empty()) {
    if (!(a.bin_px > 0.0)) throw Error(Errc::InvalidArgument, "--bin-px must be positive");
    std::map<long long, std::size_t> bins;
    for (const double v : s.residuals) ++bins[static_cast<long long>(std::floor(v / a.bin_px))];
    std::string csv = "bin_lo_px,bin_hi_px,count\n";
    const long long last = bins.empty() ? -1 : bins.rbegin()->first;
    for (long long b = 0; b <= last; ++b) {
      const auto it = bins.find(b);
      csv += fmt::format("{:.6f},{:.6f},{}\n", static_cast<double>(b) * a.bin_px,
                         static_cast<double>(b + 1) * a.bin_px, it == bins.end() ? 0 : it->second);
    }
    write_file(a.histogram_out, csv);
  }
  return r;
}

Result colorize(Context& ctx, const ColorizeArgs& a) {
  ctx.inputs.emplace_back(a.cloud);
  ctx.inputs.emplace_back(a.cameras);
  ctx.inputs.emplace_back(a.calib);
  const PointCloud cloud = read_ply(a.cloud);
  const std::string frame = a.cloud_frame.empty() ? cloud.frame : a.cloud_frame;
  if (frame.empty()) throw Error(Errc::InvalidArgument, "cloud has no frame comment; pass --cloud-frame");
  const auto cams = read_camera_file(a.cameras);
  const FrameGraph g = load_calibration_any(a.calib);

  std::map<std::string, std::string> image_paths;
  for (const auto& spec : a.images) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(Errc::ParseError, "image '" + spec + "' must be id=path");
    const std::string id = spec.substr(0, eq);
    find_camera(cams, id);
    image_paths[id] = spec.substr(eq + 1);
  }

  Result r;
  std::vector<CameraView> views;
  for (const auto& c : cams) {
    const auto it = image_paths.find(c.id);
    if (it == image_paths.end()) {
      r.findings.push_back({Severity::Warning, "no_image", c.id, std::nullopt, "camera has no image and is skipped"});
      continue;
    }
    ctx.inputs.emplace_back(it->second);
    views.push_back({c.id, g.lookup(c.frame, frame), c.intrinsics, read_png(it->second)});
  }
  PointCloud out = colorize_cloud(cloud, views, a.threads);
  out.frame = frame;
  write_ply(a.out, out);

  std::vector<std::size_t> per_camera(views.size(), 0);
  std::size_t colored = 0;
  for (const auto& id : out.camera_ids) {
    if (id) {
      ++colored;
      ++per_camera[*id];
    }
  }
  r.metrics["n_points"] = out.size();
  r.metrics["n_colored"] = colored;
  r.metrics["per_camera"] = ordered_json::object();
  r.csv = "camera,points\n";
  r.text = fmt::format("colored {} of {} points -> {}\n", colored, out.size(), a.out);
  for (std::size_t i = 0; i < views.size(); ++i) {
    r.metrics["per_camera"][views[i].id] = per_camera[i];
    r.csv += fmt::format("{},{}\n", views[i].id, per_camera[i]);
    r.text += fmt::format("  {:<20} {}\n", views[i].id, per_camera[i]);
  }
  return r;
}

}  // namespace

void add_cam_commands(CLI::App& app, Context& ctx) {
  auto* cam = app.add_subcommand("cam", "Camera model checks");
  cam->require_subcommand(1);

  auto ra = std::make_shared<ReprojArgs>();
  auto* rep = cam->add_subcommand("reproj", "Reprojection error statistics for known 3-D points");
  rep->add_option("--cameras", ra->cameras, "Camera intrinsics JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--camera", ra->camera, "Camera id within the camera file")->required();
  rep->add_option("--observations", ra->observations, "CSV with header u,v,x,y,z (pixel, world point)")
      ->required()
      ->check(CLI::ExistingFile);
  rep->add_option("--calib", ra->calib, "Calibration file giving the camera pose; identity if omitted")
      ->check(CLI::ExistingFile);
  rep->add_option("--world-frame", ra->world_frame, "Frame of the observation points (with --calib)");
  rep->add_option("--residuals-out", ra->residuals_out, "Write per-observation residuals as CSV");
  rep->add_option("--histogram-out", ra->histogram_out, "Write a residual histogram as CSV");
  rep->add_option("--bin-px", ra->bin_px, "Histogram bin width in pixels")->capture_default_str();
  on_run(rep, ctx, "cam reproj", [&ctx, ra] { return reproj(ctx, *ra); });
}

void add_cloud_commands(CLI::App& app, Context& ctx) {
  auto* cloud = app.add_subcommand("cloud", "Point cloud operations");
  cloud->require_subcommand(1);

  auto ca = std::make_shared<ColorizeArgs>();
  auto* col = cloud->add_subcommand("colorize", "Color a LiDAR scan from the camera with the most central view");
  col->add_option("--cloud", ca->cloud, "Input PLY scan")->required()->check(CLI::ExistingFile);
  col->add_option("--cameras", ca->cameras, "Camera intrinsics JSON")->required()->check(CLI::ExistingFile);
  col->add_option("--calib", ca->calib, "Calibration file linking camera frames and the cloud frame")
      ->required()
      ->check(CLI::ExistingFile);
  col->add_option("--image", ca->images, "Camera image as id=path.png (repeatable)")->required();
  col->add_option("--out", ca->out, "Output PLY with colors")->required();
  col->add_option("--cloud-frame", ca->cloud_frame, "Frame of the scan when the PLY does not name one");
  col->add_option("--threads", ca->threads, "Worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
  on_run(col, ctx, "cloud colorize", [&ctx, ca] { return colorize(ctx, *ca); });
}

}  // namespace rig::cli
