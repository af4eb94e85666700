#include "rig/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "rig/error.hpp"

namespace rig {

void Trajectory::check() const {
  if (entries.empty()) throw Error(Errc::InvalidArgument, "trajectory is empty");
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].stamp_ns <= entries[i - 1].stamp_ns) {
      throw Error(Errc::NonMonotonic, fmt::format("stamp of entry {} does not increase", i));
    }
  }
}

std::int64_t parse_seconds_to_ns(const std::string& token) {
  auto fail = [&] { return Error(Errc::ParseError, "bad time value '" + token + "'"); };
  if (token.empty()) throw fail();
  if (token.find_first_of("eE") != std::string::npos) {
    char* end = nullptr;
    const long double v = std::strtold(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v) || std::abs(v) > 9.2e9L) throw fail();
    return std::llround(v * 1e9L);
  }
  std::size_t i = 0;
  bool negative = false;
  if (token[i] == '+' || token[i] == '-') negative = token[i++] == '-';
  std::int64_t whole = 0;
  std::size_t digits = 0;
  for (; i < token.size() && std::isdigit(static_cast<unsigned char>(token[i])); ++i, ++digits) {
    if (whole > 9'000'000'000LL) throw fail();
    whole = whole * 10 + (token[i] - '0');
  }
  std::int64_t frac = 0;
  if (i < token.size() && token[i] == '.') {
    ++i;
    int places = 0;
    bool round_up = false;
    for (; i < token.size() && std::isdigit(static_cast<unsigned char>(token[i])); ++i, ++digits) {
      if (places < 9) {
        frac = frac * 10 + (token[i] - '0');
      } else if (places == 9) {
        round_up = token[i] >= '5';
      }
      ++places;
    }
    for (; places < 9; ++places) frac *= 10;
    if (round_up) ++frac;
  }
  if (i != token.size() || digits == 0) throw fail();
  const std::int64_t ns = whole * 1'000'000'000LL + frac;
  return negative ? -ns : ns;
}

std::string format_ns_as_seconds(std::int64_t ns) {
  const bool negative = ns < 0;
  const std::uint64_t mag = negative ? 0ULL - static_cast<std::uint64_t>(ns) : static_cast<std::uint64_t>(ns);
  return fmt::format("{}{}.{:09d}", negative ? "-" : "", mag / 1'000'000'000ULL, mag % 1'000'000'000ULL);
}

Trajectory parse_trajectory(const std::string& text, const std::string& origin) {
  Trajectory t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string s;
    while (ls >> s) tok.push_back(s);
    const std::string where = fmt::format("{}:{}", origin, line_no);
    if (tok.size() != 8) throw Error(Errc::ParseError, fmt::format("{}: expected 8 fields, got {}", where, tok.size()));
    StampedPose p;
    try {
      p.stamp_ns = parse_seconds_to_ns(tok[0]);
    } catch (const Error&) {
      throw Error(Errc::ParseError, where + ": bad timestamp '" + tok[0] + "'");
    }
    double v[7];
    for (int k = 0; k < 7; ++k) {
      const auto& c = tok[static_cast<std::size_t>(k) + 1];
      char* end = nullptr;
      v[k] = std::strtod(c.c_str(), &end);
      if (end != c.c_str() + c.size() || !std::isfinite(v[k])) {
        throw Error(Errc::ParseError, where + ": bad number '" + c + "'");
      }
    }
    p.pose.translation = {v[0], v[1], v[2]};
    try {
      p.pose.rotation = UnitQuaternion(v[6], v[3], v[4], v[5]);
    } catch (const Error&) {
      throw Error(Errc::ParseError, where + ": zero quaternion");
    }
    if (!t.entries.empty() && p.stamp_ns <= t.entries.back().stamp_ns) {
      throw Error(Errc::NonMonotonic, where + ": stamp does not increase");
    }
    t.entries.push_back(p);
  }
  return t;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trajectory(ss.str(), path.string());
}

std::string format_trajectory(const Trajectory& t) {
  std::string out;
  for (const auto& e : t.entries) {
    const auto& p = e.pose.translation;
    const auto& q = e.pose.rotation;
    out += fmt::format("{} {:.10f} {:.10f} {:.10f} {:.12f} {:.12f} {:.12f} {:.12f}\n", format_ns_as_seconds(e.stamp_ns),
                       p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w());
  }
  return out;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << format_trajectory(t);
}

double trajectory_length(const Trajectory& t) {
  double len = 0.0;
  for (std::size_t i = 1; i < t.entries.size(); ++i) {
    len += (t.entries[i].pose.translation - t.entries[i - 1].pose.translation).norm();
  }
  return len;
}

std::int64_t duration_ns(const Trajectory& t) {
  if (t.entries.empty()) return 0;
  return t.entries.back().stamp_ns - t.entries.front().stamp_ns;
}

double duration(const Trajectory& t) { return static_cast<double>(duration_ns(t)) * 1e-9; }

AssociationResult associate(const Trajectory& gt, const Trajectory& est, std::int64_t max_dt_ns) {
  if (gt.entries.empty() || est.entries.empty()) throw Error(Errc::NoMatches, "empty trajectory");
  std::vector<std::int64_t> est_stamps;
  est_stamps.reserve(est.size());
  for (const auto& e : est.entries) est_stamps.push_back(e.stamp_ns);

  struct Candidate {
    std::int64_t abs_dt;
    std::size_t gi;
    std::size_t ej;
  };
  std::vector<Candidate> cand;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::int64_t t = gt.entries[i].stamp_ns;
    auto lo = std::lower_bound(est_stamps.begin(), est_stamps.end(), t - max_dt_ns);
    for (auto it = lo; it != est_stamps.end() && *it <= t + max_dt_ns; ++it) {
      cand.push_back({std::abs(*it - t), i, static_cast<std::size_t>(it - est_stamps.begin())});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.abs_dt, a.gi, a.ej) < std::tie(b.abs_dt, b.gi, b.ej);
  });

  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> est_used(est.size(), false);
  AssociationResult r;
  r.max_dt_ns = max_dt_ns;
  for (const auto& c : cand) {
    if (gt_used[c.gi] || est_used[c.ej]) continue;
    gt_used[c.gi] = est_used[c.ej] = true;
    r.pairs.push_back({c.gi, c.ej, est.entries[c.ej].stamp_ns - gt.entries[c.gi].stamp_ns});
  }
  if (r.pairs.empty()) throw Error(Errc::NoMatches, fmt::format("no stamps within {} ns", max_dt_ns));
  std::sort(r.pairs.begin(), r.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) { return a.gt_index < b.gt_index; });
  return r;
}

Alignment umeyama_align(const std::vector<Eigen::Vector3d>& gt, const std::vector<Eigen::Vector3d>& est,
                        bool with_scale) {
  if (gt.size() != est.size() || gt.empty()) {
    throw Error(Errc::InvalidArgument, "alignment needs equally sized, non-empty point sets");
  }
  const auto n = static_cast<double>(gt.size());
  Eigen::Vector3d mu_gt = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_est = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    mu_gt += gt[i];
    mu_est += est[i];
  }
  mu_gt /= n;
  mu_est /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
  double var_est = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Eigen::Vector3d de = est[i] - mu_est;
    cov += (gt[i] - mu_gt) * de.transpose();
    spread += de * de.transpose();
    var_est += de.squaredNorm();
  }
  cov /= n;
  spread /= n;
  var_est /= n;

  Alignment a;
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(spread).singularValues();
  if (gt.size() < 3 || !(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    a.degenerate = true;
    a.transform.translation = mu_gt - mu_est;
    return a;
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
  const Eigen::Matrix3d rot = svd.matrixU() * s * svd.matrixV().transpose();
  if (with_scale) a.scale = (svd.singularValues().asDiagonal() * s).trace() / var_est;
  a.transform.rotation = UnitQuaternion::from_matrix(rot);
  a.transform.translation = mu_gt - a.scale * (rot * mu_est);
  return a;
}

void fill_statistics(AteReport& r) {
  const auto& e = r.residuals;
  r.n_pairs = e.size();
  if (e.empty()) return;
  const auto n = static_cast<double>(e.size());
  double sum = 0.0;
  double sq = 0.0;
  for (const double v : e) {
    sum += v;
    sq += v * v;
  }
  r.mean_m = sum / n;
  r.rmse_m = std::sqrt(sq / n);
  double ss = 0.0;
  for (const double v : e) ss += (v - r.mean_m) * (v - r.mean_m);
  r.std_m = std::sqrt(ss / n);
  r.max_m = *std::max_element(e.begin(), e.end());
  std::vector<double> sorted = e;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  r.median_m = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

AteReport ate(const Trajectory& gt, const Trajectory& est, const AteOptions& opts) {
  const auto assoc = associate(gt, est, opts.max_dt_ns);
  std::vector<Eigen::Vector3d> pg;
  std::vector<Eigen::Vector3d> pe;
  pg.reserve(assoc.pairs.size());
  pe.reserve(assoc.pairs.size());
  for (const auto& p : assoc.pairs) {
    pg.push_back(gt.entries[p.gt_index].pose.translation);
    pe.push_back(est.entries[p.est_index].pose.translation);
  }
  AteReport r;
  if (opts.align) {
    if (pg.size() < 3) {
      throw Error(Errc::InsufficientData, fmt::format("{} matched pairs; alignment needs at least 3", pg.size()));
    }
    r.alignment = umeyama_align(pg, pe, opts.with_scale);
  }
  const Eigen::Matrix3d rot = r.alignment.transform.rotation.matrix();
  r.residuals.reserve(pg.size());
  for (std::size_t i = 0; i < pg.size(); ++i) {
    const Eigen::Vector3d aligned = r.alignment.scale * (rot * pe[i]) + r.alignment.transform.translation;
    r.residuals.push_back((pg[i] - aligned).norm());
  }
  fill_statistics(r);
  return r;
}

ordered_json to_json(const AteReport& r) {
  ordered_json j;
  j["rmse_m"] = r.rmse_m;
  j["std_m"] = r.std_m;
  j["mean_m"] = r.mean_m;
  j["median_m"] = r.median_m;
  j["max_m"] = r.max_m;
  j["n_pairs"] = r.n_pairs;
  ordered_json a;
  const auto& t = r.alignment.transform;
  a["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
  a["rotation"] = {{"w", t.rotation.w()}, {"x", t.rotation.x()}, {"y", t.rotation.y()}, {"z", t.rotation.z()}};
  a["scale"] = r.alignment.scale;
  a["degenerate"] = r.alignment.degenerate;
  j["alignment"] = std::move(a);
  return j;
}

std::string ate_csv_header() { return "label,rmse_m,std_m,mean_m,median_m,max_m,n_pairs\n"; }

std::string ate_csv_row(const std::string& label, const AteReport& r) {
  return fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", label, r.rmse_m, r.std_m, r.mean_m, r.median_m,
                     r.max_m, r.n_pairs);
}

}  // namespace rig
