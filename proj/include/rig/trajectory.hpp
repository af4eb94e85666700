#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rig/report.hpp"
#include "rig/se3.hpp"

namespace rig {

struct StampedPose {
  std::int64_t stamp_ns = 0;
  Transform pose;
};

/// Time-ordered poses; stamps strictly increasing.
struct Trajectory {
  std::string frame;
  std::vector<StampedPose> entries;

  std::size_t size() const { return entries.size(); }
  /// Throws NonMonotonic or InvalidArgument (empty).
  void check() const;
};

/// Parses "<t_seconds> <stamp> ..." seconds text into integer nanoseconds
/// without going through floating point (beyond 9 fractional digits the
/// value is rounded half away from zero). Throws ParseError.
std::int64_t parse_seconds_to_ns(const std::string& token);
std::string format_ns_as_seconds(std::int64_t ns);

/// Whitespace-separated `t x y z qx qy qz qw` per line; '#' lines and blank
/// lines are skipped. Throws ParseError (with line number) or NonMonotonic.
Trajectory parse_trajectory(const std::string& text, const std::string& origin = "<string>");
Trajectory load_trajectory(const std::filesystem::path& path);
std::string format_trajectory(const Trajectory& t);
void save_trajectory(const std::filesystem::path& path, const Trajectory& t);

/// Sum of consecutive position distances, metres.
double trajectory_length(const Trajectory& t);
/// Last minus first stamp, exact.
std::int64_t duration_ns(const Trajectory& t);
double duration(const Trajectory& t);  ///< seconds

struct MatchedPair {
  std::size_t gt_index = 0;
  std::size_t est_index = 0;
  std::int64_t dt_ns = 0;  ///< est - gt
};

struct AssociationResult {
  std::vector<MatchedPair> pairs;  ///< ordered by gt_index
  std::int64_t max_dt_ns = 0;
};

inline constexpr std::int64_t kDefaultMaxDtNs = 20'000'000;

/// Greedy globally-nearest matching: candidates with |dt| <= max_dt_ns are
/// taken in order of (|dt|, gt index, est index), each index at most once.
/// Throws NoMatches.
AssociationResult associate(const Trajectory& gt, const Trajectory& est, std::int64_t max_dt_ns = kDefaultMaxDtNs);

struct Alignment {
  Transform transform;  ///< maps est positions onto gt
  double scale = 1.0;
  bool degenerate = false;  ///< translation-only fallback was used
};

/**
 * @brief Closed-form least-squares alignment (Umeyama).
 *
 * Minimizes sum ||gt_i - (s R est_i + t)||^2 with det(R) = +1; s = 1 unless
 * `with_scale`. With fewer than 3 points, or collinear/coincident points,
 * the rotation is unobservable and a translation-only solution is returned
 * with `degenerate` set.
 */
Alignment umeyama_align(const std::vector<Eigen::Vector3d>& gt, const std::vector<Eigen::Vector3d>& est,
                        bool with_scale = false);

struct AteOptions {
  std::int64_t max_dt_ns = kDefaultMaxDtNs;
  bool align = true;
  bool with_scale = false;
};

struct AteReport {
  double rmse_m = 0.0;
  double std_m = 0.0;  ///< population
  double mean_m = 0.0;
  double median_m = 0.0;
  double max_m = 0.0;
  std::size_t n_pairs = 0;
  Alignment alignment;
  std::vector<double> residuals;  ///< per matched pair, gt order
};

/// Statistics of a residual list (population std; median averages the middle two).
void fill_statistics(AteReport& r);

/// associate, align on matched positions, then translational residuals.
/// Alignment needs >= 3 pairs (InsufficientData otherwise).
AteReport ate(const Trajectory& gt, const Trajectory& est, const AteOptions& opts = {});

ordered_json to_json(const AteReport& r);
std::string ate_csv_header();
std::string ate_csv_row(const std::string& label, const AteReport& r);

}  // namespace rig
