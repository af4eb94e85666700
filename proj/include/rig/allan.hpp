#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rig/report.hpp"

namespace rig {

/// Static IMU recording. gyro in rad/s, accel in m/s^2, axes ordered x, y, z.
struct ImuLog {
  double rate_hz = 0.0;
  std::array<std::vector<double>, 3> gyro;
  std::array<std::vector<double>, 3> accel;
  std::vector<std::int64_t> stamps_ns;  ///< may be empty

  std::size_t size() const { return gyro[0].size(); }
  /// Throws InvalidArgument when axes differ in length, length < 2 or rate <= 0.
  void check() const;
};

/// Reads a CSV with header `t_ns,gx,gy,gz,ax,ay,az`. If `rate_hz` is not
/// given, the rate is inferred from the median stamp interval.
ImuLog read_imu_csv(const std::string& path, std::optional<double> rate_hz = std::nullopt);
void write_imu_csv(const std::string& path, const ImuLog& log);

struct AllanCurve {
  std::vector<double> taus_s;  ///< strictly increasing, exactly m / rate
  std::vector<double> adev;
  std::vector<std::size_t> n_clusters;
  std::vector<std::size_t> window_samples;  ///< m for each tau
  std::vector<std::string> warnings;        ///< dropped taus
};

/// Log-spaced, `per_decade` points per decade from 2/rate to len/(3 rate),
/// as window sizes in samples (deduplicated, increasing).
std::vector<std::size_t> default_window_grid(std::size_t len, int per_decade = 10);
std::vector<double> default_tau_grid(std::size_t len, double rate_hz, int per_decade = 10);

/**
 * @brief Overlapping Allan deviation.
 *
 * For each tau the window is m = round(tau * rate) samples and
 *
 *   sigma^2(tau) = 1 / (2 (N - 2m)) * sum_{k=0}^{N-2m-1} (ybar_{k+m} - ybar_k)^2
 *
 * with ybar_k the mean of samples k .. k+m-1. Taus outside
 * [2/rate, (N/3)/rate] are dropped with a warning. Throws TooShort if the
 * signal admits no valid tau (N < 6).
 */
AllanCurve allan_deviation(std::span<const double> samples, double rate_hz, std::span<const double> taus_s);
AllanCurve allan_deviation(std::span<const double> samples, double rate_hz);  ///< default grid

/// Diagnostics of one straight-line fit in log-log space.
struct SlopeFit {
  double value = 0.0;          ///< N (tau = 1 s) or K (tau = 3 s)
  double tau_min_s = 0.0;      ///< fit window
  double tau_max_s = 0.0;
  std::size_t n_points = 0;
  double free_slope = 0.0;     ///< unconstrained OLS slope over the window
  double rms_log_residual = 0.0;
};

/// Longest contiguous run (first on ties) of at least 3 grid points whose
/// centered log-log slope is within +-0.1 of `target`. Returns [begin, end).
std::optional<std::pair<std::size_t, std::size_t>> find_slope_region(const AllanCurve& c, double target);

/// Slope -1/2 region, N read at tau = 1 s. Throws NoWhiteNoiseRegion.
SlopeFit estimate_noise_density(const AllanCurve& c);
/// Slope +1/2 region, K read at tau = 3 s. Throws NoRandomWalkRegion.
SlopeFit estimate_random_walk(const AllanCurve& c);

struct AxisNoise {
  AllanCurve curve;
  std::optional<SlopeFit> noise_density;
  std::optional<SlopeFit> random_walk;
  std::string noise_density_error;
  std::string random_walk_error;
};

struct SensorNoise {
  std::array<AxisNoise, 3> axes;
  /// Mean over axes whose fit succeeded; empty if none did.
  std::optional<double> noise_density;
  std::optional<double> random_walk;
};

struct ImuNoiseParams {
  SensorNoise gyro;
  SensorNoise accel;
};

/// Per-axis curves and fits. Axes are processed concurrently when
/// `threads` > 1; results are identical to the sequential run.
ImuNoiseParams characterize_imu(const ImuLog& log, int per_decade = 10, unsigned threads = 1);

/// Synthetic static IMU: per-sample white noise of std `*_sigma` (noise
/// density sigma / sqrt(rate)) plus a bias random walk whose increments have
/// std K * sqrt(1 / rate).
struct ImuSimSpec {
  double rate_hz = 100.0;
  std::size_t n = 0;
  double gyro_sigma = 0.0;
  double accel_sigma = 0.0;
  double gyro_rrw = 0.0;   ///< K
  double accel_rrw = 0.0;  ///< K
  std::uint64_t seed = 1;
};

/// Deterministic for a given spec (mt19937_64). Throws BadSpec.
ImuLog simulate_imu(const ImuSimSpec& spec);

ordered_json to_json(const ImuNoiseParams& p);
/// `tau_s,adev` rows.
std::string allan_curve_csv(const AllanCurve& c);

}  // namespace rig
