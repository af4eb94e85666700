#include "rig/allan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "rig/error.hpp"

namespace rig {

void ImuLog::check() const {
  if (!(rate_hz > 0.0)) throw Error(Errc::InvalidArgument, "IMU rate must be positive");
  const std::size_t n = gyro[0].size();
  for (const auto* axes : {&gyro, &accel}) {
    for (const auto& a : *axes) {
      if (a.size() != n) throw Error(Errc::InvalidArgument, "IMU axes differ in length");
    }
  }
  if (n < 2) throw Error(Errc::InvalidArgument, "IMU log needs at least 2 samples");
  if (!stamps_ns.empty() && stamps_ns.size() != n) {
    throw Error(Errc::InvalidArgument, "IMU stamp count differs from sample count");
  }
}

ImuLog read_imu_csv(const std::string& path, std::optional<double> rate_hz) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  ImuLog log;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "t_ns,gx,gy,gz,ax,ay,az") {
        throw Error(Errc::ParseError, fmt::format("{}:{}: expected header 't_ns,gx,gy,gz,ax,ay,az'", path, line_no));
      }
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(Errc::ParseError, fmt::format("{}:{}: expected 7 columns", path, line_no));
    try {
      std::size_t pos = 0;
      const long long t = std::stoll(cells[0], &pos);
      if (pos != cells[0].size()) throw std::invalid_argument("t_ns");
      log.stamps_ns.push_back(t);
      for (int i = 0; i < 6; ++i) {
        const auto& c = cells[static_cast<std::size_t>(i) + 1];
        const double v = std::stod(c, &pos);
        if (pos != c.size() || !std::isfinite(v)) throw std::invalid_argument("value");
        (i < 3 ? log.gyro[static_cast<std::size_t>(i)] : log.accel[static_cast<std::size_t>(i - 3)]).push_back(v);
      }
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, fmt::format("{}:{}: malformed number", path, line_no));
    }
  }
  if (!header) throw Error(Errc::ParseError, path + ": missing header");
  for (std::size_t i = 1; i < log.stamps_ns.size(); ++i) {
    if (log.stamps_ns[i] <= log.stamps_ns[i - 1]) {
      throw Error(Errc::NonMonotonic, fmt::format("{}: stamp of sample {} does not increase", path, i));
    }
  }
  if (rate_hz) {
    log.rate_hz = *rate_hz;
  } else {
    if (log.stamps_ns.size() < 2) throw Error(Errc::TooShort, path + ": cannot infer rate from < 2 samples");
    std::vector<std::int64_t> dt;
    dt.reserve(log.stamps_ns.size() - 1);
    for (std::size_t i = 1; i < log.stamps_ns.size(); ++i) dt.push_back(log.stamps_ns[i] - log.stamps_ns[i - 1]);
    std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
    log.rate_hz = 1e9 / static_cast<double>(dt[dt.size() / 2]);
  }
  log.check();
  return log;
}

void write_imu_csv(const std::string& path, const ImuLog& log) {
  log.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << "t_ns,gx,gy,gz,ax,ay,az\n";
  const long double period = 1e9L / static_cast<long double>(log.rate_hz);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const std::int64_t t = log.stamps_ns.empty() ? std::llround(static_cast<long double>(i) * period) : log.stamps_ns[i];
    out << t;
    for (const auto* axes : {&log.gyro, &log.accel}) {
      for (const auto& a : *axes) out << ',' << fmt::format("{:.17g}", a[i]);
    }
    out << '\n';
  }
}

std::vector<std::size_t> default_window_grid(std::size_t len, int per_decade) {
  std::vector<std::size_t> out;
  const std::size_t max_m = len / 3;
  for (int k = 0;; ++k) {
    const double m_real = 2.0 * std::pow(10.0, static_cast<double>(k) / per_decade);
    const auto m = static_cast<std::size_t>(std::llround(m_real));
    if (m > max_m) break;
    if (out.empty() || m > out.back()) out.push_back(m);
  }
  return out;
}

std::vector<double> default_tau_grid(std::size_t len, double rate_hz, int per_decade) {
  std::vector<double> taus;
  for (const auto m : default_window_grid(len, per_decade)) taus.push_back(static_cast<double>(m) / rate_hz);
  return taus;
}

namespace {

AllanCurve allan_for_windows(std::span<const double> samples, double rate_hz, std::vector<std::size_t> windows,
                             std::vector<std::string> warnings) {
  const std::size_t n = samples.size();
  long double mean = 0.0L;
  for (const double v : samples) mean += v;
  mean /= static_cast<long double>(n);
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (static_cast<long double>(samples[i]) - mean);

  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

  AllanCurve c;
  c.warnings = std::move(warnings);
  for (const std::size_t m : windows) {
    const std::size_t terms = n - 2 * m;
    long double acc = 0.0L;
    for (std::size_t k = 0; k < terms; ++k) {
      const long double d = (prefix[k + 2 * m] - prefix[k + m]) - (prefix[k + m] - prefix[k]);
      acc += d * d;
    }
    const long double md = static_cast<long double>(m);
    const long double var = acc / (md * md) / (2.0L * static_cast<long double>(terms));
    c.taus_s.push_back(static_cast<double>(m) / rate_hz);
    c.adev.push_back(static_cast<double>(std::sqrt(var)));
    c.n_clusters.push_back(terms);
    c.window_samples.push_back(m);
  }
  return c;
}

}  // namespace

AllanCurve allan_deviation(std::span<const double> samples, double rate_hz, std::span<const double> taus_s) {
  if (!(rate_hz > 0.0)) throw Error(Errc::InvalidArgument, "rate must be positive");
  const std::size_t n = samples.size();
  if (n < 6) throw Error(Errc::TooShort, fmt::format("{} samples; at least 6 are needed", n));
  std::vector<std::size_t> windows;
  std::vector<std::string> warnings;
  for (const double tau : taus_s) {
    const double m_real = tau * rate_hz;
    const long long m = std::isfinite(m_real) ? std::llround(m_real) : -1;
    if (m < 2 || static_cast<std::size_t>(m) > n / 3) {
      warnings.push_back(fmt::format("tau {:g} s outside [{:g}, {:g}] s; dropped", tau, 2.0 / rate_hz,
                                     static_cast<double>(n / 3) / rate_hz));
      continue;
    }
    windows.push_back(static_cast<std::size_t>(m));
  }
  if (windows.empty()) throw Error(Errc::TooShort, "no requested tau is valid for this signal length");
  return allan_for_windows(samples, rate_hz, std::move(windows), std::move(warnings));
}

AllanCurve allan_deviation(std::span<const double> samples, double rate_hz) {
  if (!(rate_hz > 0.0)) throw Error(Errc::InvalidArgument, "rate must be positive");
  if (samples.size() < 6) throw Error(Errc::TooShort, fmt::format("{} samples; at least 6 are needed", samples.size()));
  return allan_for_windows(samples, rate_hz, default_window_grid(samples.size()), {});
}

std::optional<std::pair<std::size_t, std::size_t>> find_slope_region(const AllanCurve& c, double target) {
  const std::size_t n = c.taus_s.size();
  if (n < 3) return std::nullopt;
  std::vector<double> lt(n);
  std::vector<double> la(n);
  for (std::size_t i = 0; i < n; ++i) {
    lt[i] = std::log(c.taus_s[i]);
    la[i] = c.adev[i] > 0.0 ? std::log(c.adev[i]) : std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<bool> in(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? i : i + 1;
    const double slope = (la[hi] - la[lo]) / (lt[hi] - lt[lo]);
    in[i] = std::isfinite(slope) && std::abs(slope - target) <= 0.1;
  }
  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::size_t i = 0;
  while (i < n) {
    if (!in[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && in[j]) ++j;
    if (j - i >= 3 && (!best || j - i > best->second - best->first)) best = std::make_pair(i, j);
    i = j;
  }
  return best;
}

namespace {

SlopeFit fit_fixed_slope(const AllanCurve& c, std::pair<std::size_t, std::size_t> region, double slope,
                         double read_tau) {
  const auto [b, e] = region;
  const auto n = static_cast<double>(e - b);
  // log adev = log(value) + slope * log(tau / read_tau)
  double sum = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = b; i < e; ++i) {
    const double x = std::log(c.taus_s[i]);
    const double y = std::log(c.adev[i]);
    sum += y - slope * (x - std::log(read_tau));
    mx += x;
    my += y;
  }
  const double log_value = sum / n;
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double ss = 0.0;
  for (std::size_t i = b; i < e; ++i) {
    const double x = std::log(c.taus_s[i]);
    const double y = std::log(c.adev[i]);
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    const double r = y - (log_value + slope * (x - std::log(read_tau)));
    ss += r * r;
  }
  SlopeFit f;
  f.value = std::exp(log_value);
  f.tau_min_s = c.taus_s[b];
  f.tau_max_s = c.taus_s[e - 1];
  f.n_points = e - b;
  f.free_slope = sxy / sxx;
  f.rms_log_residual = std::sqrt(ss / n);
  return f;
}

}  // namespace

SlopeFit estimate_noise_density(const AllanCurve& c) {
  const auto region = find_slope_region(c, -0.5);
  if (!region) throw Error(Errc::NoWhiteNoiseRegion, "no run of >= 3 points with log-log slope in [-0.6, -0.4]");
  return fit_fixed_slope(c, *region, -0.5, 1.0);
}

SlopeFit estimate_random_walk(const AllanCurve& c) {
  const auto region = find_slope_region(c, 0.5);
  if (!region) throw Error(Errc::NoRandomWalkRegion, "no run of >= 3 points with log-log slope in [0.4, 0.6]");
  return fit_fixed_slope(c, *region, 0.5, 3.0);
}

namespace {

AxisNoise characterize_axis(const std::vector<double>& samples, double rate_hz, int per_decade) {
  AxisNoise a;
  a.curve = allan_for_windows(samples, rate_hz, default_window_grid(samples.size(), per_decade), {});
  try {
    a.noise_density = estimate_noise_density(a.curve);
  } catch (const Error& e) {
    a.noise_density_error = e.what();
  }
  try {
    a.random_walk = estimate_random_walk(a.curve);
  } catch (const Error& e) {
    a.random_walk_error = e.what();
  }
  return a;
}

void aggregate(SensorNoise& s) {
  auto mean_of = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    for (const auto& a : s.axes) {
      if (const auto& f = a.*member) {
        sum += f->value;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  s.noise_density = mean_of(&AxisNoise::noise_density);
  s.random_walk = mean_of(&AxisNoise::random_walk);
}

}  // namespace

ImuNoiseParams characterize_imu(const ImuLog& log, int per_decade, unsigned threads) {
  log.check();
  if (log.size() < 6) throw Error(Errc::TooShort, "IMU log needs at least 6 samples");
  ImuNoiseParams p;
  std::array<AxisNoise*, 6> slots{&p.gyro.axes[0], &p.gyro.axes[1], &p.gyro.axes[2],
                                  &p.accel.axes[0], &p.accel.axes[1], &p.accel.axes[2]};
  auto job = [&](std::size_t i) {
    const auto& src = i < 3 ? log.gyro[i] : log.accel[i - 3];
    *slots[i] = characterize_axis(src, log.rate_hz, per_decade);
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < 6; ++i) job(i);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t t = std::min<std::size_t>(threads, 6);
    for (std::size_t w = 0; w < t; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < 6; i += t) job(i);
      });
    }
  }
  aggregate(p.gyro);
  aggregate(p.accel);
  return p;
}

namespace {

ordered_json fit_json(const std::optional<SlopeFit>& f) {
  if (!f) return nullptr;
  ordered_json j;
  j["value"] = f->value;
  j["tau_min_s"] = f->tau_min_s;
  j["tau_max_s"] = f->tau_max_s;
  j["n_points"] = f->n_points;
  j["free_slope"] = f->free_slope;
  j["rms_log_residual"] = f->rms_log_residual;
  return j;
}

ordered_json sensor_json(const SensorNoise& s) {
  ordered_json j;
  j["noise_density"] = s.noise_density ? ordered_json(*s.noise_density) : ordered_json(nullptr);
  j["random_walk"] = s.random_walk ? ordered_json(*s.random_walk) : ordered_json(nullptr);
  j["axes"] = ordered_json::array();
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = s.axes[i];
    ordered_json ja;
    ja["axis"] = kAxis[i];
    ja["noise_density"] = fit_json(a.noise_density);
    ja["random_walk"] = fit_json(a.random_walk);
    if (!a.noise_density_error.empty()) ja["noise_density_error"] = a.noise_density_error;
    if (!a.random_walk_error.empty()) ja["random_walk_error"] = a.random_walk_error;
    ja["n_taus"] = a.curve.taus_s.size();
    j["axes"].push_back(std::move(ja));
  }
  return j;
}

}  // namespace

ImuLog simulate_imu(const ImuSimSpec& spec) {
  if (!(spec.rate_hz > 0.0) || spec.n < 2 || spec.gyro_sigma < 0.0 || spec.accel_sigma < 0.0 || spec.gyro_rrw < 0.0 ||
      spec.accel_rrw < 0.0) {
    throw Error(Errc::BadSpec, "rate must be positive, n >= 2 and noise parameters non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  ImuLog log;
  log.rate_hz = spec.rate_hz;
  const double step = std::sqrt(1.0 / spec.rate_hz);
  auto fill = [&](std::vector<double>& v, double sigma, double k) {
    v.resize(spec.n);
    double bias = 0.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
      v[i] = bias + sigma * unit(rng);
      bias += k * step * unit(rng);
    }
  };
  for (auto& axis : log.gyro) fill(axis, spec.gyro_sigma, spec.gyro_rrw);
  for (auto& axis : log.accel) fill(axis, spec.accel_sigma, spec.accel_rrw);
  log.stamps_ns.resize(spec.n);
  const long double period = 1e9L / static_cast<long double>(spec.rate_hz);
  for (std::size_t i = 0; i < spec.n; ++i) log.stamps_ns[i] = std::llround(static_cast<long double>(i) * period);
  return log;
}

ordered_json to_json(const ImuNoiseParams& p) {
  ordered_json j;
  j["gyro"] = sensor_json(p.gyro);
  j["accel"] = sensor_json(p.accel);
  return j;
}

std::string allan_curve_csv(const AllanCurve& c) {
  std::string out = "tau_s,adev\n";
  for (std::size_t i = 0; i < c.taus_s.size(); ++i) out += fmt::format("{:.9g},{:.9g}\n", c.taus_s[i], c.adev[i]);
  return out;
}

}  // namespace rig
