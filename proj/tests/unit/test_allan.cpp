#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "rig/allan.hpp"
#include "rig/error.hpp"
#include "test_util.hpp"

using namespace rig;

namespace {

// Overlapping Allan variance by the literal double sum over cluster means.
double brute_adev(const std::vector<double>& y, std::size_t m) {
  const std::size_t n = y.size();
  auto mean_at = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = k; i < k + m; ++i) s += y[i];
    return s / static_cast<double>(m);
  };
  double acc = 0.0;
  const std::size_t terms = n - 2 * m;
  for (std::size_t k = 0; k < terms; ++k) {
    const double d = mean_at(k + m) - mean_at(k);
    acc += d * d;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(terms)));
}

std::vector<double> white(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return Errc::IoError;
}

}  // namespace

TEST_SUITE("allan") {

TEST_CASE("matches the literal double sum") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> y(301);
    double drift = 0.0;
    for (auto& v : y) {
      drift += 0.01 * u(rng);
      v = u(rng) + drift + 3.0;
    }
    const double rate = 50.0;
    std::vector<double> taus;
    for (std::size_t m = 2; m <= 100; m += 7) taus.push_back(static_cast<double>(m) / rate);
    const AllanCurve c = allan_deviation(y, rate, taus);
    REQUIRE(c.taus_s.size() == taus.size());
    CHECK(c.warnings.empty());
    for (std::size_t i = 0; i < c.taus_s.size(); ++i) {
      const std::size_t m = c.window_samples[i];
      CHECK(c.taus_s[i] == static_cast<double>(m) / rate);
      CHECK(c.n_clusters[i] == y.size() - 2 * m);
      CHECK(std::abs(c.adev[i] - brute_adev(y, m)) <= 1e-12 * brute_adev(y, m));
    }
  }
}

TEST_CASE("tau grid and domain checks") {
  const auto windows = default_window_grid(10000, 10);
  REQUIRE(!windows.empty());
  CHECK(windows.front() == 2);
  CHECK(windows.back() <= 10000 / 3);
  for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] > windows[i - 1]);
  // 10 per decade: from 2 to ~3333 spans a bit over 3 decades.
  CHECK(windows.size() >= 30);
  CHECK(windows.size() <= 33);

  const auto y = white(100, 1.0, 1);
  const std::vector<double> taus{0.001, 0.02, 0.1, 0.33, 0.34, 5.0};
  const AllanCurve c = allan_deviation(y, 100.0, taus);
  CHECK(c.taus_s == std::vector<double>{0.02, 0.1, 0.33});
  CHECK(c.warnings.size() == 3);

  CHECK(code_of([] { allan_deviation(std::vector<double>(5, 1.0), 100.0); }) == Errc::TooShort);
  CHECK(code_of([&] { allan_deviation(y, 100.0, std::vector<double>{10.0}); }) == Errc::TooShort);
  CHECK(code_of([&] { allan_deviation(y, 0.0); }) == Errc::InvalidArgument);
}

TEST_CASE("scaling and offset behave as the definition requires") {
  const auto y = white(2000, 0.3, 2);
  std::vector<double> scaled(y.size());
  std::vector<double> shifted(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    scaled[i] = -4.0 * y[i];
    shifted[i] = y[i] + 1e3;
  }
  const auto a = allan_deviation(y, 100.0);
  const auto b = allan_deviation(scaled, 100.0);
  const auto c = allan_deviation(shifted, 100.0);
  for (std::size_t i = 0; i < a.adev.size(); ++i) {
    CHECK(b.adev[i] == doctest::Approx(4.0 * a.adev[i]).epsilon(1e-12));
    CHECK(c.adev[i] == doctest::Approx(a.adev[i]).epsilon(1e-9));
  }
  const auto flat = allan_deviation(std::vector<double>(100, 2.5), 10.0);
  for (const double v : flat.adev) CHECK(v == 0.0);
}

TEST_CASE("white noise follows sigma / sqrt(m) and yields N") {
  const double rate = 100.0;
  const double sigma = 0.01;
  const auto y = white(360'000, sigma, 4);
  const AllanCurve c = allan_deviation(y, rate);
  for (std::size_t i = 0; i < c.adev.size(); ++i) {
    if (c.n_clusters[i] < 100'000) break;
    const double expected = sigma / std::sqrt(static_cast<double>(c.window_samples[i]));
    CHECK(c.adev[i] == doctest::Approx(expected).epsilon(0.05));
  }
  const SlopeFit n = estimate_noise_density(c);
  CHECK(n.value == doctest::Approx(sigma / std::sqrt(rate)).epsilon(0.05));
  CHECK(n.free_slope == doctest::Approx(-0.5).epsilon(0.1));
  CHECK(n.n_points >= 3);
  CHECK(code_of([&] { estimate_random_walk(c); }) == Errc::NoRandomWalkRegion);
}

TEST_CASE("rate random walk yields K") {
  ImuSimSpec spec;
  spec.rate_hz = 100.0;
  spec.n = 360'000;
  spec.gyro_sigma = 1e-3;
  spec.gyro_rrw = 1e-4;
  spec.accel_sigma = 1e-2;
  spec.accel_rrw = 1e-3;
  spec.seed = 11;
  const ImuNoiseParams p = characterize_imu(simulate_imu(spec), 10, 1);
  REQUIRE(p.gyro.random_walk);
  REQUIRE(p.accel.random_walk);
  REQUIRE(p.gyro.noise_density);
  CHECK(*p.gyro.random_walk == doctest::Approx(1e-4).epsilon(0.10));
  CHECK(*p.accel.random_walk == doctest::Approx(1e-3).epsilon(0.10));
  CHECK(*p.gyro.noise_density == doctest::Approx(1e-4).epsilon(0.05));
  CHECK(*p.accel.noise_density == doctest::Approx(1e-3).epsilon(0.05));
}

TEST_CASE("pure random walk has no white-noise region") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y(50'000);
  double b = 0.0;
  for (auto& v : y) {
    v = b;
    b += g(rng);
  }
  const AllanCurve c = allan_deviation(y, 100.0);
  CHECK(code_of([&] { estimate_noise_density(c); }) == Errc::NoWhiteNoiseRegion);
  CHECK_NOTHROW(estimate_random_walk(c));
}

TEST_CASE("threaded characterization equals the sequential run") {
  ImuSimSpec spec;
  spec.n = 20'000;
  spec.gyro_sigma = 0.01;
  spec.accel_sigma = 0.1;
  spec.seed = 5;
  const ImuLog log = simulate_imu(spec);
  CHECK(to_json(characterize_imu(log, 10, 1)).dump() == to_json(characterize_imu(log, 10, 4)).dump());
}

TEST_CASE("simulator is deterministic and validates its spec") {
  ImuSimSpec spec;
  spec.n = 1000;
  spec.gyro_sigma = 0.01;
  spec.seed = 9;
  const ImuLog a = simulate_imu(spec);
  const ImuLog b = simulate_imu(spec);
  CHECK(a.gyro == b.gyro);
  CHECK(a.stamps_ns[1] == 10'000'000);
  spec.seed = 10;
  CHECK(simulate_imu(spec).gyro != a.gyro);
  spec.n = 1;
  CHECK(code_of([&] { simulate_imu(spec); }) == Errc::BadSpec);
}

TEST_CASE("IMU CSV round trip and rate inference") {
  ImuSimSpec spec;
  spec.rate_hz = 200.0;
  spec.n = 500;
  spec.gyro_sigma = 0.01;
  spec.accel_sigma = 0.1;
  const ImuLog log = simulate_imu(spec);
  testutil::TempDir tmp("imu");
  const auto path = (tmp / "imu.csv").string();
  write_imu_csv(path, log);
  const ImuLog back = read_imu_csv(path);
  CHECK(back.rate_hz == doctest::Approx(200.0));
  CHECK(back.gyro == log.gyro);
  CHECK(back.accel == log.accel);
  CHECK(back.stamps_ns == log.stamps_ns);
  CHECK(read_imu_csv(path, 400.0).rate_hz == 400.0);
}

}  // TEST_SUITE
