#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "rig/error.hpp"
#include "rig/trajectory.hpp"
#include "test_util.hpp"

using namespace rig;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return Errc::IoError;
}

// Horn's closed form: the optimal rotation is the dominant eigenvector of a
// symmetric 4x4 built from the cross-covariance. Independent of the SVD path.
Eigen::Matrix3d horn_rotation(const std::vector<Eigen::Vector3d>& gt, const std::vector<Eigen::Vector3d>& est) {
  Eigen::Vector3d mg = Eigen::Vector3d::Zero(), me = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    mg += gt[i];
    me += est[i];
  }
  mg /= static_cast<double>(gt.size());
  me /= static_cast<double>(gt.size());
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < gt.size(); ++i) S += (est[i] - me) * (gt[i] - mg).transpose();
  const double sxx = S(0, 0), sxy = S(0, 1), sxz = S(0, 2);
  const double syx = S(1, 0), syy = S(1, 1), syz = S(1, 2);
  const double szx = S(2, 0), szy = S(2, 1), szz = S(2, 2);
  Eigen::Matrix4d N;
  N << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
  const Eigen::Vector4d q = es.eigenvectors().col(3);
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

double alignment_cost(const std::vector<Eigen::Vector3d>& gt, const std::vector<Eigen::Vector3d>& est,
                      const Eigen::Matrix3d& R, const Eigen::Vector3d& t, double s = 1.0) {
  double c = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) c += (gt[i] - (s * R * est[i] + t)).squaredNorm();
  return c;
}

// Greedy matching by repeated global minimum search over unused indices.
std::vector<MatchedPair> brute_associate(const Trajectory& gt, const Trajectory& est, std::int64_t max_dt) {
  std::vector<bool> gu(gt.size(), false), eu(est.size(), false);
  std::vector<MatchedPair> out;
  for (;;) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gu[i]) continue;
      for (std::size_t j = 0; j < est.size(); ++j) {
        if (eu[j]) continue;
        const std::int64_t d = std::abs(est.entries[j].stamp_ns - gt.entries[i].stamp_ns);
        if (d <= max_dt && d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (best == std::numeric_limits<std::int64_t>::max()) break;
    gu[bi] = eu[bj] = true;
    out.push_back({bi, bj, est.entries[bj].stamp_ns - gt.entries[bi].stamp_ns});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.gt_index < b.gt_index; });
  return out;
}

Trajectory spiral(std::size_t n, std::int64_t start_ns, std::int64_t period_ns) {
  Trajectory t;
  t.frame = "map";
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 0.05 * static_cast<double>(i);
    StampedPose p;
    p.stamp_ns = start_ns + static_cast<std::int64_t>(i) * period_ns;
    p.pose.translation = {3.0 * std::cos(a), 2.0 * std::sin(a), 0.02 * static_cast<double>(i)};
    p.pose.rotation = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), a);
    t.entries.push_back(p);
  }
  return t;
}

Trajectory transformed(const Trajectory& src, const Transform& g, double scale = 1.0) {
  Trajectory out = src;
  for (auto& e : out.entries) e.pose.translation = scale * (g.rotation.matrix() * e.pose.translation) + g.translation;
  return out;
}

std::vector<Eigen::Vector3d> positions(const Trajectory& t) {
  std::vector<Eigen::Vector3d> p;
  for (const auto& e : t.entries) p.push_back(e.pose.translation);
  return p;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("seconds text converts to integer nanoseconds exactly") {
  CHECK(parse_seconds_to_ns("1700000000.123456789") == 1'700'000'000'123'456'789);
  CHECK(parse_seconds_to_ns("1.5") == 1'500'000'000);
  CHECK(parse_seconds_to_ns("42") == 42'000'000'000);
  CHECK(parse_seconds_to_ns("0.0000000005") == 1);
  CHECK(parse_seconds_to_ns("-0.25") == -250'000'000);
  CHECK(code_of([] { parse_seconds_to_ns("1.2.3"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_seconds_to_ns("abc"); }) == Errc::ParseError);
  for (const std::int64_t ns : {0LL, 1LL, 999'999'999LL, 1'700'000'000'123'456'789LL, -1'500'000'000LL}) {
    CHECK(parse_seconds_to_ns(format_ns_as_seconds(ns)) == ns);
  }
}

TEST_CASE("trajectory text round trip") {
  const std::string text =
      "# t x y z qx qy qz qw\n"
      "1700000000.000000000 1 2 3 0 0 0 1\n"
      "\n"
      "1700000000.100000000 1.5 2 3 0 0 0.7071067811865476 0.7071067811865476\n";
  const Trajectory t = parse_trajectory(text);
  REQUIRE(t.size() == 2);
  CHECK(t.entries[1].stamp_ns - t.entries[0].stamp_ns == 100'000'000);
  CHECK(t.entries[1].pose.rotation.z() == doctest::Approx(std::sqrt(0.5)));
  const Trajectory back = parse_trajectory(format_trajectory(t));
  CHECK(back.entries[1].stamp_ns == t.entries[1].stamp_ns);
  CHECK(format_trajectory(back) == format_trajectory(t));
  CHECK(duration_ns(t) == 100'000'000);
  CHECK(trajectory_length(t) == doctest::Approx(0.5));

  CHECK(code_of([] { parse_trajectory("1 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n"); }) == Errc::NonMonotonic);
  CHECK(code_of([] { parse_trajectory("1 0 0 0 0 0 1\n"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_trajectory("1 0 0 0 0 0 0 0\n"); }) == Errc::ParseError);
  try {
    parse_trajectory("1 0 0 0 0 0 0 1\n2 0 0 x 0 0 0 1\n", "est.txt");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("est.txt:2") != std::string::npos);
  }
}

TEST_CASE("association matches the brute-force greedy matcher") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::int64_t> u(0, 2'000'000'000);
  for (int trial = 0; trial < 100; ++trial) {
    auto make = [&](std::size_t n) {
      std::vector<std::int64_t> s(n);
      for (auto& v : s) v = u(rng);
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      Trajectory t;
      for (const auto v : s) t.entries.push_back({v, Transform{}});
      return t;
    };
    const Trajectory gt = make(5 + rng() % 40);
    const Trajectory est = make(5 + rng() % 40);
    const std::int64_t max_dt = 20'000'000;
    const auto ref = brute_associate(gt, est, max_dt);
    if (ref.empty()) {
      CHECK(code_of([&] { associate(gt, est, max_dt); }) == Errc::NoMatches);
      continue;
    }
    const auto got = associate(gt, est, max_dt);
    REQUIRE(got.pairs.size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(got.pairs[k].gt_index == ref[k].gt_index);
      CHECK(got.pairs[k].est_index == ref[k].est_index);
      CHECK(got.pairs[k].dt_ns == ref[k].dt_ns);
    }
  }
}

TEST_CASE("alignment recovers a known rigid transform") {
  std::mt19937_64 rng(32);
  const auto gt = positions(spiral(200, 0, 100'000'000));
  for (int trial = 0; trial < 50; ++trial) {
    const Transform g = testutil::random_transform(rng, 10.0);
    const Transform inv = invert(g);
    std::vector<Eigen::Vector3d> est;
    for (const auto& p : gt) est.push_back(transform_point(inv, p));
    const Alignment a = umeyama_align(gt, est);
    CHECK_FALSE(a.degenerate);
    CHECK(rotation_angle_between(a.transform.rotation, g.rotation) < 1e-7);
    CHECK((a.transform.translation - g.translation).norm() < 1e-8);
  }
}

TEST_CASE("alignment with scale recovers a similarity transform") {
  std::mt19937_64 rng(33);
  const auto gt = positions(spiral(150, 0, 100'000'000));
  const Transform g = testutil::random_transform(rng, 4.0);
  const double s = 2.5;
  std::vector<Eigen::Vector3d> est;
  const Eigen::Matrix3d R = g.rotation.matrix();
  for (const auto& p : gt) est.push_back(R.transpose() * (p - g.translation) / s);
  const Alignment a = umeyama_align(gt, est, true);
  CHECK(a.scale == doctest::Approx(s).epsilon(1e-9));
  CHECK(rotation_angle_between(a.transform.rotation, g.rotation) < 1e-7);
  CHECK((a.transform.translation - g.translation).norm() < 1e-8);
}

TEST_CASE("alignment agrees with Horn and is a local optimum under noise") {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> noise(0.0, 0.05);
  const auto gt = positions(spiral(300, 0, 100'000'000));
  const Transform g = testutil::random_transform(rng, 5.0);
  std::vector<Eigen::Vector3d> est;
  for (const auto& p : gt) {
    est.push_back(transform_point(invert(g), p) + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
  }
  const Alignment a = umeyama_align(gt, est);
  const Eigen::Matrix3d R = a.transform.rotation.matrix();
  CHECK(testutil::max_abs_diff(R, horn_rotation(gt, est)) < 1e-9);

  const double best = alignment_cost(gt, est, R, a.transform.translation);
  std::normal_distribution<double> dr(0.0, 1e-3);
  std::normal_distribution<double> dt(0.0, 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d Rp =
        UnitQuaternion::from_axis_angle(Eigen::Vector3d(dr(rng), dr(rng), dr(rng)), std::abs(dr(rng))).matrix() * R;
    const Eigen::Vector3d tp = a.transform.translation + Eigen::Vector3d(dt(rng), dt(rng), dt(rng));
    CHECK(alignment_cost(gt, est, Rp, tp) >= best - 1e-9 * best);
  }
}

TEST_CASE("degenerate point sets fall back to translation") {
  const std::vector<Eigen::Vector3d> gt{{1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const std::vector<Eigen::Vector3d> est{{0, 1, 0}, {1, 1, 0}, {2, 1, 0}};
  const Alignment a = umeyama_align(gt, est);
  CHECK(a.degenerate);
  CHECK((a.transform.translation - Eigen::Vector3d(1, -1, 0)).norm() < 1e-12);
  CHECK(umeyama_align({{0, 0, 0}, {1, 1, 1}}, {{0, 0, 0}, {1, 1, 1}}).degenerate);
  CHECK(code_of([] { umeyama_align({}, {}); }) == Errc::InvalidArgument);
}

TEST_CASE("ATE of identical trajectories is zero") {
  const Trajectory t = spiral(500, 1'700'000'000'000'000'000, 50'000'000);
  const AteReport r = ate(t, t);
  CHECK(r.n_pairs == 500);
  CHECK(r.rmse_m < 1e-9);
  CHECK(r.max_m < 1e-9);
}

TEST_CASE("ATE is invariant to a rigid transform of the estimate") {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> noise(0.0, 0.03);
  const Trajectory gt = spiral(400, 0, 50'000'000);
  Trajectory est = gt;
  for (auto& e : est.entries) {
    e.pose.translation += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    e.stamp_ns += 3'000'000;
  }
  const AteReport base = ate(gt, est);
  for (int i = 0; i < 10; ++i) {
    const AteReport moved = ate(gt, transformed(est, testutil::random_transform(rng, 100.0)));
    CHECK(moved.rmse_m == doctest::Approx(base.rmse_m).epsilon(1e-8));
    CHECK(moved.n_pairs == base.n_pairs);
  }
  AteOptions raw;
  raw.align = false;
  CHECK(ate(gt, est, raw).rmse_m >= base.rmse_m);
}

TEST_CASE("residual statistics are consistent") {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    AteReport r;
    r.residuals.resize(1 + rng() % 50);
    for (auto& v : r.residuals) v = u(rng);
    fill_statistics(r);
    CHECK(r.rmse_m * r.rmse_m == doctest::Approx(r.mean_m * r.mean_m + r.std_m * r.std_m).epsilon(1e-12));
    CHECK(r.max_m >= r.median_m);
    CHECK(r.rmse_m >= r.mean_m);
  }
  AteReport even;
  even.residuals = {4.0, 1.0, 3.0, 2.0};
  fill_statistics(even);
  CHECK(even.median_m == 2.5);
  CHECK(even.mean_m == 2.5);
}

TEST_CASE("ATE preconditions") {
  const Trajectory t = spiral(10, 0, 100'000'000);
  Trajectory far = t;
  for (auto& e : far.entries) e.stamp_ns += 10'000'000'000;
  CHECK(code_of([&] { ate(t, far); }) == Errc::NoMatches);
  const Trajectory two = spiral(2, 0, 100'000'000);
  CHECK(code_of([&] { ate(two, two); }) == Errc::InsufficientData);
  AteOptions raw;
  raw.align = false;
  CHECK(ate(two, two, raw).rmse_m == 0.0);
}

TEST_CASE("CSV row layout") {
  const Trajectory t = spiral(20, 0, 100'000'000);
  const AteReport r = ate(t, t);
  const std::string header = ate_csv_header();
  const std::string row = ate_csv_row("run1", r);
  CHECK(header.back() == '\n');
  CHECK(row.rfind("run1,", 0) == 0);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}

}  // TEST_SUITE
