#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "rig/clock_sync.hpp"
#include "rig/error.hpp"
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

long double sse(const std::vector<CorrespondencePair>& pairs, long double offset, long double skew) {
  long double s = 0.0L;
  for (const auto& [x, y] : pairs) {
    const long double r = static_cast<long double>(y) - (skew * static_cast<long double>(x) + offset);
    s += r * r;
  }
  return s;
}

// Nearest neighbour by exhaustive scan; earlier event wins exact ties.
std::int64_t nearest_offset(std::int64_t t, const std::vector<std::int64_t>& other) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto o : other) best = std::min(best, o > t ? o - t : t - o);
  return best;
}

ClockSimSpec reference_spec(double jitter) {
  ClockSimSpec s;
  s.offset_ns = 5'000'000;
  s.skew = 1.0 + 1e-6;
  s.jitter_ns_sigma = jitter;
  s.n = 1000;
  s.true_rate_hz = 10.0;
  s.seed = 42;
  return s;
}

}  // namespace

TEST_SUITE("clock_sync") {

TEST_CASE("clock domain names") {
  CHECK(parse_clock_domain("ptp") == ClockDomainKind::Ptp);
  CHECK(parse_clock_domain("TIME_FROM_TSC") == ClockDomainKind::Tsc);
  CHECK(parse_clock_domain("TIME_FROM_ROS") == ClockDomainKind::System);
  CHECK(std::string(to_string(ClockDomainKind::Tsc)) == "TSC");
  CHECK(code_of([] { parse_clock_domain("gps"); }) == Errc::ParseError);
}

TEST_CASE("noise-free correspondences are recovered exactly") {
  const auto sim = simulate_clocks(reference_spec(0.0));
  CHECK(sim.observations == sim.truth);
  const ClockModel m = fit_clock_model(sim.observations);
  CHECK(std::abs(m.offset_ns - 5'000'000) < 1);
  CHECK(std::abs(m.skew - (1.0 + 1e-6)) < 1e-12);
  CHECK(m.n_pairs == 1000);
}

TEST_CASE("jittered correspondences stay within the recovery tolerances") {
  const auto sim = simulate_clocks(reference_spec(10'000.0));
  const ClockModel m = fit_clock_model(sim.observations);
  CHECK(std::abs(m.offset_ns - 5'000'000) <= 3'000);
  CHECK(std::abs(m.skew - (1.0 + 1e-6)) <= 1e-7);
  CHECK(m.rms_residual_ns == doctest::Approx(10'000.0).epsilon(0.1));
}

TEST_CASE("the fit is the least-squares optimum") {
  const auto sim = simulate_clocks(reference_spec(10'000.0));
  const ClockModel m = fit_clock_model(sim.observations);
  // Integer offset rounding costs at most 0.5 ns per pair.
  const long double best = sse(sim.observations, m.offset_ns, m.skew);
  const long double slack = 1e-6L * best;
  for (const long double d_off : {-50.0L, -5.0L, 5.0L, 50.0L}) {
    CHECK(sse(sim.observations, m.offset_ns + d_off, m.skew) + slack >= best);
  }
  for (const long double d_skew : {-1e-9L, -1e-10L, 1e-10L, 1e-9L}) {
    CHECK(sse(sim.observations, m.offset_ns, m.skew + d_skew) + slack >= best);
  }
}

TEST_CASE("simulator") {
  const auto spec = reference_spec(10'000.0);
  const auto a = simulate_clocks(spec);
  const auto b = simulate_clocks(spec);
  CHECK(a.observations == b.observations);
  auto other = spec;
  other.seed = 43;
  CHECK(simulate_clocks(other).observations != a.observations);

  // Jitter is the difference to truth; its sample std is within 10% of sigma.
  long double s = 0.0L, ss = 0.0L;
  for (std::size_t i = 0; i < a.truth.size(); ++i) {
    const long double d = a.observations[i].second - a.truth[i].second;
    s += d;
    ss += d * d;
  }
  const long double n = a.truth.size();
  const double sd = std::sqrt(static_cast<double>(ss / n - (s / n) * (s / n)));
  CHECK(sd == doctest::Approx(10'000.0).epsilon(0.10));

  // Truth is skew * source + offset, independent of the fitter.
  CHECK(a.truth[0].first == 0);
  CHECK(a.truth[10].first == 1'000'000'000);
  CHECK(a.truth[10].second == 1'000'000'000 + 1'000 + 5'000'000);

  auto bad = spec;
  bad.n = 1;
  CHECK(code_of([&] { simulate_clocks(bad); }) == Errc::BadSpec);
}

TEST_CASE("fit preconditions") {
  CHECK(code_of([] { fit_clock_model({{0, 0}}); }) == Errc::InsufficientData);
  CHECK(code_of([] { fit_clock_model({{0, 0}, {2'000'000, 2'000'000}, {1'000'000, 1'000'000}}); }) ==
        Errc::NonMonotonic);
  CHECK(code_of([] { fit_clock_model({{0, 0}, {999'999, 999'999}}); }) == Errc::DegenerateSpan);
  CHECK(code_of([] { fit_clock_model({{0, 0}, {1'000'000'000, 2'000'000'000}}); }) == Errc::SkewOutOfRange);
}

TEST_CASE("robust refit discards outliers") {
  auto spec = reference_spec(1'000.0);
  auto obs = simulate_clocks(spec).observations;
  for (std::size_t i = 50; i < obs.size(); i += 100) obs[i].second += 2'000'000;
  const ClockModel plain = fit_clock_model(obs);
  FitOptions o;
  o.robust = true;
  const ClockModel robust = fit_clock_model(obs, o);
  CHECK(robust.n_rejected == 10);
  CHECK(robust.n_pairs == 990);
  CHECK(std::abs(robust.offset_ns - 5'000'000) < std::abs(plain.offset_ns - 5'000'000));
  CHECK(std::abs(robust.offset_ns - 5'000'000) <= 300);
}

TEST_CASE("convert") {
  ClockModel m;
  m.offset_ns = 1234;
  m.skew = 1.0;
  CHECK(convert(m, 0) == 1234);
  CHECK(convert(m, 1'700'000'000'000'000'000) == 1'700'000'000'000'001'234);
  m.skew = 1.0 + 1e-6;
  CHECK(convert(m, 1'000'000'000) == 1'000'000'000 + 1'000 + 1234);

  // Non-decreasing for every input order; strictly increasing once stamps
  // are 2 ns or more apart.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> u(0, 4'000'000'000'000'000);
  std::vector<std::int64_t> raw(5000);
  for (auto& v : raw) v = u(rng);
  std::sort(raw.begin(), raw.end());
  for (std::size_t i = 1; i < raw.size(); ++i) {
    CHECK(convert(m, raw[i]) >= convert(m, raw[i - 1]));
    if (raw[i] - raw[i - 1] >= 2) CHECK(convert(m, raw[i]) > convert(m, raw[i - 1]));
  }
}

TEST_CASE("readout correction") {
  StampedEvent e{1'000'000, std::nullopt, "cam_front_left"};
  const auto once = apply_readout_correction(e, {"cam_front_left", 15'000});
  CHECK(once.raw_stamp_ns == 1'000'000);
  CHECK(*once.corrected_stamp_ns == 985'000);
  const auto twice = apply_readout_correction(once, {"cam_front_left", 5'000});
  CHECK(*twice.corrected_stamp_ns == 980'000);
  CHECK(code_of([&] { apply_readout_correction(e, {"os_sensor", 10}); }) == Errc::StreamMismatch);
  CHECK(code_of([&] { apply_readout_correction(e, {"cam_front_left", -1}); }) == Errc::BadSpec);
  CHECK(code_of([&] { apply_readout_correction(e, {"cam_front_left", 1'000'000'000}); }) == Errc::BadSpec);
}

TEST_CASE("stamping policies") {
  const RawStampInputs in{"cam", 777, 31'250'000};
  const StampingPolicy sys(ClockDomainKind::System);
  CHECK(sys.stamp(in).raw_stamp_ns == 777);
  const StampingPolicy tsc(ClockDomainKind::Tsc);
  CHECK(tsc.stamp(in).raw_stamp_ns == 1'000'000'000);
  CHECK(tsc.tsc_to_ns(1) == 32);
  CHECK(code_of([&] { StampingPolicy(ClockDomainKind::Ptp).stamp(in); }) == Errc::MissingModel);
  ClockModel m;
  m.offset_ns = 500;
  m.skew = 1.0;
  const auto ptp = stamp(StampingPolicy(ClockDomainKind::Ptp, 31.25e6, m), in);
  CHECK(ptp.raw_stamp_ns == 1'000'000'000);
  CHECK(*ptp.corrected_stamp_ns == 1'000'000'500);
  CHECK(ptp.stream_id == "cam");
}

TEST_CASE("sync quality matches a brute-force nearest-neighbour scan") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<StampStream> streams;
    for (int s = 0; s < 3; ++s) {
      std::uniform_int_distribution<std::int64_t> u(0, 50'000'000);
      StampStream st{"s" + std::to_string(s), {}};
      const std::size_t n = 5 + rng() % 40;
      for (std::size_t i = 0; i < n; ++i) st.stamps_ns.push_back(u(rng));
      std::sort(st.stamps_ns.begin(), st.stamps_ns.end());
      streams.push_back(std::move(st));
    }
    const std::int64_t window = 2'000'000;
    const SyncReport rep = sync_quality(streams, window);
    REQUIRE(rep.pairs.size() == 3);
    std::size_t k = 0;
    std::int64_t worst = -1;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j, ++k) {
        const auto& ref = streams[i].stamps_ns.size() <= streams[j].stamps_ns.size() ? streams[i] : streams[j];
        const auto& oth = &ref == &streams[i] ? streams[j] : streams[i];
        std::vector<std::int64_t> offs;
        std::size_t unmatched = 0;
        for (const auto t : ref.stamps_ns) {
          const auto d = nearest_offset(t, oth.stamps_ns);
          if (d <= window) {
            offs.push_back(d);
          } else {
            ++unmatched;
          }
        }
        const auto& p = rep.pairs[k];
        CHECK(p.reference == ref.stream_id);
        CHECK(p.n_matched == offs.size());
        CHECK(p.n_unmatched == unmatched);
        if (!offs.empty()) {
          CHECK(p.max_offset_ns == *std::max_element(offs.begin(), offs.end()));
          std::sort(offs.begin(), offs.end());
          const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(offs.size())));
          CHECK(p.p95_offset_ns == offs[rank - 1]);
        }
        worst = std::max(worst, p.max_offset_ns);
      }
    }
    CHECK(rep.worst_max_offset_ns == worst);
    CHECK(rep.exceeds_1ms == (worst > 1'000'000));
  }
}

TEST_CASE("sync quality preconditions") {
  CHECK(code_of([] { sync_quality({{"a", {1, 2}}}, 10); }) == Errc::InsufficientData);
  CHECK(code_of([] { sync_quality({{"a", {1, 2}}, {"b", {}}}, 10); }) == Errc::EmptyStream);
  CHECK(code_of([] { sync_quality({{"a", {1, 2}}, {"b", {3, 1}}}, 10); }) == Errc::NonMonotonic);
}

TEST_CASE("nearest-rank percentile") {
  std::vector<std::int64_t> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = 100 - i;
  CHECK(percentile_nearest_rank(v, 95.0) == 95);
  CHECK(percentile_nearest_rank(v, 100.0) == 100);
  CHECK(percentile_nearest_rank({7}, 95.0) == 7);
}

TEST_CASE("model JSON and correspondence CSV round trip") {
  const auto sim = simulate_clocks(reference_spec(10'000.0));
  const ClockModel m = fit_clock_model(sim.observations);
  const ClockModel back = clock_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.offset_ns == m.offset_ns);
  CHECK(back.skew == m.skew);
  CHECK(back.source == m.source);
  CHECK(code_of([] { clock_model_from_json(nlohmann::json::parse(R"({"skew":1.0})")); }) == Errc::ParseError);

  testutil::TempDir tmp("clock");
  write_correspondences_csv((tmp / "c.csv").string(), sim.observations);
  CHECK(read_correspondences_csv((tmp / "c.csv").string()) == sim.observations);
}

}  // TEST_SUITE
