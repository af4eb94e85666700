#include "rig/clock_sync.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "rig/error.hpp"

namespace rig {

namespace {

constexpr double kMinSkew = 0.9;
constexpr double kMaxSkew = 1.1;
constexpr std::int64_t kMinSpanNs = 1'000'000;
constexpr std::int64_t kOneSecondNs = 1'000'000'000;

struct LineFit {
  long double slope = 1.0L;
  long double offset = 0.0L;  // target at source == 0
  long double rms = 0.0L;
};

// Centered on the first pair so that epoch-sized stamps keep full precision.
LineFit ols(const std::vector<CorrespondencePair>& pairs) {
  const auto [x0, y0] = pairs.front();
  const auto n = static_cast<long double>(pairs.size());
  long double mx = 0.0L;
  long double my = 0.0L;
  for (const auto& [x, y] : pairs) {
    mx += static_cast<long double>(x - x0);
    my += static_cast<long double>(y - y0);
  }
  mx /= n;
  my /= n;
  long double sxx = 0.0L;
  long double sxy = 0.0L;
  for (const auto& [x, y] : pairs) {
    const long double dx = static_cast<long double>(x - x0) - mx;
    const long double dy = static_cast<long double>(y - y0) - my;
    sxx += dx * dx;
    sxy += dx * dy;
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  const long double b = my - fit.slope * mx;  // dy at dx == 0
  long double ss = 0.0L;
  for (const auto& [x, y] : pairs) {
    const long double r = static_cast<long double>(y - y0) - (b + fit.slope * static_cast<long double>(x - x0));
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  fit.offset = static_cast<long double>(y0 - x0) + b - (fit.slope - 1.0L) * static_cast<long double>(x0);
  return fit;
}

}  // namespace

const char* to_string(ClockDomainKind k) {
  switch (k) {
    case ClockDomainKind::System: return "SYSTEM";
    case ClockDomainKind::Tsc: return "TSC";
    case ClockDomainKind::Ptp: return "PTP";
  }
  return "?";
}

ClockDomainKind parse_clock_domain(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "SYSTEM" || u == "ROS" || u == "TIME_FROM_ROS") return ClockDomainKind::System;
  if (u == "TSC" || u == "TIME_FROM_TSC") return ClockDomainKind::Tsc;
  if (u == "PTP" || u == "TIME_FROM_PTP") return ClockDomainKind::Ptp;
  throw Error(Errc::ParseError, "unknown clock domain '" + s + "'");
}

ClockModel fit_clock_model(const std::vector<CorrespondencePair>& pairs, const FitOptions& opts) {
  if (pairs.size() < 2) throw Error(Errc::InsufficientData, fmt::format("{} pairs, need at least 2", pairs.size()));
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].first <= pairs[i - 1].first) {
      throw Error(Errc::NonMonotonic, fmt::format("source stamp at pair {} is not strictly increasing", i));
    }
  }
  if (pairs.back().first - pairs.front().first < kMinSpanNs) {
    throw Error(Errc::DegenerateSpan, "source span is below 1 ms");
  }

  LineFit fit = ols(pairs);
  std::size_t rejected = 0;
  std::size_t used = pairs.size();
  if (opts.robust && fit.rms > 0.0L) {
    std::vector<CorrespondencePair> kept;
    kept.reserve(pairs.size());
    const long double limit = 3.0L * fit.rms;
    for (const auto& p : pairs) {
      const long double pred = fit.slope * static_cast<long double>(p.first) + fit.offset;
      if (std::abs(static_cast<long double>(p.second) - pred) <= limit) kept.push_back(p);
    }
    if (kept.size() >= 2 && kept.size() < pairs.size() && kept.back().first - kept.front().first >= kMinSpanNs) {
      rejected = pairs.size() - kept.size();
      used = kept.size();
      fit = ols(kept);
    }
  }

  const auto skew = static_cast<double>(fit.slope);
  if (!(skew > kMinSkew && skew < kMaxSkew)) {
    throw Error(Errc::SkewOutOfRange, fmt::format("fitted skew {:.9f} outside (0.9, 1.1)", skew));
  }
  ClockModel m;
  m.offset_ns = std::llround(fit.offset);
  m.skew = skew;
  m.source = opts.source;
  m.target = opts.target;
  m.rms_residual_ns = static_cast<double>(fit.rms);
  m.n_pairs = used;
  m.n_rejected = rejected;
  return m;
}

std::int64_t convert(const ClockModel& m, std::int64_t raw_ns) {
  // skew*raw + offset == raw + offset + (skew - 1)*raw; the small term is rounded alone.
  const long double drift = (static_cast<long double>(m.skew) - 1.0L) * static_cast<long double>(raw_ns);
  return raw_ns + m.offset_ns + std::llround(drift);
}

StampedEvent apply_readout_correction(const StampedEvent& e, const ReadoutDelaySpec& spec) {
  if (e.stream_id != spec.stream_id) {
    throw Error(Errc::StreamMismatch, "delay for '" + spec.stream_id + "' applied to '" + e.stream_id + "'");
  }
  if (spec.delay_ns < 0 || spec.delay_ns >= kOneSecondNs) {
    throw Error(Errc::BadSpec, fmt::format("readout delay {} ns outside [0, 1 s)", spec.delay_ns));
  }
  StampedEvent out = e;
  out.corrected_stamp_ns = e.corrected_stamp_ns.value_or(e.raw_stamp_ns) - spec.delay_ns;
  return out;
}

StampingPolicy::StampingPolicy(ClockDomainKind kind, double tsc_hz, std::optional<ClockModel> model)
    : kind_(kind), tsc_hz_(tsc_hz), model_(std::move(model)) {
  if (!(tsc_hz_ > 0.0)) throw Error(Errc::BadSpec, "TSC frequency must be positive");
}

std::int64_t StampingPolicy::tsc_to_ns(std::uint64_t ticks) const {
  return std::llround(static_cast<long double>(ticks) * 1e9L / static_cast<long double>(tsc_hz_));
}

StampedEvent StampingPolicy::stamp(const RawStampInputs& in) const {
  StampedEvent e;
  e.stream_id = in.stream_id;
  switch (kind_) {
    case ClockDomainKind::System:
      e.raw_stamp_ns = in.arrival_ns;
      e.corrected_stamp_ns = in.arrival_ns;
      break;
    case ClockDomainKind::Tsc:
      e.raw_stamp_ns = tsc_to_ns(in.tsc_ticks);
      e.corrected_stamp_ns = e.raw_stamp_ns;
      break;
    case ClockDomainKind::Ptp:
      if (!model_) throw Error(Errc::MissingModel, "PTP stamping needs a fitted TSC->PTP clock model");
      e.raw_stamp_ns = tsc_to_ns(in.tsc_ticks);
      e.corrected_stamp_ns = convert(*model_, e.raw_stamp_ns);
      break;
  }
  return e;
}

StampedEvent stamp(const StampingPolicy& policy, const RawStampInputs& in) { return policy.stamp(in); }

ClockSimulation simulate_clocks(const ClockSimSpec& spec) {
  if (spec.n < 2) throw Error(Errc::BadSpec, "n must be >= 2");
  if (!(spec.jitter_ns_sigma >= 0.0)) throw Error(Errc::BadSpec, "jitter must be >= 0");
  if (!(spec.true_rate_hz > 0.0)) throw Error(Errc::BadSpec, "rate must be positive");
  if (!(spec.skew > 0.0)) throw Error(Errc::BadSpec, "skew must be positive");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> jitter(0.0, spec.jitter_ns_sigma > 0.0 ? spec.jitter_ns_sigma : 1.0);

  ClockSimulation sim;
  sim.observations.reserve(spec.n);
  sim.truth.reserve(spec.n);
  const long double period = 1e9L / static_cast<long double>(spec.true_rate_hz);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::int64_t src = spec.start_ns + std::llround(static_cast<long double>(i) * period);
    const std::int64_t tgt = std::llround(static_cast<long double>(spec.skew) * static_cast<long double>(src) +
                                          static_cast<long double>(spec.offset_ns));
    const std::int64_t noise = spec.jitter_ns_sigma > 0.0 ? std::llround(jitter(rng)) : 0;
    sim.truth.emplace_back(src, tgt);
    sim.observations.emplace_back(src, tgt + noise);
  }
  return sim;
}

std::int64_t percentile_nearest_rank(std::vector<std::int64_t> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

SyncReport sync_quality(const std::vector<StampStream>& streams, std::int64_t window_ns) {
  if (streams.size() < 2) throw Error(Errc::InsufficientData, "sync_quality needs at least 2 streams");
  for (const auto& s : streams) {
    if (s.stamps_ns.empty()) throw Error(Errc::EmptyStream, "stream '" + s.stream_id + "' has no events");
    for (std::size_t i = 1; i < s.stamps_ns.size(); ++i) {
      if (s.stamps_ns[i] < s.stamps_ns[i - 1]) {
        throw Error(Errc::NonMonotonic, fmt::format("stream '{}' decreases at event {}", s.stream_id, i));
      }
    }
  }

  SyncReport report;
  report.window_ns = window_ns;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    for (std::size_t j = i + 1; j < streams.size(); ++j) {
      const bool i_is_ref = streams[i].stamps_ns.size() <= streams[j].stamps_ns.size();
      const auto& ref = i_is_ref ? streams[i] : streams[j];
      const auto& other = i_is_ref ? streams[j] : streams[i];
      const auto& o = other.stamps_ns;

      PairSyncStats st;
      st.reference = ref.stream_id;
      st.other = other.stream_id;
      std::vector<std::int64_t> offsets;
      offsets.reserve(ref.stamps_ns.size());
      for (const std::int64_t t : ref.stamps_ns) {
        const auto it = std::lower_bound(o.begin(), o.end(), t);
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        if (it != o.begin()) best = t - *std::prev(it);  // earlier event wins ties
        if (it != o.end() && *it - t < best) best = *it - t;
        if (best <= window_ns) {
          offsets.push_back(best);
        } else {
          ++st.n_unmatched;
        }
      }
      st.n_matched = offsets.size();
      if (!offsets.empty()) {
        st.max_offset_ns = *std::max_element(offsets.begin(), offsets.end());
        long double sum = 0.0L;
        for (const auto v : offsets) sum += static_cast<long double>(v);
        st.mean_offset_ns = std::llround(sum / static_cast<long double>(offsets.size()));
        st.p95_offset_ns = percentile_nearest_rank(std::move(offsets), 95.0);
      }
      if (report.pairs.empty() || st.max_offset_ns > report.worst_max_offset_ns) {
        report.worst_pair = report.pairs.size();
        report.worst_max_offset_ns = st.max_offset_ns;
      }
      report.pairs.push_back(std::move(st));
    }
  }
  report.exceeds_1ms = report.worst_max_offset_ns > 1'000'000;
  return report;
}

ordered_json to_json(const ClockModel& m) {
  ordered_json j;
  j["source"] = to_string(m.source);
  j["target"] = to_string(m.target);
  j["offset_ns"] = m.offset_ns;
  j["skew"] = m.skew;
  j["rms_residual_ns"] = m.rms_residual_ns;
  j["n_pairs"] = m.n_pairs;
  j["n_rejected"] = m.n_rejected;
  return j;
}

ClockModel clock_model_from_json(const nlohmann::json& j) {
  try {
    ClockModel m;
    m.offset_ns = j.at("offset_ns").get<std::int64_t>();
    m.skew = j.at("skew").get<double>();
    m.source = parse_clock_domain(j.value("source", std::string("TSC")));
    m.target = parse_clock_domain(j.value("target", std::string("PTP")));
    m.rms_residual_ns = j.value("rms_residual_ns", 0.0);
    m.n_pairs = j.value("n_pairs", std::size_t{0});
    m.n_rejected = j.value("n_rejected", std::size_t{0});
    if (!(m.skew > kMinSkew && m.skew < kMaxSkew)) {
      throw Error(Errc::SkewOutOfRange, fmt::format("skew {} outside (0.9, 1.1)", m.skew));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("clock model: ") + e.what());
  }
}

ordered_json to_json(const SyncReport& r) {
  ordered_json j;
  j["window_ns"] = r.window_ns;
  j["pairs"] = ordered_json::array();
  for (const auto& p : r.pairs) {
    ordered_json jp;
    jp["reference"] = p.reference;
    jp["other"] = p.other;
    jp["n_matched"] = p.n_matched;
    jp["n_unmatched"] = p.n_unmatched;
    jp["max_offset_ns"] = p.max_offset_ns;
    jp["p95_offset_ns"] = p.p95_offset_ns;
    jp["mean_offset_ns"] = p.mean_offset_ns;
    j["pairs"].push_back(std::move(jp));
  }
  ordered_json worst;
  if (!r.pairs.empty()) {
    worst["reference"] = r.pairs[r.worst_pair].reference;
    worst["other"] = r.pairs[r.worst_pair].other;
  }
  worst["max_offset_ns"] = r.worst_max_offset_ns;
  j["worst_pair"] = std::move(worst);
  j["exceeds_1ms"] = r.exceeds_1ms;
  return j;
}

std::vector<CorrespondencePair> read_correspondences_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<CorrespondencePair> out;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "source_ns,target_ns") {
        throw Error(Errc::ParseError, fmt::format("{}:{}: expected header 'source_ns,target_ns'", path, line_no));
      }
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t p1 = 0;
      std::size_t p2 = 0;
      const std::string a = line.substr(0, comma);
      const std::string b = line.substr(comma + 1);
      const long long s = std::stoll(a, &p1);
      const long long t = std::stoll(b, &p2);
      if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("trailing characters");
      out.emplace_back(s, t);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, fmt::format("{}:{}: expected two integers", path, line_no));
    }
  }
  if (!header) throw Error(Errc::ParseError, path + ": missing header");
  return out;
}

void write_correspondences_csv(const std::string& path, const std::vector<CorrespondencePair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << "source_ns,target_ns\n";
  for (const auto& [s, t] : pairs) out << s << ',' << t << '\n';
}

}  // namespace rig
