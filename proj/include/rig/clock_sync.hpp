#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rig/report.hpp"

namespace rig {

/// Timestamping modes of the acquisition driver.
enum class ClockDomainKind {
  System,  ///< TIME_FROM_ROS: host clock at frame arrival
  Tsc,     ///< TIME_FROM_TSC: hardware timestamp counter
  Ptp,     ///< TIME_FROM_PTP: TSC converted into the PTP-disciplined domain
};

const char* to_string(ClockDomainKind k);
/// Accepts SYSTEM/TSC/PTP (any case) and the driver names TIME_FROM_ROS/TSC/PTP.
ClockDomainKind parse_clock_domain(const std::string& s);

using CorrespondencePair = std::pair<std::int64_t, std::int64_t>;  ///< (source_ns, target_ns)

/**
 * Affine map target = skew * source + offset, integer nanoseconds in and out.
 *
 * skew must lie in (0.9, 1.1). Conversion rounds to the nearest nanosecond,
 * so it is non-decreasing everywhere and strictly increasing for source
 * stamps at least 2 ns apart.
 */
struct ClockModel {
  std::int64_t offset_ns = 0;
  double skew = 1.0;
  ClockDomainKind source = ClockDomainKind::Tsc;
  ClockDomainKind target = ClockDomainKind::Ptp;
  double rms_residual_ns = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_rejected = 0;  ///< pairs discarded by the robust refit
};

struct FitOptions {
  /// Discard residuals above 3x RMS and refit once.
  bool robust = false;
  ClockDomainKind source = ClockDomainKind::Tsc;
  ClockDomainKind target = ClockDomainKind::Ptp;
};

/// Ordinary least squares on (source, target) pairs. Throws InsufficientData
/// (< 2 pairs), NonMonotonic (source not strictly increasing), DegenerateSpan
/// (source span < 1 ms) or SkewOutOfRange.
ClockModel fit_clock_model(const std::vector<CorrespondencePair>& pairs, const FitOptions& opts = {});

std::int64_t convert(const ClockModel& m, std::int64_t raw_ns);

struct StampedEvent {
  std::int64_t raw_stamp_ns = 0;
  std::optional<std::int64_t> corrected_stamp_ns;
  std::string stream_id;
};

struct ReadoutDelaySpec {
  std::string stream_id;
  std::int64_t delay_ns = 0;  ///< in [0, 1 s)
};

/// corrected = (corrected or raw) - delay. Throws StreamMismatch or BadSpec.
StampedEvent apply_readout_correction(const StampedEvent& e, const ReadoutDelaySpec& spec);

/// What the driver sees when a frame arrives.
struct RawStampInputs {
  std::string stream_id;
  std::int64_t arrival_ns = 0;  ///< system clock at arrival
  std::uint64_t tsc_ticks = 0;  ///< hardware counter value
};

/// Read-only after construction; safe to share between stream handlers.
class StampingPolicy {
 public:
  explicit StampingPolicy(ClockDomainKind kind, double tsc_hz = 31.25e6,
                          std::optional<ClockModel> model = std::nullopt);

  ClockDomainKind kind() const { return kind_; }
  /// Throws MissingModel for PTP without a model.
  StampedEvent stamp(const RawStampInputs& in) const;

  std::int64_t tsc_to_ns(std::uint64_t ticks) const;

 private:
  ClockDomainKind kind_;
  double tsc_hz_;
  std::optional<ClockModel> model_;
};

StampedEvent stamp(const StampingPolicy& policy, const RawStampInputs& in);

struct ClockSimSpec {
  double true_rate_hz = 10.0;  ///< correspondence sampling rate in the source clock
  double skew = 1.0;
  std::int64_t offset_ns = 0;
  double jitter_ns_sigma = 0.0;
  std::size_t n = 2;
  std::int64_t start_ns = 0;
  std::uint64_t seed = 1;
};

struct ClockSimulation {
  std::vector<CorrespondencePair> observations;  ///< target with jitter
  std::vector<CorrespondencePair> truth;         ///< noise-free target
};

/// Deterministic for a given spec (seed included). Throws BadSpec.
ClockSimulation simulate_clocks(const ClockSimSpec& spec);

struct StampStream {
  std::string stream_id;
  std::vector<std::int64_t> stamps_ns;
};

struct PairSyncStats {
  std::string reference;  ///< the sparser stream; offsets are measured from its events
  std::string other;
  std::size_t n_matched = 0;
  std::size_t n_unmatched = 0;  ///< reference events with no neighbour within the window
  std::int64_t max_offset_ns = 0;
  std::int64_t p95_offset_ns = 0;
  std::int64_t mean_offset_ns = 0;  ///< rounded to the nanosecond
};

struct SyncReport {
  std::int64_t window_ns = 0;
  std::vector<PairSyncStats> pairs;
  std::size_t worst_pair = 0;  ///< index into pairs by max_offset_ns
  std::int64_t worst_max_offset_ns = 0;
  bool exceeds_1ms = false;
};

/// Per stream pair: nearest-event offsets from each event of the sparser
/// stream to the other stream (ties toward the earlier event), ignoring
/// offsets beyond `window_ns`. Throws EmptyStream, InsufficientData (< 2
/// streams) or NonMonotonic.
SyncReport sync_quality(const std::vector<StampStream>& streams, std::int64_t window_ns);

/// Nearest-rank percentile (p in (0, 100]) of an unsorted sample.
std::int64_t percentile_nearest_rank(std::vector<std::int64_t> values, double p);

ordered_json to_json(const ClockModel& m);
ClockModel clock_model_from_json(const nlohmann::json& j);
ordered_json to_json(const SyncReport& r);

/// CSV with header `source_ns,target_ns`.
std::vector<CorrespondencePair> read_correspondences_csv(const std::string& path);
void write_correspondences_csv(const std::string& path, const std::vector<CorrespondencePair>& pairs);

}  // namespace rig
