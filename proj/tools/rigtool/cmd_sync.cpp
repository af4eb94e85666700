#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cli.hpp"
#include "rig/clock_sync.hpp"
#include "rig/dataset.hpp"
#include "rig/error.hpp"

namespace rig::cli {

namespace {

struct FitArgs {
  std::string pairs;
  bool robust = false;
  std::string source = "TSC";
  std::string target = "PTP";
  std::string out;
};

struct ConvertArgs {
  std::string model;
  std::string stamps;
  std::vector<std::int64_t> values;
};

struct ReportArgs {
  std::vector<std::string> streams;
  std::string sequence;
  std::int64_t window_ns = 5'000'000;
};

struct SimArgs {
  std::int64_t offset_ns = 5'000'000;
  double skew = 1.0 + 1e-6;
  double jitter_ns = 10'000.0;
  std::size_t n = 1000;
  double rate_hz = 10.0;
  std::int64_t start_ns = 0;
  std::uint64_t seed = 1;
  std::string out;
};

// One integer stamp per line; '#' comments, blank lines and a `stamp_ns`
// header are skipped.
std::vector<std::int64_t> read_stamp_file(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || (lineno == 1 && line == "stamp_ns")) continue;
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      throw Error(Errc::ParseError, fmt::format("{}:{}: expected an integer nanosecond stamp", path, lineno));
    }
    out.push_back(v);
  }
  return out;
}

ClockModel load_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  // Accept a bare model or a `sync fit` JSON report.
  if (j.contains("metrics") && j["metrics"].contains("model")) return clock_model_from_json(j["metrics"]["model"]);
  return clock_model_from_json(j);
}

std::string model_text(const ClockModel& m) {
  return fmt::format(
      "source   {}\ntarget   {}\noffset   {} ns\nskew     {:.12f} ({:+.3f} ppm)\nrms      {:.1f} ns\npairs    {} "
      "({} rejected)\n",
      to_string(m.source), to_string(m.target), m.offset_ns, m.skew, (m.skew - 1.0) * 1e6, m.rms_residual_ns,
      m.n_pairs, m.n_rejected);
}

Result fit(Context& ctx, const FitArgs& a) {
  ctx.inputs.emplace_back(a.pairs);
  FitOptions opts;
  opts.robust = a.robust;
  opts.source = parse_clock_domain(a.source);
  opts.target = parse_clock_domain(a.target);
  const ClockModel m = fit_clock_model(read_correspondences_csv(a.pairs), opts);
  if (!a.out.empty()) write_file(a.out, dump_canonical(to_json(m), 12));
  Result r;
  r.float_decimals = 12;
  r.metrics["model"] = to_json(m);
  r.text = model_text(m);
  r.csv = "offset_ns,skew,rms_residual_ns,n_pairs,n_rejected\n" +
          fmt::format("{},{},{},{},{}\n", m.offset_ns, format_fixed(m.skew, 15), format_fixed(m.rms_residual_ns, 3),
                      m.n_pairs, m.n_rejected);
  return r;
}

Result convert_cmd(Context& ctx, const ConvertArgs& a) {
  ctx.inputs.emplace_back(a.model);
  const ClockModel m = load_model(a.model);
  std::vector<std::int64_t> raw = a.values;
  if (!a.stamps.empty()) {
    ctx.inputs.emplace_back(a.stamps);
    const auto more = read_stamp_file(a.stamps);
    raw.insert(raw.end(), more.begin(), more.end());
  }
  if (raw.empty()) throw Error(Errc::InvalidArgument, "no stamps given (use --stamp or --stamps)");
  Result r;
  r.metrics["source"] = to_string(m.source);
  r.metrics["target"] = to_string(m.target);
  r.metrics["stamps"] = ordered_json::array();
  r.csv = "raw_ns,converted_ns\n";
  for (const auto v : raw) {
    const std::int64_t c = convert(m, v);
    r.metrics["stamps"].push_back(ordered_json{{"raw_ns", v}, {"converted_ns", c}});
    r.csv += fmt::format("{},{}\n", v, c);
    r.text += fmt::format("{} -> {}\n", v, c);
  }
  return r;
}

Result report_cmd(Context& ctx, const ReportArgs& a) {
  std::vector<StampStream> streams;
  for (const auto& path : a.streams) {
    ctx.inputs.emplace_back(path);
    streams.push_back({std::filesystem::path(path).stem().string(), read_stamp_file(path)});
  }
  if (!a.sequence.empty()) {
    ctx.inputs.emplace_back(a.sequence);
    const SequenceManifest m = read_manifest(a.sequence);
    for (const auto& spec : m.streams) {
      if (spec.kind == StreamKind::Trajectory) continue;
      StampStream s{spec.stream_id, {}};
      for (const auto& rec : read_stream_index(a.sequence, spec.stream_id).records) s.stamps_ns.push_back(rec.stamp_ns);
      streams.push_back(std::move(s));
    }
  }
  const SyncReport rep = sync_quality(streams, a.window_ns);
  Result r;
  r.metrics = to_json(rep);
  r.csv = "reference,other,n_matched,n_unmatched,max_offset_ns,p95_offset_ns,mean_offset_ns\n";
  r.text = fmt::format("{:<18} {:<18} {:>8} {:>9} {:>12} {:>12} {:>12}\n", "reference", "other", "matched",
                       "unmatched", "max_ns", "p95_ns", "mean_ns");
  for (const auto& p : rep.pairs) {
    r.csv += fmt::format("{},{},{},{},{},{},{}\n", p.reference, p.other, p.n_matched, p.n_unmatched, p.max_offset_ns,
                         p.p95_offset_ns, p.mean_offset_ns);
    r.text += fmt::format("{:<18} {:<18} {:>8} {:>9} {:>12} {:>12} {:>12}\n", p.reference, p.other, p.n_matched,
                          p.n_unmatched, p.max_offset_ns, p.p95_offset_ns, p.mean_offset_ns);
  }
  if (!rep.pairs.empty()) {
    const auto& w = rep.pairs[rep.worst_pair];
    r.text += fmt::format("worst pair {} / {}: max offset {} ns{}\n", w.reference, w.other, rep.worst_max_offset_ns,
                          rep.exceeds_1ms ? " (exceeds 1 ms)" : "");
  }
  if (rep.exceeds_1ms) {
    r.findings.push_back({Severity::Warning, "offset_above_1ms", rep.pairs[rep.worst_pair].other, std::nullopt,
                          fmt::format("max matched offset {} ns exceeds 1 ms", rep.worst_max_offset_ns)});
  }
  return r;
}

Result simulate_cmd(const SimArgs& a) {
  ClockSimSpec spec;
  spec.offset_ns = a.offset_ns;
  spec.skew = a.skew;
  spec.jitter_ns_sigma = a.jitter_ns;
  spec.n = a.n;
  spec.true_rate_hz = a.rate_hz;
  spec.start_ns = a.start_ns;
  spec.seed = a.seed;
  const ClockSimulation sim = simulate_clocks(spec);
  if (!a.out.empty()) write_correspondences_csv(a.out, sim.observations);
  Result r;
  r.float_decimals = 12;
  r.metrics["n"] = sim.observations.size();
  r.metrics["offset_ns"] = a.offset_ns;
  r.metrics["skew"] = a.skew;
  r.metrics["jitter_ns_sigma"] = a.jitter_ns;
  r.metrics["seed"] = a.seed;
  r.csv = "source_ns,target_ns\n";
  for (const auto& [s, t] : sim.observations) r.csv += fmt::format("{},{}\n", s, t);
  r.text = fmt::format("simulated {} correspondences{}\n", sim.observations.size(),
                       a.out.empty() ? std::string() : " -> " + a.out);
  return r;
}

}  // namespace

void add_sync_commands(CLI::App& app, Context& ctx) {
  auto* sync = app.add_subcommand("sync", "Clock models and cross-sensor synchronization quality");
  sync->require_subcommand(1);

  auto fa = std::make_shared<FitArgs>();
  auto* fit_cmd = sync->add_subcommand("fit", "Fit offset and skew between two clocks from correspondences");
  fit_cmd->add_option("--pairs", fa->pairs, "CSV of source_ns,target_ns correspondences")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_flag("--robust", fa->robust, "Refit once after discarding pairs beyond 3x the RMS residual");
  fit_cmd->add_option("--source", fa->source, "Source clock domain (SYSTEM, TSC, PTP)")->capture_default_str();
  fit_cmd->add_option("--target", fa->target, "Target clock domain (SYSTEM, TSC, PTP)")->capture_default_str();
  fit_cmd->add_option("--out", fa->out, "Also write the model JSON to this file");
  on_run(fit_cmd, ctx, "sync fit", [&ctx, fa] { return fit(ctx, *fa); });

  auto ca = std::make_shared<ConvertArgs>();
  auto* conv = sync->add_subcommand("convert", "Map source-clock stamps into the target clock");
  conv->add_option("--model", ca->model, "Clock model JSON written by 'sync fit'")
      ->required()
      ->check(CLI::ExistingFile);
  conv->add_option("--stamps", ca->stamps, "File with one source stamp (ns) per line")->check(CLI::ExistingFile);
  conv->add_option("--stamp", ca->values, "Source stamp in ns (repeatable)");
  on_run(conv, ctx, "sync convert", [&ctx, ca] { return convert_cmd(ctx, *ca); });

  auto ra = std::make_shared<ReportArgs>();
  auto* rep = sync->add_subcommand("report", "Pairwise nearest-neighbour offsets between stamp streams");
  rep->add_option("--streams", ra->streams, "Stamp files, one ns stamp per line; the file stem names the stream")
      ->check(CLI::ExistingFile);
  rep->add_option("--sequence", ra->sequence, "Sequence directory whose non-trajectory streams are compared")
      ->check(CLI::ExistingDirectory);
  rep->add_option("--window-ns", ra->window_ns, "Matching window; events without a neighbour inside it are unmatched")
      ->capture_default_str();
  on_run(rep, ctx, "sync report", [&ctx, ra] { return report_cmd(ctx, *ra); });

  auto sa = std::make_shared<SimArgs>();
  auto* sim = sync->add_subcommand("simulate", "Generate synthetic clock correspondences");
  sim->add_option("--offset-ns", sa->offset_ns, "True offset in ns")->capture_default_str();
  sim->add_option("--skew", sa->skew, "True skew (target rate / source rate)")->capture_default_str();
  sim->add_option("--jitter-ns", sa->jitter_ns, "Gaussian jitter sigma on target stamps, ns")->capture_default_str();
  sim->add_option("--n", sa->n, "Number of correspondences")->capture_default_str();
  sim->add_option("--rate", sa->rate_hz, "Correspondence rate in Hz of the source clock")->capture_default_str();
  sim->add_option("--start-ns", sa->start_ns, "First source stamp")->capture_default_str();
  sim->add_option("--seed", sa->seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sa->out, "Write the correspondences CSV to this file");
  on_run(sim, ctx, "sync simulate", [sa] { return simulate_cmd(*sa); });
}

}  // namespace rig::cli
