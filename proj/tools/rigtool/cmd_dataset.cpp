#include <fmt/format.h>

#include "cli.hpp"
#include "rig/dataset.hpp"
#include "rig/error.hpp"

namespace rig::cli {

namespace {

struct DatasetArgs {
  std::string dir;
  ValidationPolicy policy;
};

Result validate(Context& ctx, const DatasetArgs& a) {
  ctx.inputs.emplace_back(a.dir);
  const ValidationReport rep = validate_sequence(a.dir, a.policy);
  Result r;
  r.findings = rep.findings;
  r.metrics["ok"] = rep.ok();
  r.metrics["errors"] = rep.count(Severity::Error);
  r.metrics["warnings"] = rep.count(Severity::Warning);
  r.text = to_text(rep);
  r.csv = "severity,code,stream,index,message\n";
  for (const auto& f : rep.findings) {
    std::string msg = f.message;
    for (auto& c : msg) {
      if (c == ',' || c == '\n') c = ';';
    }
    r.csv += fmt::format("{},{},{},{},{}\n", to_string(f.severity), f.code, f.subject,
                         f.index ? std::to_string(*f.index) : std::string(), msg);
  }
  if (!rep.ok()) r.exit_code = kDomainError;
  return r;
}

Result stats(Context& ctx, const DatasetArgs& a) {
  ctx.inputs.emplace_back(a.dir);
  const SequenceStats s = sequence_stats(a.dir, a.policy);
  Result r;
  r.metrics = to_json(s);
  r.text = to_text(s);
  r.csv = "stream,count,measured_rate_hz,gap_count,max_gap_s,bytes\n";
  for (const auto& st : s.streams) {
    r.csv += fmt::format("{},{},{},{},{},{}\n", st.stream_id, st.count, format_fixed(st.measured_rate_hz, 6),
                         st.gap_count, format_fixed(st.max_gap_s, 6), st.bytes);
  }
  return r;
}

void add_policy(CLI::App* cmd, DatasetArgs& a) {
  cmd->add_option("--dir", a.dir, "Sequence directory (contains manifest.json)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--rate-tol", a.policy.rate_tol, "Relative rate deviation tolerated before a warning")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--gap-factor", a.policy.gap_factor, "Intervals longer than this many nominal periods are gaps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--overlap", a.policy.overlap, "Fraction of the sequence each stream must span")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

}  // namespace

void add_dataset_commands(CLI::App& app, Context& ctx) {
  auto* ds = app.add_subcommand("dataset", "Sequence container checks and statistics");
  ds->require_subcommand(1);

  auto va = std::make_shared<DatasetArgs>();
  auto* val = ds->add_subcommand("validate", "Check stamps, payloads, rates, gaps and coverage of a sequence");
  add_policy(val, *va);
  on_run(val, ctx, "dataset validate", [&ctx, va] { return validate(ctx, *va); });

  auto sa = std::make_shared<DatasetArgs>();
  auto* st = ds->add_subcommand("stats", "Duration, size, per-stream rates and trajectory length");
  add_policy(st, *sa);
  on_run(st, ctx, "dataset stats", [&ctx, sa] { return stats(ctx, *sa); });
}

}  // namespace rig::cli
