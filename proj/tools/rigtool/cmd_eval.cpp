#include <fmt/format.h>

#include "cli.hpp"
#include "rig/error.hpp"
#include "rig/trajectory.hpp"

namespace rig::cli {

namespace {

struct AteArgs {
  std::string gt;
  std::string est;
  std::int64_t max_dt_ns = kDefaultMaxDtNs;
  bool no_align = false;
  bool scale = false;
  std::string label;
  std::string residuals_out;
  std::string traces_out;
};

Result run_ate(Context& ctx, const AteArgs& a) {
  ctx.inputs.emplace_back(a.gt);
  ctx.inputs.emplace_back(a.est);
  if (a.no_align && a.scale) throw Error(Errc::InvalidArgument, "--scale needs alignment; drop --no-align");
  const Trajectory gt = load_trajectory(a.gt);
  const Trajectory est = load_trajectory(a.est);
  AteOptions opts;
  opts.max_dt_ns = a.max_dt_ns;
  opts.align = !a.no_align;
  opts.with_scale = a.scale;
  const AteReport rep = ate(gt, est, opts);
  const std::string label = a.label.empty() ? std::filesystem::path(a.est).stem().string() : a.label;

  Result r;
  r.metrics = to_json(rep);
  r.metrics["label"] = label;
  r.csv = ate_csv_header() + ate_csv_row(label, rep);
  r.text = fmt::format(
      "{}: rmse {} m, mean {} m, median {} m, std {} m, max {} m over {} pairs{}\n", label, format_fixed(rep.rmse_m, 6),
      format_fixed(rep.mean_m, 6), format_fixed(rep.median_m, 6), format_fixed(rep.std_m, 6),
      format_fixed(rep.max_m, 6), rep.n_pairs, rep.alignment.degenerate ? " (translation-only alignment)" : "");
  if (rep.alignment.degenerate && opts.align) {
    r.findings.push_back({Severity::Warning, "degenerate_alignment", label, std::nullopt,
                          "matched positions are collinear; rotation was not estimated"});
  }

  if (!a.residuals_out.empty()) {
    std::string csv = "index,residual_m\n";
    for (std::size_t i = 0; i < rep.residuals.size(); ++i) csv += fmt::format("{},{:.9f}\n", i, rep.residuals[i]);
    write_file(a.residuals_out, csv);
  }
  if (!a.traces_out.empty()) {
    // xy traces of ground truth and the aligned estimate for plotting.
    std::string csv = "trajectory,t_s,x,y\n";
    for (const auto& e : gt.entries) {
      csv += fmt::format("gt,{},{:.6f},{:.6f}\n", format_ns_as_seconds(e.stamp_ns), e.pose.translation.x(),
                         e.pose.translation.y());
    }
    const Transform& T = rep.alignment.transform;
    for (const auto& e : est.entries) {
      const Eigen::Vector3d p = T.rotation.matrix() * (rep.alignment.scale * e.pose.translation) + T.translation;
      csv += fmt::format("{},{},{:.6f},{:.6f}\n", label, format_ns_as_seconds(e.stamp_ns), p.x(), p.y());
    }
    write_file(a.traces_out, csv);
  }
  return r;
}

}  // namespace

void add_eval_commands(CLI::App& app, Context& ctx) {
  auto* eval = app.add_subcommand("eval", "Trajectory evaluation");
  eval->require_subcommand(1);

  auto aa = std::make_shared<AteArgs>();
  auto* cmd = eval->add_subcommand("ate", "Absolute trajectory error after timestamp association and alignment");
  cmd->add_option("--gt", aa->gt, "Ground-truth trajectory (t x y z qx qy qz qw)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--est", aa->est, "Estimated trajectory (t x y z qx qy qz qw)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--max-dt-ns", aa->max_dt_ns, "Largest stamp difference accepted when associating poses")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--no-align", aa->no_align, "Compare raw positions without rigid alignment");
  cmd->add_flag("--scale", aa->scale, "Also estimate a similarity scale during alignment");
  cmd->add_option("--label", aa->label, "Name of the estimate in reports (default: file stem)");
  cmd->add_option("--residuals-out", aa->residuals_out, "Write per-pair residuals as CSV");
  cmd->add_option("--traces-out", aa->traces_out, "Write xy traces of ground truth and aligned estimate as CSV");
  on_run(cmd, ctx, "eval ate", [&ctx, aa] { return run_ate(ctx, *aa); });
}

}  // namespace rig::cli
