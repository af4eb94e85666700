#include <sstream>

#include <fmt/format.h>

#include "cli.hpp"
#include "rig/error.hpp"
#include "rig/frame_graph.hpp"

namespace rig::cli {

namespace {

struct AssembleArgs {
  std::vector<std::string> edges;
  std::string root;
  std::string out;
};

struct DiffArgs {
  std::string a;
  std::string b;
  std::vector<std::string> pairs;
};

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
      throw Error(Errc::ParseError, "pair '" + s + "' must look like from:to");
    }
    out.emplace_back(s.substr(0, colon), s.substr(colon + 1));
  }
  return out;
}

Result assemble(Context& ctx, const AssembleArgs& a) {
  FrameGraph g(a.root);
  for (const auto& path : a.edges) {
    ctx.inputs.emplace_back(path);
    const FrameGraph part = load_calibration_any(path);
    for (const auto& e : part.edges()) g.add_edge(e);
  }
  Result r;
  r.findings = g.validate().findings;
  r.metrics["root"] = g.root();
  r.metrics["frames"] = g.frames().size();
  r.metrics["edges"] = g.edge_count();
  if (!r.findings.empty()) {
    r.exit_code = kDomainError;
    r.metrics["written"] = false;
    r.text = fmt::format("calibration not written: {} finding(s)\n", r.findings.size());
    return r;
  }
  export_calibration(g, a.out);
  r.metrics["written"] = true;
  r.metrics["out"] = a.out;
  r.text = fmt::format("wrote {} ({} frames, {} edges, root {})\n", a.out, g.frames().size(), g.edge_count(), g.root());
  return r;
}

Result diff(Context& ctx, const DiffArgs& a) {
  ctx.inputs.emplace_back(a.a);
  ctx.inputs.emplace_back(a.b);
  const FrameGraph ga = load_calibration_any(a.a);
  const FrameGraph gb = load_calibration_any(a.b);
  const auto rows = diff_graphs(ga, gb, parse_pairs(a.pairs));

  Result r;
  r.metrics["pairs"] = ordered_json::array();
  r.csv = "from,to,position_diff_m,angular_diff_deg\n";
  r.text = fmt::format("{:<20} {:<20} {:>14} {:>16}\n", "from", "to", "position_m", "angle_deg");
  for (const auto& d : rows) {
    ordered_json j;
    j["from"] = d.from;
    j["to"] = d.to;
    j["position_diff_m"] = d.position_diff_m;
    j["angular_diff_deg"] = d.angular_diff_deg;
    r.metrics["pairs"].push_back(std::move(j));
    r.csv += fmt::format("{},{},{},{}\n", d.from, d.to, format_fixed(d.position_diff_m, 6),
                         format_fixed(d.angular_diff_deg, 6));
    r.text += fmt::format("{:<20} {:<20} {:>14} {:>16}\n", d.from, d.to, format_fixed(d.position_diff_m, 3),
                          format_fixed(d.angular_diff_deg, 2));
  }
  return r;
}

}  // namespace

void add_tf_commands(CLI::App& app, Context& ctx) {
  auto* tf = app.add_subcommand("tf", "Calibration tree assembly and comparison");
  tf->require_subcommand(1);

  auto aa = std::make_shared<AssembleArgs>();
  auto* asm_cmd = tf->add_subcommand("assemble", "Merge edge files into one validated calibration file");
  asm_cmd->add_option("--edges", aa->edges, "Calibration or edge files (text or .json) to merge")
      ->required()
      ->check(CLI::ExistingFile);
  asm_cmd->add_option("--root", aa->root, "Root frame of the assembled tree")->required();
  asm_cmd->add_option("--out", aa->out, "Output calibration file")->required();
  on_run(asm_cmd, ctx, "tf assemble", [&ctx, aa] { return assemble(ctx, *aa); });

  auto da = std::make_shared<DiffArgs>();
  auto* diff_cmd = tf->add_subcommand("diff", "Compare frame-to-frame extrinsics of two calibration files");
  diff_cmd->add_option("--a", da->a, "Reference calibration file")->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("--b", da->b, "Calibration file compared against the reference")
      ->required()
      ->check(CLI::ExistingFile);
  diff_cmd->add_option("--pairs", da->pairs, "Frame pairs as from:to (comma or space separated)")
      ->required()
      ->delimiter(',');
  on_run(diff_cmd, ctx, "tf diff", [&ctx, da] { return diff(ctx, *da); });
}

}  // namespace rig::cli
