#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <fmt/format.h>

#include "rig/error.hpp"

namespace fs = std::filesystem;

namespace rig::cli {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& contents) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out << contents;
  if (!out) throw Error(Errc::IoError, "write failed for " + p.string());
}

namespace {

std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& p : inputs) {
    if (!fs::is_directory(p)) {
      files.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    if (fs::is_regular_file(p / "manifest.json")) found.push_back(p / "manifest.json");
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_directory() && fs::is_regular_file(e.path() / "index.csv")) found.push_back(e.path() / "index.csv");
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  return files;
}

}  // namespace

std::string inputs_digest(const std::vector<fs::path>& inputs) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!md || EVP_DigestInit_ex(md.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  for (const auto& f : expand_inputs(inputs)) {
    const std::string data = read_file(f);
    // Length prefix keeps ("ab","c") and ("a","bc") apart.
    const std::string len = fmt::format("{}:", data.size());
    EVP_DigestUpdate(md.get(), len.data(), len.size());
    EVP_DigestUpdate(md.get(), data.data(), data.size());
  }
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_DigestFinal_ex(md.get(), out, &n);
  std::string hex;
  for (unsigned int i = 0; i < n; ++i) hex += fmt::format("{:02x}", out[i]);
  return hex;
}

ordered_json report_envelope(const Context& ctx, const Result& r) {
  ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = ctx.command;
  j["inputs_digest"] = inputs_digest(ctx.inputs);
  j["metrics"] = r.metrics;
  j["findings"] = ordered_json::array();
  for (const auto& f : r.findings) j["findings"].push_back(to_json(f));
  return j;
}

std::unique_ptr<CLI::App> build_app(Context& ctx) {
  auto app = std::make_unique<CLI::App>("Sensor-rig calibration, synchronization and evaluation toolkit", kToolName);
  app->set_version_flag("--version", kToolVersion, "Print the tool version and exit");
  app->set_config("--config", "", "TOML configuration file; flags given on the command line take precedence")
      ->envname(kConfigEnv);
  app->allow_config_extras(CLI::config_extras_mode::error);

  app->add_option_function<std::string>(
         "--output",
         [&ctx](const std::string& mode) {
           ctx.output = mode == "json" ? OutputMode::Json : mode == "csv" ? OutputMode::Csv : OutputMode::Text;
         },
         "Report format")
      ->check(CLI::IsMember({"json", "text", "csv"}))
      ->default_str("text");

  // Subcommands created below inherit this, so --output and --config may
  // also follow the subcommand name.
  app->fallthrough();
  app->require_subcommand(1);

  add_tf_commands(*app, ctx);
  add_sync_commands(*app, ctx);
  add_imu_commands(*app, ctx);
  add_cam_commands(*app, ctx);
  add_cloud_commands(*app, ctx);
  add_eval_commands(*app, ctx);
  add_dataset_commands(*app, ctx);
  return app;
}

namespace {

void print_findings(std::ostream& err, const std::vector<Finding>& findings) {
  for (const auto& f : findings) {
    if (f.severity != Severity::Error) continue;
    err << kToolName << ": " << to_string(f.severity) << " " << f.code;
    if (!f.subject.empty()) err << " " << f.subject;
    if (f.index) err << "[" << *f.index << "]";
    err << ": " << f.message << "\n";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx;
  try {
    auto app = build_app(ctx);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app->parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app->exit(e, out, err);
      return code == 0 ? kOk : kInputError;
    }
    if (!ctx.result) return kInternal;
    const Result& r = *ctx.result;
    switch (ctx.output) {
      case OutputMode::Json:
        out << dump_canonical(report_envelope(ctx, r), r.float_decimals);
        break;
      case OutputMode::Text:
        out << r.text;
        break;
      case OutputMode::Csv:
        if (r.csv.empty()) {
          err << kToolName << ": '" << ctx.command << "' has no csv output\n";
          return kInputError;
        }
        out << r.csv;
        break;
    }
    print_findings(err, r.findings);
    return r.exit_code;
  } catch (const Error& e) {
    err << kToolName << ": " << e.what() << "\n";
    return is_input_error(e.code()) ? kInputError : kDomainError;
  } catch (const std::exception& e) {
    err << kToolName << ": internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace rig::cli
