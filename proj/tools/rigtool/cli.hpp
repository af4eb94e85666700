#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rig/report.hpp"

namespace rig::cli {

inline constexpr const char* kToolName = "rigtool";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kConfigEnv = "RIGTOOL_CONFIG";

enum class OutputMode { Json, Text, Csv };

enum ExitCode : int { kOk = 0, kInternal = 1, kInputError = 2, kDomainError = 3 };

/// What a command produced. The runner serializes it in the requested mode.
struct Result {
  ordered_json metrics = ordered_json::object();
  std::vector<Finding> findings;
  std::string text;
  std::string csv;
  int float_decimals = 6;
  int exit_code = kOk;
};

struct Context {
  OutputMode output = OutputMode::Text;
  std::string command;                          ///< e.g. "eval ate"
  std::vector<std::filesystem::path> inputs;    ///< files hashed into inputs_digest
  std::optional<Result> result;
};

/// Builds the full command tree. Command callbacks record into `ctx`.
std::unique_ptr<CLI::App> build_app(Context& ctx);

/// Runs one invocation in-process. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SHA-256 over the listed files in order, hex-encoded. Directories
/// contribute their manifest.json and */index.csv files, sorted by path.
std::string inputs_digest(const std::vector<std::filesystem::path>& inputs);

/// The shared report envelope.
ordered_json report_envelope(const Context& ctx, const Result& r);

// Per-area registration; each adds its subcommands under `app`.
void add_tf_commands(CLI::App& app, Context& ctx);
void add_sync_commands(CLI::App& app, Context& ctx);
void add_imu_commands(CLI::App& app, Context& ctx);
void add_cam_commands(CLI::App& app, Context& ctx);
void add_cloud_commands(CLI::App& app, Context& ctx);
void add_eval_commands(CLI::App& app, Context& ctx);
void add_dataset_commands(CLI::App& app, Context& ctx);

/// Marks a leaf subcommand: sets the command name and registers `fn` as
/// its callback.
template <typename Fn>
void on_run(CLI::App* sub, Context& ctx, std::string command, Fn fn) {
  sub->callback([&ctx, command = std::move(command), fn]() {
    ctx.command = command;
    ctx.result = fn();
  });
}

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& contents);

}  // namespace rig::cli
