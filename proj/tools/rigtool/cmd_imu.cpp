#include <optional>

#include <fmt/format.h>

#include "cli.hpp"
#include "rig/allan.hpp"
#include "rig/error.hpp"

namespace rig::cli {

namespace {

struct AllanArgs {
  std::string input;
  std::optional<double> rate_hz;
  int per_decade = 10;
  unsigned threads = 1;
  std::string curve_out;
};

struct ImuSimArgs {
  ImuSimSpec spec;
  std::string out;
};

constexpr const char* kAxes[] = {"x", "y", "z"};

std::string opt_value(const std::optional<double>& v) { return v ? fmt::format("{:.6e}", *v) : std::string("n/a"); }

Result allan(Context& ctx, const AllanArgs& a) {
  ctx.inputs.emplace_back(a.input);
  const ImuLog log = read_imu_csv(a.input, a.rate_hz);
  const ImuNoiseParams p = characterize_imu(log, a.per_decade, a.threads);

  Result r;
  r.float_decimals = 12;
  r.metrics["rate_hz"] = log.rate_hz;
  r.metrics["samples"] = log.size();
  r.metrics["noise"] = to_json(p);

  r.text = fmt::format("{} samples at {:.3f} Hz\n", log.size(), log.rate_hz);
  r.text += fmt::format("{:<6} {:<5} {:>14} {:>14}\n", "sensor", "axis", "N (1/sqrt(Hz))", "K (1/sqrt(s))");
  r.csv = "sensor,axis,noise_density,random_walk\n";
  const std::pair<const char*, const SensorNoise*> sensors[] = {{"gyro", &p.gyro}, {"accel", &p.accel}};
  for (const auto& [name, s] : sensors) {
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& ax = s->axes[i];
      const auto n = ax.noise_density ? std::optional<double>(ax.noise_density->value) : std::nullopt;
      const auto k = ax.random_walk ? std::optional<double>(ax.random_walk->value) : std::nullopt;
      r.text += fmt::format("{:<6} {:<5} {:>14} {:>14}\n", name, kAxes[i], opt_value(n), opt_value(k));
      r.csv += fmt::format("{},{},{},{}\n", name, kAxes[i], n ? fmt::format("{:.9g}", *n) : "",
                           k ? fmt::format("{:.9g}", *k) : "");
      if (!ax.noise_density_error.empty()) {
        r.findings.push_back({Severity::Warning, "no_white_noise_region", fmt::format("{}.{}", name, kAxes[i]),
                              std::nullopt, ax.noise_density_error});
      }
      if (!ax.random_walk_error.empty()) {
        r.findings.push_back({Severity::Warning, "no_random_walk_region", fmt::format("{}.{}", name, kAxes[i]),
                              std::nullopt, ax.random_walk_error});
      }
    }
    r.text += fmt::format("{:<6} {:<5} {:>14} {:>14}\n", name, "mean", opt_value(s->noise_density),
                          opt_value(s->random_walk));
  }

  if (!a.curve_out.empty()) {
    std::string curves = "sensor,axis,tau_s,adev\n";
    for (const auto& [name, s] : sensors) {
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& c = s->axes[i].curve;
        for (std::size_t t = 0; t < c.taus_s.size(); ++t) {
          curves += fmt::format("{},{},{:.9g},{:.9g}\n", name, kAxes[i], c.taus_s[t], c.adev[t]);
        }
      }
    }
    write_file(a.curve_out, curves);
  }
  return r;
}

Result simulate(const ImuSimArgs& a) {
  const ImuLog log = simulate_imu(a.spec);
  write_imu_csv(a.out, log);
  Result r;
  r.float_decimals = 12;
  r.metrics["samples"] = log.size();
  r.metrics["rate_hz"] = log.rate_hz;
  r.metrics["gyro_noise_density"] = a.spec.gyro_sigma / std::sqrt(a.spec.rate_hz);
  r.metrics["accel_noise_density"] = a.spec.accel_sigma / std::sqrt(a.spec.rate_hz);
  r.metrics["seed"] = a.spec.seed;
  r.text = fmt::format("wrote {} samples to {}\n", log.size(), a.out);
  return r;
}

}  // namespace

void add_imu_commands(CLI::App& app, Context& ctx) {
  auto* imu = app.add_subcommand("imu", "IMU noise characterization");
  imu->require_subcommand(1);

  auto aa = std::make_shared<AllanArgs>();
  auto* allan_cmd = imu->add_subcommand("allan", "Allan deviation curves and noise density / random walk fits");
  allan_cmd->add_option("--input", aa->input, "Static IMU log CSV (t_ns,gx,gy,gz,ax,ay,az)")
      ->required()
      ->check(CLI::ExistingFile);
  allan_cmd->add_option("--rate", aa->rate_hz, "Sample rate in Hz (default: median of the stamp intervals)")
      ->check(CLI::PositiveNumber);
  allan_cmd->add_option("--per-decade", aa->per_decade, "Cluster sizes per decade of the default tau grid")
      ->check(CLI::Range(1, 100))
      ->capture_default_str();
  allan_cmd->add_option("--threads", aa->threads, "Worker threads across axes")
      ->check(CLI::Range(1u, 64u))
      ->capture_default_str();
  allan_cmd->add_option("--curve-out", aa->curve_out, "Write every tau/adev curve as CSV for plotting");
  on_run(allan_cmd, ctx, "imu allan", [&ctx, aa] { return allan(ctx, *aa); });

  auto sa = std::make_shared<ImuSimArgs>();
  auto* sim = imu->add_subcommand("simulate", "Write a synthetic static IMU log");
  sim->add_option("--out", sa->out, "Output CSV path")->required();
  sim->add_option("--rate", sa->spec.rate_hz, "Sample rate in Hz")->capture_default_str();
  sim->add_option("--n", sa->spec.n, "Number of samples")->required();
  sim->add_option("--gyro-sigma", sa->spec.gyro_sigma, "Per-sample gyro white noise std")->capture_default_str();
  sim->add_option("--accel-sigma", sa->spec.accel_sigma, "Per-sample accel white noise std")->capture_default_str();
  sim->add_option("--gyro-rrw", sa->spec.gyro_rrw, "Gyro rate random walk K")->capture_default_str();
  sim->add_option("--accel-rrw", sa->spec.accel_rrw, "Accel random walk K")->capture_default_str();
  sim->add_option("--seed", sa->spec.seed, "Random seed")->capture_default_str();
  on_run(sim, ctx, "imu simulate", [sa] { return simulate(*sa); });
}

}  // namespace rig::cli
