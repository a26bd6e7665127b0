// Command-line front end: single runs, sweeps, dataset construction, reports.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dadagger/config.hpp"
#include "dadagger/datastore.hpp"
#include "dadagger/engine.hpp"
#include "dadagger/error.hpp"
#include "dadagger/harness.hpp"

namespace fs = std::filesystem;
using namespace dadagger;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int cmd_run(const fs::path& config, const fs::path& out) {
  const RunConfig cfg = load_run_config(config);
  const RunResult result = run(cfg);
  write_run_outputs(out, cfg, result);
  const RunReport& r = result.report;
  std::cout << "converged: " << (r.converged ? "yes" : "no")
            << ", best iteration " << r.best_iteration << ", final dataset "
            << result.dataset.size() << " pairs\n";
  return 0;
}

int cmd_sweep(const fs::path& spec_path, const fs::path& out, unsigned jobs) {
  const SweepSpec spec = load_sweep_spec(spec_path);
  const SweepReport report = run_sweep(spec, jobs);
  write_sweep_outputs(out, report);
  std::cout << sweep_table_csv(report);
  return 0;
}

int cmd_build_dataset(const fs::path& config, const fs::path& out) {
  const RunConfig defaults = build_dataset_defaults();
  const RunConfig cfg = load_run_config(config, &defaults);
  const BuildResult b = build_dataset(cfg);
  write_build_outputs(out, cfg, b);
  std::cout << "dataset: " << b.run.dataset.size() << " pairs, entropy";
  for (double e : b.histogram.entropy_bits) std::cout << ' ' << e;
  std::cout << " bits; one-shot policy "
            << (b.one_shot.converged ? "converged" : "did not converge") << '\n';
  return 0;
}

int cmd_demos(const std::string& env, int episodes, const fs::path& out) {
  const EnvKind kind = env_kind_from_string(env);
  const Dataset d = collect_expert_demos(kind, episodes, default_horizon(kind));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_dataset(d, out);
  std::cout << "wrote " << d.size() << " expert pairs to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAgger / DADAgger imitation learning toolkit"};
  app.require_subcommand(1);

  fs::path config, out, spec;
  unsigned jobs = 1;
  std::vector<fs::path> report_dirs;
  std::string demo_env = "track";
  int demo_episodes = 4;

  auto* run_cmd = app.add_subcommand("run", "Run one DAgger/DADAgger experiment");
  run_cmd->add_option("--config", config, "RunConfig JSON")->required();
  run_cmd->add_option("--out", out, "Output directory")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run an M x alpha grid over seeds");
  sweep_cmd->add_option("--spec", spec, "SweepSpec JSON")->required();
  sweep_cmd->add_option("--out", out, "Output directory")->required();
  sweep_cmd->add_option("--jobs", jobs, "Runs executed in parallel")->check(CLI::PositiveNumber);

  auto* build_cmd = app.add_subcommand(
      "build-dataset", "Construct a dataset from scratch (defaults: alpha 0.1, 50 iterations)");
  build_cmd->add_option("--config", config, "RunConfig JSON")->required();
  build_cmd->add_option("--out", out, "Output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "Summarise output directories");
  report_cmd->add_option("dirs", report_dirs, "Directories written by run/sweep/build-dataset")
      ->required();

  auto* demos_cmd = app.add_subcommand("demos", "Write scripted expert demonstrations");
  demos_cmd->add_option("--env", demo_env, "track or reacher");
  demos_cmd->add_option("--episodes", demo_episodes, "Number of expert episodes");
  demos_cmd->add_option("--out", out, "Output JSON-lines file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(config, out);
    if (*sweep_cmd) return cmd_sweep(spec, out, jobs);
    if (*build_cmd) return cmd_build_dataset(config, out);
    if (*report_cmd) {
      std::cout << summarize_outputs(report_dirs);
      return 0;
    }
    if (*demos_cmd) return cmd_demos(demo_env, demo_episodes, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
