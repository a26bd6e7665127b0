#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dadagger/datastore.hpp"
#include "dadagger/engine.hpp"

namespace dadagger {

/// Standard deviation, in percentage points, of a convergence proportion over
/// n runs under the worst case p = 0.5: 100 * sqrt(0.25 / n).
double binomial_errbar(int n_seeds);

struct SweepSpec {
  std::vector<double> alphas;
  std::vector<std::size_t> ms;
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds;
  RunConfig base;

  void validate() const;
};

SweepSpec sweep_spec_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// One (variant, alpha, M) cell. DAgger contributes a single alpha = 1, M = 1
/// cell; random one cell per alpha with M = 1; the DADAgger variants one cell
/// per (M, alpha).
struct SweepCell {
  Variant variant = Variant::dadagger_dropout;
  double alpha = 0.0;
  std::size_t m = 1;
  std::string row_label;
};

std::vector<SweepCell> expand_cells(const SweepSpec& spec);

/// Seed of one run. Depends only on the cell's own parameters, so adding or
/// changing other cells never perturbs it.
std::uint64_t cell_run_seed(std::uint64_t master_seed, const SweepCell& cell,
                            std::uint64_t seed);

RunConfig cell_config(const SweepSpec& spec, const SweepCell& cell, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::uint64_t run_seed = 0;
  bool ok = false;
  std::string error;
  bool converged = false;
  std::size_t total_queries = 0;
  std::size_t final_dataset = 0;
  double best_success_rate = 0.0;
  double best_mean_reward = 0.0;
};

struct CellResult {
  SweepCell cell;
  std::vector<SeedOutcome> runs;
  std::size_t n_ok = 0;
  std::size_t n_converged = 0;
  double convergence_pct = 0.0;  // over runs that completed
  double stddev_pct = 0.0;
  double mean_queries = 0.0;
  double mean_final_dataset = 0.0;
};

struct SweepReport {
  std::vector<double> alphas;
  std::vector<std::size_t> ms;
  std::vector<CellResult> cells;
};

using RunFunction = std::function<RunReport(const RunConfig&)>;

/// Runs every (cell, seed) pair, `jobs` at a time. Output does not depend on
/// `jobs`. A failing run is recorded in its cell and the sweep carries on.
/// `runner` defaults to run(cfg).report.
SweepReport run_sweep(const SweepSpec& spec, unsigned jobs = 1,
                      const RunFunction& runner = {});

nlohmann::json sweep_report_to_json(const SweepReport& r);
SweepReport sweep_report_from_json(const nlohmann::json& j);
std::string sweep_cells_csv(const SweepReport& r);
/// Rows per M value (plus "random", "dagger"), one column per alpha.
std::string sweep_table_csv(const SweepReport& r);

// ---------------------------------------------------------------------------
// Dataset construction from an empty initial dataset.

struct OneShotCheck {
  bool trained = false;
  double success_rate = 0.0;
  double mean_reward = 0.0;
  bool converged = false;
  std::string note;
};

struct BuildResult {
  RunResult run;
  HistogramReport histogram;
  OneShotCheck one_shot;
};

/// alpha 0.1, 50 iterations, dropout variant with M = 10, empty initial data.
RunConfig build_dataset_defaults();

/// Trains a fresh policy once on `data` and validates it on the run's
/// held-out episodes.
OneShotCheck one_shot_check(const RunConfig& cfg, const Dataset& data);

/// Requires cfg.initial_dataset == "none".
BuildResult build_dataset(const RunConfig& cfg, std::size_t histogram_bins = 20);

nlohmann::json one_shot_to_json(const OneShotCheck& c);

// ---------------------------------------------------------------------------
// Output directories

void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg,
                       const RunResult& result);
void write_build_outputs(const std::filesystem::path& dir, const RunConfig& cfg,
                         const BuildResult& result);
void write_sweep_outputs(const std::filesystem::path& dir, const SweepReport& report);

/// Human-readable summary of one or more output directories. Throws
/// InputError when a directory holds none of the known output files.
std::string summarize_outputs(const std::vector<std::filesystem::path>& dirs);

}  // namespace dadagger
