#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dadagger/datastore.hpp"
#include "dadagger/envs.hpp"
#include "dadagger/policy_net.hpp"
#include "dadagger/types.hpp"

namespace dadagger {

enum class Variant { dagger, dadagger_ensemble, dadagger_dropout, random };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view name);

struct RunConfig {
  Variant variant = Variant::dadagger_dropout;
  EnvKind env_kind = EnvKind::track;
  double alpha = 1.0;
  std::size_t ensemble_m = 1;
  int n_iters = 10;
  int horizon = 300;
  int rollouts_per_iter = 5;
  int eval_episodes = 5;
  /// "none", "expert:<episodes>" (scripted demonstrations on a fixed seed
  /// stream shared by every run), or a JSON-lines dataset path. Relative
  /// paths resolve against `base_dir`.
  std::string initial_dataset = "none";
  MlpSpec mlp;
  TrainConfig train;
  std::uint64_t master_seed = 0;
  bool eval_stochastic = false;

  std::filesystem::path base_dir;  // not serialised

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Defaults for an environment: horizon and an [obs, 32, 32, act] network.
RunConfig default_config(EnvKind kind);

struct Trajectory {
  std::vector<Observation> states;
  std::vector<Action> learner_actions;
  std::vector<double> scores;
  bool success = false;
  double total_reward = 0.0;

  std::size_t size() const { return states.size(); }
};

/// Maps (observation, step index) to an action.
using ActionSource = std::function<Action(std::span<const double>, std::size_t)>;

/// Resets `env` with `seed` and acts until the episode ends or `horizon`
/// steps have been taken. Every visited state (the one the action was chosen
/// in) is recorded; scores are zero-filled.
Trajectory rollout(const ActionSource& policy, Environment& env, int horizon,
                   std::uint64_t seed);

/// Learner rollout. With `dropout_seed` set, each step samples one dropout
/// mask instead of using the deterministic pass.
Trajectory rollout(const PolicyParams& policy, Environment& env, int horizon,
                   std::uint64_t seed,
                   std::optional<std::uint64_t> dropout_seed = std::nullopt);

/// The networks being trained. Ensemble mode holds M members, every other
/// variant holds one; members[0] is the one that drives and gets evaluated.
struct Learner {
  std::vector<PolicyParams> members;
  const PolicyParams& lead() const { return members.front(); }
};

/// Fills traj.scores. Ensemble: disagreement over the members' deterministic
/// outputs. Dropout: disagreement over forward_mc(lead, s, m, ...), with a
/// per-state seed derived from `seed`. DAgger and random: zeros.
void score_states(Trajectory& traj, Variant variant, const Learner& learner,
                  std::size_t m, std::uint64_t seed);

struct EvalResult {
  double success_rate = 0.0;
  double mean_reward = 0.0;
};

EvalResult evaluate(const ActionSource& policy, EnvKind kind,
                    std::span<const std::uint64_t> seeds, int horizon);
EvalResult evaluate(const PolicyParams& policy, EnvKind kind,
                    std::span<const std::uint64_t> seeds, int horizon,
                    std::optional<std::uint64_t> dropout_seed = std::nullopt);

/// Seeds of the held-out validation episodes. Disjoint from every rollout
/// seed by construction (top bit set).
std::vector<std::uint64_t> eval_seeds(std::uint64_t master_seed, int episodes);
std::uint64_t rollout_seed(std::uint64_t master_seed, int iteration, int rollout);

/// Scripted demonstrations on a fixed seed stream, independent of any run seed.
Dataset collect_expert_demos(EnvKind kind, int episodes, int horizon);

/// Resolves cfg.initial_dataset into a dataset.
Dataset load_initial_dataset(const RunConfig& cfg);

struct IterationRecord {
  int iteration = 0;
  std::size_t states_pooled = 0;
  std::size_t queries_made = 0;
  std::size_t dataset_size = 0;
  double validation_success_rate = 0.0;
  double mean_eval_reward = 0.0;
  bool converged = false;
};

struct RunReport {
  std::vector<IterationRecord> iterations;
  int best_iteration = 0;  // 1-based; 0 when no iteration ran
  bool converged = false;
  std::size_t initial_dataset_size = 0;
  double expert_eval_reward = 0.0;
  double best_success_rate = 0.0;
  double best_mean_reward = 0.0;
};

/// Mutable state threaded through the iterations of one run.
struct EngineState {
  RunConfig cfg;
  Dataset data;
  Learner learner;
  std::vector<std::uint64_t> eval_seeds;
  double expert_eval_reward = 0.0;

  // Outputs of the most recent iteration.
  std::vector<Trajectory> rollouts;
  std::vector<std::size_t> selection;  // indices into the pooled states
};

/// Validates cfg, sets up D from `initial` and the first learner (trained on
/// D when it is non-empty, otherwise left at its random initialisation).
EngineState init_engine(const RunConfig& cfg, Dataset initial);

/// One pass of the loop body: roll out the lead policy, score the pooled
/// states, keep the top-alpha fraction (or a random one), label them with the
/// expert, aggregate, retrain from fresh initialisations and validate.
IterationRecord dadagger_iteration(EngineState& state, int iteration);

/// Whether a validation result counts as convergence for this environment.
bool is_converged(EnvKind kind, const EvalResult& eval, double expert_reward);

struct RunResult {
  RunReport report;
  Dataset dataset;
  PolicyParams best_policy;
  /// Per iteration, the selected indices into that iteration's pooled states.
  std::vector<std::vector<std::size_t>> selections;
  /// Per iteration, the pairs appended to D.
  std::vector<Dataset> increments;
};

RunResult run(const RunConfig& cfg);

/// Plain DAgger written without any scoring or selection code, used to check
/// that run() with alpha = 1 and M = 1 reduces to it. cfg.variant must be
/// dagger, which in turn requires alpha == 1 and ensemble_m == 1.
RunResult run_dagger_reference(const RunConfig& cfg);

}  // namespace dadagger
