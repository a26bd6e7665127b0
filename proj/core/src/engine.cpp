#include "dadagger/engine.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "dadagger/error.hpp"
#include "dadagger/random.hpp"
#include "dadagger/uncertainty.hpp"

namespace dadagger {

namespace {

// Stream tags for seed derivation.
enum : std::uint64_t {
  kTagRollout = 0x101,
  kTagEval = 0x102,
  kTagInit = 0x103,
  kTagTrain = 0x104,
  kTagScore = 0x105,
  kTagSelect = 0x106,
  kTagRolloutNoise = 0x107,
  kTagEvalNoise = 0x108,
  kTagDemo = 0x109,
};

constexpr std::uint64_t kTopBit = std::uint64_t{1} << 63;

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }

std::size_t member_count(const RunConfig& cfg) {
  return cfg.variant == Variant::dadagger_ensemble ? cfg.ensemble_m : 1;
}

// Fresh initialisation trained on the whole dataset. Iteration 0 is the
// learner built before the first iteration.
PolicyParams fit_member(const RunConfig& cfg, const Dataset& data, int iteration,
                        std::size_t member) {
  PolicyParams p =
      init_params(cfg.mlp, mix_seed({cfg.master_seed, kTagInit, u64(iteration), member}));
  if (data.empty()) return p;
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed({cfg.master_seed, kTagTrain, cfg.train.seed, u64(iteration), member});
  return train(p, data.pairs, tc);
}

Learner fit_learner(const RunConfig& cfg, const Dataset& data, int iteration) {
  Learner l;
  for (std::size_t j = 0; j < member_count(cfg); ++j) {
    l.members.push_back(fit_member(cfg, data, iteration, j));
  }
  return l;
}

std::optional<std::uint64_t> rollout_noise(const RunConfig& cfg, int iteration, int r) {
  if (!cfg.eval_stochastic) return std::nullopt;
  return mix_seed({cfg.master_seed, kTagRolloutNoise, u64(iteration), u64(r)});
}

std::optional<std::uint64_t> eval_noise(const RunConfig& cfg, int iteration) {
  if (!cfg.eval_stochastic) return std::nullopt;
  return mix_seed({cfg.master_seed, kTagEvalNoise, u64(iteration)});
}

// Lexicographic on (success rate, reward) for the track, reward otherwise.
bool better(EnvKind kind, const EvalResult& a, const EvalResult& b) {
  if (kind == EnvKind::track && a.success_rate != b.success_rate) {
    return a.success_rate > b.success_rate;
  }
  return a.mean_reward > b.mean_reward;
}

void require_positive(int v, const char* field) {
  if (v < 1) throw ConfigError(std::string(field) + " must be >= 1");
}

struct BestTracker {
  explicit BestTracker(EnvKind k) : kind(k) {}

  EnvKind kind;
  bool any = false;
  EvalResult best;
  int iteration = 0;
  PolicyParams policy;

  void offer(int i, const EvalResult& e, const PolicyParams& p) {
    if (!any || better(kind, e, best)) {
      any = true;
      best = e;
      iteration = i;
      policy = p;
    }
  }
};

IterationRecord make_record(int i, std::size_t pooled, std::size_t queries,
                            std::size_t dsize, const EvalResult& e, bool conv) {
  IterationRecord rec;
  rec.iteration = i;
  rec.states_pooled = pooled;
  rec.queries_made = queries;
  rec.dataset_size = dsize;
  rec.validation_success_rate = e.success_rate;
  rec.mean_eval_reward = e.mean_reward;
  rec.converged = conv;
  return rec;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::dagger: return "dagger";
    case Variant::dadagger_ensemble: return "dadagger_ensemble";
    case Variant::dadagger_dropout: return "dadagger_dropout";
    case Variant::random: return "random";
  }
  return "?";
}

Variant variant_from_string(std::string_view name) {
  if (name == "dagger") return Variant::dagger;
  if (name == "dadagger_ensemble") return Variant::dadagger_ensemble;
  if (name == "dadagger_dropout") return Variant::dadagger_dropout;
  if (name == "random") return Variant::random;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha out of range: must satisfy 0 <= alpha <= 1");
  }
  if (ensemble_m < 1) throw ConfigError("ensemble_m must be >= 1");
  if (variant == Variant::dagger && (alpha != 1.0 || ensemble_m != 1)) {
    throw ConfigError("variant dagger requires alpha = 1 and ensemble_m = 1");
  }
  if (variant == Variant::random && ensemble_m != 1) {
    throw ConfigError("variant random requires ensemble_m = 1");
  }
  if (n_iters < 0) throw ConfigError("n_iters must be >= 0");
  require_positive(horizon, "horizon");
  require_positive(rollouts_per_iter, "rollouts_per_iter");
  require_positive(eval_episodes, "eval_episodes");
  mlp.validate();
  if (mlp.input_dim() != obs_dim(env_kind)) {
    throw ConfigError("mlp.layer_sizes must start with the observation size " +
                      std::to_string(obs_dim(env_kind)) + " of env '" +
                      std::string(to_string(env_kind)) + "'");
  }
  if (mlp.output_dim() != act_dim(env_kind)) {
    throw ConfigError("mlp.layer_sizes must end with the action size " +
                      std::to_string(act_dim(env_kind)) + " of env '" +
                      std::string(to_string(env_kind)) + "'");
  }
  train.validate();
  if (initial_dataset.empty()) {
    throw ConfigError("initial_dataset must be \"none\", \"expert:<n>\" or a path");
  }
}

RunConfig default_config(EnvKind kind) {
  RunConfig cfg;
  cfg.env_kind = kind;
  cfg.horizon = default_horizon(kind);
  cfg.mlp.layer_sizes = {obs_dim(kind), 32, 32, act_dim(kind)};
  return cfg;
}

Trajectory rollout(const ActionSource& policy, Environment& env, int horizon,
                   std::uint64_t seed) {
  Trajectory t;
  Observation obs = env.reset(seed);
  for (int step = 0; step < horizon; ++step) {
    Action a = policy(obs, static_cast<std::size_t>(step));
    StepResult r = env.step(a);
    t.states.push_back(std::move(obs));
    t.learner_actions.push_back(std::move(a));
    t.total_reward += r.reward;
    obs = std::move(r.obs);
    if (r.done) {
      t.success = r.success;
      break;
    }
  }
  t.scores.assign(t.states.size(), 0.0);
  return t;
}

Trajectory rollout(const PolicyParams& policy, Environment& env, int horizon,
                   std::uint64_t seed, std::optional<std::uint64_t> dropout_seed) {
  if (policy.spec.input_dim() != obs_dim(env.kind()) ||
      policy.spec.output_dim() != act_dim(env.kind())) {
    throw InputError("policy dimensions do not match the environment");
  }
  if (!dropout_seed) {
    return rollout([&](std::span<const double> o, std::size_t) { return forward(policy, o); },
                   env, horizon, seed);
  }
  const std::uint64_t base = *dropout_seed;
  return rollout(
      [&](std::span<const double> o, std::size_t step) {
        return forward_mc(policy, o, 1, mix_seed({base, step})).front();
      },
      env, horizon, seed);
}

void score_states(Trajectory& traj, Variant variant, const Learner& learner,
                  std::size_t m, std::uint64_t seed) {
  if (m < 1) throw InputError("score_states needs m >= 1");
  traj.scores.assign(traj.states.size(), 0.0);
  if (variant == Variant::dagger || variant == Variant::random) return;
  std::vector<Action> samples;
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const Observation& obs = traj.states[s];
    if (variant == Variant::dadagger_ensemble) {
      samples.clear();
      for (const PolicyParams& member : learner.members) {
        samples.push_back(forward(member, obs));
      }
    } else {
      samples = forward_mc(learner.lead(), obs, m, mix_seed({seed, s}));
    }
    traj.scores[s] = disagreement(samples);
  }
}

EvalResult evaluate(const ActionSource& policy, EnvKind kind,
                    std::span<const std::uint64_t> seeds, int horizon) {
  EvalResult e;
  if (seeds.empty()) return e;
  auto env = make_env(kind);
  for (std::uint64_t s : seeds) {
    const Trajectory t = rollout(policy, *env, horizon, s);
    e.success_rate += t.success ? 1.0 : 0.0;
    e.mean_reward += t.total_reward;
  }
  const double n = static_cast<double>(seeds.size());
  e.success_rate /= n;
  e.mean_reward /= n;
  return e;
}

EvalResult evaluate(const PolicyParams& policy, EnvKind kind,
                    std::span<const std::uint64_t> seeds, int horizon,
                    std::optional<std::uint64_t> dropout_seed) {
  EvalResult e;
  if (seeds.empty()) return e;
  auto env = make_env(kind);
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    std::optional<std::uint64_t> noise;
    if (dropout_seed) noise = mix_seed({*dropout_seed, k});
    const Trajectory t = rollout(policy, *env, horizon, seeds[k], noise);
    e.success_rate += t.success ? 1.0 : 0.0;
    e.mean_reward += t.total_reward;
  }
  const double n = static_cast<double>(seeds.size());
  e.success_rate /= n;
  e.mean_reward /= n;
  return e;
}

std::vector<std::uint64_t> eval_seeds(std::uint64_t master_seed, int episodes) {
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < episodes; ++k) {
    seeds.push_back(mix_seed({master_seed, kTagEval, u64(k)}) | kTopBit);
  }
  return seeds;
}

std::uint64_t rollout_seed(std::uint64_t master_seed, int iteration, int rollout) {
  return mix_seed({master_seed, kTagRollout, u64(iteration), u64(rollout)}) & ~kTopBit;
}

Dataset collect_expert_demos(EnvKind kind, int episodes, int horizon) {
  Dataset d;
  d.env_kind = std::string(to_string(kind));
  auto env = make_env(kind);
  for (int k = 0; k < episodes; ++k) {
    const Trajectory t = rollout(
        [&](std::span<const double> o, std::size_t) { return query_expert(kind, o); },
        *env, horizon, mix_seed({kTagDemo, u64(k)}) & ~kTopBit);
    for (std::size_t s = 0; s < t.size(); ++s) {
      d.pairs.push_back({t.states[s], t.learner_actions[s]});
    }
  }
  return d;
}

Dataset load_initial_dataset(const RunConfig& cfg) {
  const std::string& spec = cfg.initial_dataset;
  const std::string kind(to_string(cfg.env_kind));
  if (spec == "none") return Dataset{kind, {}};
  constexpr std::string_view prefix = "expert:";
  if (spec.rfind(prefix, 0) == 0) {
    int episodes = -1;
    const char* first = spec.data() + prefix.size();
    const char* last = spec.data() + spec.size();
    auto [ptr, ec] = std::from_chars(first, last, episodes);
    if (ec != std::errc{} || ptr != last || episodes < 0) {
      throw ConfigError("initial_dataset: bad episode count in '" + spec + "'");
    }
    return collect_expert_demos(cfg.env_kind, episodes, cfg.horizon);
  }
  std::filesystem::path path(spec);
  if (path.is_relative() && !cfg.base_dir.empty()) path = cfg.base_dir / path;
  if (!std::filesystem::exists(path)) {
    throw ConfigError("initial_dataset: file not found: " + path.string());
  }
  return load_dataset(path, kind);
}

bool is_converged(EnvKind kind, const EvalResult& eval, double expert_reward) {
  if (kind == EnvKind::track) return eval.success_rate == 1.0;
  return eval.mean_reward >= 0.9 * expert_reward;
}

EngineState init_engine(const RunConfig& cfg, Dataset initial) {
  cfg.validate();
  const std::string kind(to_string(cfg.env_kind));
  if (initial.env_kind.empty() && initial.empty()) initial.env_kind = kind;
  if (initial.env_kind != kind) {
    throw ConfigError("initial dataset belongs to env '" + initial.env_kind + "'");
  }
  EngineState st;
  st.cfg = cfg;
  st.data = std::move(initial);
  st.learner = fit_learner(cfg, st.data, 0);
  st.eval_seeds = eval_seeds(cfg.master_seed, cfg.eval_episodes);
  st.expert_eval_reward =
      evaluate([&](std::span<const double> o, std::size_t) { return query_expert(cfg.env_kind, o); },
               cfg.env_kind, st.eval_seeds, cfg.horizon)
          .mean_reward;
  return st;
}

IterationRecord dadagger_iteration(EngineState& st, int iteration) {
  if (iteration < 1) throw UsageError("iterations are numbered from 1");
  const RunConfig& cfg = st.cfg;
  auto env = make_env(cfg.env_kind);

  st.rollouts.clear();
  std::vector<const Observation*> pooled;
  std::vector<double> scores;
  for (int r = 0; r < cfg.rollouts_per_iter; ++r) {
    Trajectory t = rollout(st.learner.lead(), *env, cfg.horizon,
                           rollout_seed(cfg.master_seed, iteration, r),
                           rollout_noise(cfg, iteration, r));
    score_states(t, cfg.variant, st.learner, cfg.ensemble_m,
                 mix_seed({cfg.master_seed, kTagScore, u64(iteration), u64(r)}));
    st.rollouts.push_back(std::move(t));
  }
  for (const Trajectory& t : st.rollouts) {
    for (std::size_t s = 0; s < t.size(); ++s) {
      pooled.push_back(&t.states[s]);
      scores.push_back(t.scores[s]);
    }
  }

  switch (cfg.variant) {
    case Variant::dagger:
      st.selection = select_top_alpha(scores, 1.0);
      break;
    case Variant::random:
      st.selection = select_random(
          pooled.size(), cfg.alpha,
          mix_seed({cfg.master_seed, kTagSelect, u64(iteration)}));
      break;
    default:
      st.selection = select_top_alpha(scores, cfg.alpha);
      break;
  }

  Dataset increment{st.data.env_kind, {}};
  increment.pairs.reserve(st.selection.size());
  for (std::size_t idx : st.selection) {
    const Observation& s = *pooled[idx];
    increment.pairs.push_back({s, query_expert(cfg.env_kind, s)});
  }
  const std::size_t queries = increment.size();
  if (queries > 0) {
    st.data = aggregate(st.data, increment);
    st.learner = fit_learner(cfg, st.data, iteration);
  }

  const EvalResult e = evaluate(st.learner.lead(), cfg.env_kind, st.eval_seeds,
                                cfg.horizon, eval_noise(cfg, iteration));
  return make_record(iteration, pooled.size(), queries, st.data.size(), e,
                     is_converged(cfg.env_kind, e, st.expert_eval_reward));
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  EngineState st = init_engine(cfg, load_initial_dataset(cfg));

  RunResult out;
  out.report.initial_dataset_size = st.data.size();
  out.report.expert_eval_reward = st.expert_eval_reward;
  BestTracker best(cfg.env_kind);
  best.policy = st.learner.lead();

  for (int i = 1; i <= cfg.n_iters; ++i) {
    const std::size_t before = st.data.size();
    IterationRecord rec = dadagger_iteration(st, i);
    out.selections.push_back(st.selection);
    out.increments.push_back(Dataset{
        st.data.env_kind,
        {st.data.pairs.begin() + static_cast<std::ptrdiff_t>(before), st.data.pairs.end()}});
    best.offer(i, {rec.validation_success_rate, rec.mean_eval_reward}, st.learner.lead());
    out.report.converged = out.report.converged || rec.converged;
    out.report.iterations.push_back(rec);
  }

  out.report.best_iteration = best.iteration;
  out.report.best_success_rate = best.best.success_rate;
  out.report.best_mean_reward = best.best.mean_reward;
  out.best_policy = std::move(best.policy);
  out.dataset = std::move(st.data);
  return out;
}

RunResult run_dagger_reference(const RunConfig& cfg) {
  if (cfg.variant != Variant::dagger) {
    throw ConfigError("run_dagger_reference needs variant dagger");
  }
  if (cfg.alpha != 1.0) {
    throw ConfigError("run_dagger_reference: alpha must be 1 (DAgger queries every state)");
  }
  cfg.validate();

  const EnvKind kind = cfg.env_kind;
  Dataset data = load_initial_dataset(cfg);
  PolicyParams policy = fit_member(cfg, data, 0, 0);
  const std::vector<std::uint64_t> seeds = eval_seeds(cfg.master_seed, cfg.eval_episodes);
  const double expert_reward =
      evaluate([&](std::span<const double> o, std::size_t) { return query_expert(kind, o); },
               kind, seeds, cfg.horizon)
          .mean_reward;

  RunResult out;
  out.report.initial_dataset_size = data.size();
  out.report.expert_eval_reward = expert_reward;
  BestTracker best(kind);
  best.policy = policy;
  auto env = make_env(kind);

  for (int i = 1; i <= cfg.n_iters; ++i) {
    Dataset fresh{data.env_kind, {}};
    std::vector<std::size_t> visited;
    for (int r = 0; r < cfg.rollouts_per_iter; ++r) {
      const Trajectory t = rollout(policy, *env, cfg.horizon,
                                   rollout_seed(cfg.master_seed, i, r),
                                   rollout_noise(cfg, i, r));
      for (const Observation& s : t.states) {
        visited.push_back(visited.size());
        fresh.pairs.push_back({s, query_expert(kind, s)});
      }
    }
    const std::size_t queries = fresh.size();
    data = aggregate(data, fresh);
    if (queries > 0) policy = fit_member(cfg, data, i, 0);

    const EvalResult e = evaluate(policy, kind, seeds, cfg.horizon, eval_noise(cfg, i));
    const bool conv = is_converged(kind, e, expert_reward);
    out.report.iterations.push_back(make_record(i, queries, queries, data.size(), e, conv));
    out.report.converged = out.report.converged || conv;
    out.selections.push_back(std::move(visited));
    out.increments.push_back(std::move(fresh));
    best.offer(i, e, policy);
  }

  out.report.best_iteration = best.iteration;
  out.report.best_success_rate = best.best.success_rate;
  out.report.best_mean_reward = best.best.mean_reward;
  out.best_policy = std::move(best.policy);
  out.dataset = std::move(data);
  return out;
}

}  // namespace dadagger
