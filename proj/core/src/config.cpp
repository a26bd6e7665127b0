#include "dadagger/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dadagger/error.hpp"

namespace dadagger {

using nlohmann::json;

namespace {

const std::set<std::string> kRunKeys = {
    "variant",        "env_kind",        "alpha",         "ensemble_m",
    "n_iters",        "horizon",         "rollouts_per_iter", "eval_episodes",
    "initial_dataset", "mlp",            "train",         "master_seed",
    "eval_stochastic"};

template <class T>
T field(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + std::string(name) + "' has the wrong type");
  }
}

int int_field(const json& j, const char* name) {
  const json& v = j.at(name);
  if (!v.is_number_integer()) {
    throw ConfigError("field '" + std::string(name) + "' must be an integer");
  }
  return v.get<int>();
}

TrainConfig train_from_json(const json& j, TrainConfig t) {
  if (!j.is_object()) throw ConfigError("field 'train' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "epochs") {
      t.epochs = int_field(j, "epochs");
    } else if (k == "batch_size") {
      const int b = int_field(j, "batch_size");
      if (b < 1) throw ConfigError("train.batch_size must be >= 1");
      t.batch_size = static_cast<std::size_t>(b);
    } else if (k == "learning_rate") {
      t.learning_rate = field<double>(j, "learning_rate");
    } else if (k == "seed") {
      t.seed = field<std::uint64_t>(j, "seed");
    } else {
      throw ConfigError("unknown field 'train." + k + "'");
    }
  }
  return t;
}

}  // namespace

json train_config_to_json(const TrainConfig& t) {
  return json{{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"seed", t.seed}};
}

RunConfig run_config_from_json(const json& user, const RunConfig* defaults) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : user.items()) {
    if (!kRunKeys.count(k)) throw ConfigError("unknown field '" + k + "'");
  }
  if (!user.contains("env_kind")) {
    throw ConfigError("missing required field 'env_kind'");
  }
  const EnvKind kind = env_kind_from_string(field<std::string>(user, "env_kind"));

  RunConfig cfg = defaults ? *defaults : default_config(kind);
  if (defaults && defaults->env_kind != kind) {
    const RunConfig fresh = default_config(kind);
    cfg.horizon = fresh.horizon;
    cfg.mlp.layer_sizes = fresh.mlp.layer_sizes;
  }
  cfg.env_kind = kind;

  if (user.contains("variant")) {
    cfg.variant = variant_from_string(field<std::string>(user, "variant"));
  } else if (!defaults) {
    throw ConfigError("missing required field 'variant'");
  }
  if (user.contains("alpha")) cfg.alpha = field<double>(user, "alpha");
  if (user.contains("ensemble_m")) {
    const int m = int_field(user, "ensemble_m");
    if (m < 1) throw ConfigError("ensemble_m must be >= 1");
    cfg.ensemble_m = static_cast<std::size_t>(m);
  }
  if (user.contains("n_iters")) cfg.n_iters = int_field(user, "n_iters");
  if (user.contains("horizon")) cfg.horizon = int_field(user, "horizon");
  if (user.contains("rollouts_per_iter")) {
    cfg.rollouts_per_iter = int_field(user, "rollouts_per_iter");
  }
  if (user.contains("eval_episodes")) cfg.eval_episodes = int_field(user, "eval_episodes");
  if (user.contains("initial_dataset")) {
    cfg.initial_dataset = field<std::string>(user, "initial_dataset");
  }
  if (user.contains("mlp")) {
    const json& m = user.at("mlp");
    if (!m.is_object()) throw ConfigError("field 'mlp' must be an object");
    for (const auto& [k, v] : m.items()) {
      if (k != "layer_sizes" && k != "dropout_rate" && k != "hidden_activation" &&
          k != "output_activation") {
        throw ConfigError("unknown field 'mlp." + k + "'");
      }
    }
    const MlpSpec parsed = spec_from_json(m);
    if (m.contains("layer_sizes")) cfg.mlp.layer_sizes = parsed.layer_sizes;
    if (m.contains("dropout_rate")) cfg.mlp.dropout_rate = parsed.dropout_rate;
    if (m.contains("hidden_activation")) cfg.mlp.hidden_activation = parsed.hidden_activation;
    if (m.contains("output_activation")) cfg.mlp.output_activation = parsed.output_activation;
  }
  if (user.contains("train")) cfg.train = train_from_json(user.at("train"), cfg.train);
  if (user.contains("master_seed")) cfg.master_seed = field<std::uint64_t>(user, "master_seed");
  if (user.contains("eval_stochastic")) {
    cfg.eval_stochastic = field<bool>(user, "eval_stochastic");
  }
  cfg.validate();
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  return json{{"variant", to_string(cfg.variant)},
              {"env_kind", to_string(cfg.env_kind)},
              {"alpha", cfg.alpha},
              {"ensemble_m", cfg.ensemble_m},
              {"n_iters", cfg.n_iters},
              {"horizon", cfg.horizon},
              {"rollouts_per_iter", cfg.rollouts_per_iter},
              {"eval_episodes", cfg.eval_episodes},
              {"initial_dataset", cfg.initial_dataset},
              {"mlp", spec_to_json(cfg.mlp)},
              {"train", train_config_to_json(cfg.train)},
              {"master_seed", cfg.master_seed},
              {"eval_stochastic", cfg.eval_stochastic}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig* defaults) {
  RunConfig cfg = run_config_from_json(read_json_file(path), defaults);
  cfg.base_dir = path.parent_path();
  return cfg;
}

json run_report_to_json(const RunReport& r) {
  json iters = json::array();
  for (const IterationRecord& it : r.iterations) {
    iters.push_back(json{{"iteration", it.iteration},
                         {"states_pooled", it.states_pooled},
                         {"queries_made", it.queries_made},
                         {"dataset_size", it.dataset_size},
                         {"validation_success_rate", it.validation_success_rate},
                         {"mean_eval_reward", it.mean_eval_reward},
                         {"converged", it.converged}});
  }
  return json{{"iterations", std::move(iters)},
              {"best_iteration", r.best_iteration},
              {"converged", r.converged},
              {"initial_dataset_size", r.initial_dataset_size},
              {"expert_eval_reward", r.expert_eval_reward},
              {"best_success_rate", r.best_success_rate},
              {"best_mean_reward", r.best_mean_reward}};
}

RunReport run_report_from_json(const json& j) {
  RunReport r;
  try {
    for (const json& it : j.at("iterations")) {
      IterationRecord rec;
      rec.iteration = it.at("iteration").get<int>();
      rec.states_pooled = it.at("states_pooled").get<std::size_t>();
      rec.queries_made = it.at("queries_made").get<std::size_t>();
      rec.dataset_size = it.at("dataset_size").get<std::size_t>();
      rec.validation_success_rate = it.at("validation_success_rate").get<double>();
      rec.mean_eval_reward = it.at("mean_eval_reward").get<double>();
      rec.converged = it.at("converged").get<bool>();
      r.iterations.push_back(rec);
    }
    r.best_iteration = j.at("best_iteration").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.initial_dataset_size = j.at("initial_dataset_size").get<std::size_t>();
    r.expert_eval_reward = j.at("expert_eval_reward").get<double>();
    r.best_success_rate = j.value("best_success_rate", 0.0);
    r.best_mean_reward = j.value("best_mean_reward", 0.0);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run report: ") + e.what());
  }
  return r;
}

}  // namespace dadagger
