#include "dadagger/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dadagger/error.hpp"
#include "dadagger/random.hpp"

namespace dadagger {

using nlohmann::json;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("mlp.layer_sizes needs at least an input and an output size");
  }
  for (std::size_t n : layer_sizes) {
    if (n < 1) throw ConfigError("mlp.layer_sizes entries must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("mlp.dropout_rate must lie in [0, 1)");
  }
  if (output_activation == Activation::relu) {
    throw ConfigError("mlp.output_activation must be identity or tanh");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be a finite non-negative number");
  }
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

bool PolicyParams::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers.begin(), layers.end(), [&](const DenseLayer& l) {
    return std::all_of(l.weights.begin(), l.weights.end(), finite) &&
           std::all_of(l.biases.begin(), l.biases.end(), finite);
  });
}

PolicyParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  PolicyParams p;
  p.spec = spec;
  Rng rng(mix_seed({seed, 0x1417}));
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    DenseLayer layer;
    layer.in = spec.layer_sizes[l];
    layer.out = spec.layer_sizes[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = rng.uniform(-a, a);
    layer.biases.assign(layer.out, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::identity: break;
  }
  return z;
}

// Derivative expressed through the pre-activation z and the activation t.
double activate_grad(Activation a, double z, double t) {
  switch (a) {
    case Activation::tanh: return 1.0 - t * t;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::identity: break;
  }
  return 1.0;
}

// Per-pass buffers. act[0] is the input; act[l + 1] is the output of layer l
// after dropout. pre[l] / z[l] hold the activation before dropout and the
// pre-activation of layer l. scale[l] is the dropout multiplier per unit of
// hidden layer l, empty when the pass runs without dropout.
struct Pass {
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> scale;
  std::vector<std::vector<double>> delta;

  explicit Pass(const MlpSpec& spec) {
    const std::size_t L = spec.num_layers();
    act.resize(L + 1);
    pre.resize(L);
    z.resize(L);
    scale.resize(L);
    delta.resize(L);
    act[0].resize(spec.layer_sizes[0]);
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t n = spec.layer_sizes[l + 1];
      act[l + 1].resize(n);
      pre[l].resize(n);
      z[l].resize(n);
      delta[l].resize(n);
    }
  }
};

void check_obs(const PolicyParams& params, std::size_t n) {
  if (params.layers.empty()) throw InputError("policy has no layers");
  if (n != params.spec.input_dim()) {
    throw InputError("observation has " + std::to_string(n) +
                     " components, network expects " +
                     std::to_string(params.spec.input_dim()));
  }
}

// Draws one dropout mask per hidden layer. The number of draws depends only on
// the layer sizes, keeping masks independent of the weights.
void draw_masks(const PolicyParams& params, Pass& pass, Rng* rng) {
  const std::size_t L = params.layers.size();
  const double p = params.spec.dropout_rate;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    auto& s = pass.scale[l];
    if (rng == nullptr || p == 0.0) {
      s.clear();
      continue;
    }
    s.resize(params.layers[l].out);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& v : s) v = rng->uniform() < p ? 0.0 : keep_scale;
  }
  pass.scale[L - 1].clear();
}

void run_forward(const PolicyParams& params, std::span<const double> obs,
                 Pass& pass) {
  const std::size_t L = params.layers.size();
  std::copy(obs.begin(), obs.end(), pass.act[0].begin());
  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = params.layers[l];
    const bool hidden = l + 1 < L;
    const Activation fn =
        hidden ? params.spec.hidden_activation : params.spec.output_activation;
    const std::vector<double>& in = pass.act[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* row = &layer.weights[r * layer.in];
      double acc = layer.biases[r];
      for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * in[c];
      pass.z[l][r] = acc;
      const double t = activate(fn, acc);
      pass.pre[l][r] = t;
      pass.act[l + 1][r] = pass.scale[l].empty() ? t : t * pass.scale[l][r];
    }
  }
}

// Accumulates d(loss)/dθ for one sample into grad; `coef` is the weight of the
// sample's squared error in the loss. Returns the sample's squared error.
double backprop_sample(const PolicyParams& params, std::span<const double> target,
                       double coef, Pass& pass, Gradient& grad) {
  const std::size_t L = params.layers.size();
  const auto& out = pass.act[L];
  if (target.size() != out.size()) {
    throw InputError("action has " + std::to_string(target.size()) +
                     " components, network emits " + std::to_string(out.size()));
  }
  double sq = 0.0;
  {
    auto& d = pass.delta[L - 1];
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double err = out[k] - target[k];
      sq += err * err;
      d[k] = 2.0 * coef * err *
             activate_grad(params.spec.output_activation, pass.z[L - 1][k],
                           pass.pre[L - 1][k]);
    }
  }
  for (std::size_t l = L; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    DenseLayer& g = grad.layers[l];
    const auto& d = pass.delta[l];
    const auto& in = pass.act[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double dr = d[r];
      if (dr == 0.0) continue;
      double* grow = &g.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) grow[c] += dr * in[c];
      g.biases[r] += dr;
    }
    if (l == 0) break;
    // Propagate into hidden layer l-1: through the weights, the dropout scale
    // and the hidden activation.
    auto& dprev = pass.delta[l - 1];
    std::fill(dprev.begin(), dprev.end(), 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double dr = d[r];
      if (dr == 0.0) continue;
      const double* row = &layer.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) dprev[c] += row[c] * dr;
    }
    const auto& s = pass.scale[l - 1];
    for (std::size_t c = 0; c < dprev.size(); ++c) {
      double v = dprev[c];
      if (!s.empty()) v *= s[c];
      dprev[c] = v * activate_grad(params.spec.hidden_activation,
                                   pass.z[l - 1][c], pass.pre[l - 1][c]);
    }
  }
  return sq;
}

Gradient zero_gradient(const PolicyParams& params) {
  Gradient g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    DenseLayer z;
    z.in = l.in;
    z.out = l.out;
    z.weights.assign(l.weights.size(), 0.0);
    z.biases.assign(l.biases.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

void reset_gradient(Gradient& g) {
  for (auto& l : g.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.biases.begin(), l.biases.end(), 0.0);
  }
}

// Loss over data[idx[0..n)] with gradient accumulated into grad (which must be
// zeroed by the caller).
double batch_loss_grad(const PolicyParams& params, std::span<const Sample> data,
                       std::span<const std::size_t> idx, std::uint64_t dropout_seed,
                       Pass& pass, Gradient& grad) {
  Rng rng(dropout_seed);
  const double coef = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (std::size_t i : idx) {
    const Sample& s = data[i];
    check_obs(params, s.obs.size());
    draw_masks(params, pass, &rng);
    run_forward(params, s.obs, pass);
    total += backprop_sample(params, s.act, coef, pass, grad);
  }
  return total * coef;
}

}  // namespace

Action forward(const PolicyParams& params, std::span<const double> obs) {
  check_obs(params, obs.size());
  Pass pass(params.spec);
  draw_masks(params, pass, nullptr);
  run_forward(params, obs, pass);
  return pass.act.back();
}

std::vector<Action> forward_mc(const PolicyParams& params,
                               std::span<const double> obs, std::size_t m,
                               std::uint64_t rng_seed) {
  check_obs(params, obs.size());
  if (m < 1) throw InputError("forward_mc needs m >= 1");
  Pass pass(params.spec);
  Rng rng(rng_seed);
  std::vector<Action> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    draw_masks(params, pass, &rng);
    run_forward(params, obs, pass);
    out.push_back(pass.act.back());
  }
  return out;
}

LossAndGrad loss_and_grad(const PolicyParams& params,
                          std::span<const Sample> batch,
                          std::uint64_t dropout_seed) {
  if (batch.empty()) throw InputError("loss_and_grad needs a non-empty batch");
  LossAndGrad out;
  out.grad = zero_gradient(params);
  Pass pass(params.spec);
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  out.loss = batch_loss_grad(params, batch, idx, dropout_seed, pass, out.grad);
  return out;
}

TrainResult train_with_history(const PolicyParams& params,
                               std::span<const Sample> data,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw TrainingError("cannot train on an empty dataset");
  for (const Sample& s : data) {
    if (s.obs.size() != params.spec.input_dim() ||
        s.act.size() != params.spec.output_dim()) {
      throw InputError("dataset dimensions do not match the network");
    }
  }

  TrainResult result{params, {}};
  PolicyParams& p = result.params;
  Gradient grad = zero_gradient(p);
  Pass pass(p.spec);
  Rng shuffle_rng(mix_seed({cfg.seed, 0x5f}));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double lr = cfg.learning_rate;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_no) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      reset_gradient(grad);
      const double loss = batch_loss_grad(
          p, data, idx,
          mix_seed({cfg.seed, 0xd7, static_cast<std::uint64_t>(epoch), batch_no}),
          pass, grad);
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, "training diverged: non-finite loss in epoch " +
                                         std::to_string(epoch + 1));
      }
      epoch_loss += loss * static_cast<double>(n);
      if (lr == 0.0) continue;
      for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& w = p.layers[l].weights;
        auto& b = p.layers[l].biases;
        const auto& gw = grad.layers[l].weights;
        const auto& gb = grad.layers[l].biases;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * gw[k];
        for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss) || !p.all_finite()) {
      throw DivergenceError(epoch, "training diverged: non-finite loss in epoch " +
                                       std::to_string(epoch + 1));
    }
    result.epoch_losses.push_back(epoch_loss);
  }
  return result;
}

PolicyParams train(const PolicyParams& params, std::span<const Sample> data,
                   const TrainConfig& cfg) {
  return train_with_history(params, data, cfg).params;
}

json spec_to_json(const MlpSpec& spec) {
  return json{{"layer_sizes", spec.layer_sizes},
              {"dropout_rate", spec.dropout_rate},
              {"hidden_activation", to_string(spec.hidden_activation)},
              {"output_activation", to_string(spec.output_activation)}};
}

MlpSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("mlp must be a JSON object");
  MlpSpec s;
  try {
    if (j.contains("layer_sizes")) {
      for (const auto& v : j.at("layer_sizes")) {
        if (!v.is_number_integer() || v.get<long long>() < 1) {
          throw ConfigError("mlp.layer_sizes entries must be positive integers");
        }
        s.layer_sizes.push_back(v.get<std::size_t>());
      }
    }
    if (j.contains("dropout_rate")) s.dropout_rate = j.at("dropout_rate").get<double>();
    if (j.contains("hidden_activation")) {
      s.hidden_activation =
          activation_from_string(j.at("hidden_activation").get<std::string>());
    }
    if (j.contains("output_activation")) {
      s.output_activation =
          activation_from_string(j.at("output_activation").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed mlp spec: ") + e.what());
  }
  return s;
}

json params_to_json(const PolicyParams& params) {
  json weights = json::array();
  json biases = json::array();
  for (const auto& l : params.layers) {
    weights.push_back(l.weights);
    biases.push_back(l.biases);
  }
  return json{{"spec", spec_to_json(params.spec)},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)}};
}

PolicyParams params_from_json(const json& j) {
  PolicyParams p;
  try {
    p.spec = spec_from_json(j.at("spec"));
    p.spec.validate();
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() != p.spec.num_layers() || bs.size() != p.spec.num_layers()) {
      throw InputError("policy JSON layer count does not match its spec");
    }
    for (std::size_t l = 0; l < p.spec.num_layers(); ++l) {
      DenseLayer layer;
      layer.in = p.spec.layer_sizes[l];
      layer.out = p.spec.layer_sizes[l + 1];
      layer.weights = ws[l].get<std::vector<double>>();
      layer.biases = bs[l].get<std::vector<double>>();
      if (layer.weights.size() != layer.in * layer.out ||
          layer.biases.size() != layer.out) {
        throw InputError("policy JSON layer " + std::to_string(l) +
                         " has the wrong shape");
      }
      p.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed policy JSON: ") + e.what());
  }
  return p;
}

void save_params(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << params_to_json(params).dump(1) << '\n';
}

PolicyParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace dadagger
