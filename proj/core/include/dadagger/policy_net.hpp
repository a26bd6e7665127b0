#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dadagger/types.hpp"

namespace dadagger {

enum class Activation { identity, tanh, relu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Shape and regularisation of a fully-connected policy network.
///
/// Dropout is applied after every hidden activation (never on the input or on
/// the output head) and is of the inverted kind: surviving units are scaled by
/// 1/(1-p) in masked passes, so the deterministic pass needs no rescaling.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  double dropout_rate = 0.1;
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::tanh;

  /// Throws ConfigError when the spec cannot describe a network.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  bool operator==(const MlpSpec&) const = default;
};

/// Weights of one affine layer. `weights` is row-major, out x in.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double w(std::size_t row, std::size_t col) const {
    return weights[row * in + col];
  }

  bool operator==(const DenseLayer&) const = default;
};

struct PolicyParams {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  bool all_finite() const;

  bool operator==(const PolicyParams&) const = default;
};

/// Same layout as PolicyParams::layers, holding dL/dθ.
struct Gradient {
  std::vector<DenseLayer> layers;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradient grad;
};

struct TrainConfig {
  int epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  PolicyParams params;
  std::vector<double> epoch_losses;
};

/// Scaled-uniform init, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases
/// are zero. Deterministic in (spec, seed).
PolicyParams init_params(const MlpSpec& spec, std::uint64_t seed);

/// Deterministic pass with dropout disabled.
Action forward(const PolicyParams& params, std::span<const double> obs);

/// `m` passes through the network, each with an independent dropout mask.
/// With dropout_rate 0 every sample is bit-identical to forward().
std::vector<Action> forward_mc(const PolicyParams& params,
                               std::span<const double> obs, std::size_t m,
                               std::uint64_t rng_seed);

/// Mean over the batch of the squared error summed across action dimensions,
/// and its exact gradient for the dropout masks drawn from `dropout_seed`.
/// Masks depend only on the seed and the batch layout, never on the weights,
/// so finite differences against a fixed seed see the same masks.
LossAndGrad loss_and_grad(const PolicyParams& params,
                          std::span<const Sample> batch,
                          std::uint64_t dropout_seed);

/// Mini-batch SGD on the MSE objective with dropout active. The input params
/// are left untouched.
TrainResult train_with_history(const PolicyParams& params,
                               std::span<const Sample> data,
                               const TrainConfig& cfg);

PolicyParams train(const PolicyParams& params, std::span<const Sample> data,
                   const TrainConfig& cfg);

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

/// {"spec": {...}, "weights": [[row-major per layer]], "biases": [[...]]}
nlohmann::json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& j);

void save_params(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_params(const std::filesystem::path& path);

}  // namespace dadagger
