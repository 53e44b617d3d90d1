#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "hedgekit/rng.hpp"

// A small dense-network engine: forward/backward passes over column batches,
// inverted dropout with explicit masks, Adam, and the heteroscedastic Gaussian
// NLL. Sized for the few-thousand-parameter actor/critic nets used here.

namespace hedgekit::nn {

using Matrix = Eigen::MatrixXd;  // features x batch
using Vector = Eigen::VectorXd;

enum class Activation { relu, tanh, sigmoid, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
  Activation activation = Activation::identity;
};

/// One multiplicative mask per hidden layer, units x batch, with entries in
/// {0, 1/(1-p)}. A layer with p = 0 gets an all-ones mask.
struct DropoutMask {
  std::vector<Matrix> layers;
  std::uint64_t seed = 0;
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;  // dL/dx, in x batch

  void scale(double factor);
};

/// Activations retained by a training forward pass.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;   // input of layer l (after dropout of l-1)
  std::vector<Matrix> layer_outputs;  // activation output of layer l (before dropout)
  const DropoutMask* mask = nullptr;
};

class DenseNet {
public:
  DenseNet() = default;

  /// `dims` = {in, h1, ..., out}; one activation per layer; one dropout rate
  /// per hidden layer (dims.size() - 2 entries, may be empty for "none").
  DenseNet(std::vector<int> dims, std::vector<Activation> activations,
           std::vector<double> dropout_rates = {});

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  void init_uniform(Rng& rng);

  const std::vector<int>& layer_dims() const { return dims_; }
  const std::vector<double>& dropout_rates() const { return dropout_; }
  std::vector<Activation> activations() const;
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t parameter_count() const;
  bool has_dropout() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Deterministic when `mask` is null (no dropout).
  Matrix forward(const Matrix& x, const DropoutMask* mask = nullptr) const;
  Matrix forward(const Matrix& x, ForwardCache& cache, const DropoutMask* mask = nullptr) const;

  /// Gradients of sum over the batch of <upstream, output>.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream) const;

  DropoutMask sample_mask(Rng& rng, Eigen::Index batch) const;

  /// Same dims and activations (dropout rates may differ).
  bool same_architecture(const DenseNet& other) const;

  Gradients zero_gradients() const;

  bool operator==(const DenseNet& other) const;

private:
  void check_input(const Matrix& x) const;

  std::vector<int> dims_;
  std::vector<double> dropout_;
  std::vector<DenseLayer> layers_;
};

/// theta_target <- rate * theta_source + (1 - rate) * theta_target.
/// Throws ShapeError on architecture mismatch.
void blend_into(DenseNet& target, const DenseNet& source, double rate);

// --- Gaussian negative log-likelihood --------------------------------------

inline constexpr double kMinLogVar = -10.0;
inline constexpr double kMaxLogVar = 10.0;

double clip_log_var(double log_var);

struct NllTerm {
  double loss = 0.0;
  double d_residual = 0.0;  // dL/d residual
  double d_log_var = 0.0;   // dL/d log_var at the clipped value
};

/// L = 0.5 exp(-lv) r^2 + 0.5 lv with lv clipped to [kMinLogVar, kMaxLogVar].
NllTerm gaussian_nll(double residual, double log_var);

// --- Adam -------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m_weight, v_weight;
  std::vector<Vector> m_bias, v_bias;
  std::int64_t step = 0;

  static AdamState for_net(const DenseNet& net, const AdamConfig& config);
};

/// Bias-corrected Adam update in place. Throws ShapeError if the gradient or
/// state layout does not mirror the network.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

// --- Checkpoints ------------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

/// {format_version, layer_dims, activations, dropout_rates, weights, biases};
/// weights are row-major (out x in) per layer.
nlohmann::json to_json(const DenseNet& net);
DenseNet dense_net_from_json(const nlohmann::json& doc);

}  // namespace hedgekit::nn
