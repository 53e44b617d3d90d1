#include "hedgekit/neural_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hedgekit/errors.hpp"

namespace hedgekit::nn {

namespace {

void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::sigmoid:
      z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      break;
    case Activation::identity:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative expressed through
// the activation output y.
void apply_activation_derivative(Activation a, const Matrix& y, Matrix& grad) {
  switch (a) {
    case Activation::relu:
      grad = (y.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::tanh:
      grad.array() *= 1.0 - y.array().square();
      break;
    case Activation::sigmoid:
      grad.array() *= y.array() * (1.0 - y.array());
      break;
    case Activation::identity:
      break;
  }
}

void apply_mask(Matrix& h, const Matrix& mask) {
  if (mask.cols() == h.cols()) {
    h.array() *= mask.array();
  } else if (mask.cols() == 1) {
    h.array().colwise() *= mask.col(0).array();
  } else {
    throw ShapeError("dropout mask batch size does not match input");
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw FormatError("unknown activation '" + std::string(name) + "'");
}

void Gradients::scale(double factor) {
  for (auto& w : weight) w *= factor;
  for (auto& b : bias) b *= factor;
  input *= factor;
}

DenseNet::DenseNet(std::vector<int> dims, std::vector<Activation> activations,
                   std::vector<double> dropout_rates)
    : dims_(std::move(dims)), dropout_(std::move(dropout_rates)) {
  if (dims_.size() < 2) throw ShapeError("DenseNet needs at least input and output dims");
  for (int d : dims_) {
    if (d <= 0) throw ShapeError("DenseNet layer dims must be positive");
  }
  const std::size_t n_layers = dims_.size() - 1;
  if (activations.size() != n_layers) {
    throw ShapeError("DenseNet needs one activation per layer");
  }
  if (dropout_.empty()) dropout_.assign(n_layers - 1, 0.0);
  if (dropout_.size() != n_layers - 1) {
    throw ShapeError("DenseNet needs one dropout rate per hidden layer");
  }
  for (double p : dropout_) {
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout rate must be in [0, 1)");
  }
  layers_.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers_[l].weight = Matrix::Zero(dims_[l + 1], dims_[l]);
    layers_[l].bias = Vector::Zero(dims_[l + 1]);
    layers_[l].activation = activations[l];
  }
}

void DenseNet::init_uniform(Rng& rng) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        layer.weight(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
    layer.bias.setZero();
  }
}

std::vector<Activation> DenseNet::activations() const {
  std::vector<Activation> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l.activation);
  return out;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    n += static_cast<std::size_t>(dims_[i] + 1) * static_cast<std::size_t>(dims_[i + 1]);
  }
  return n;
}

bool DenseNet::has_dropout() const {
  return std::any_of(dropout_.begin(), dropout_.end(), [](double p) { return p > 0.0; });
}

void DenseNet::check_input(const Matrix& x) const {
  if (layers_.empty()) throw ShapeError("forward on an empty network");
  if (x.rows() != dims_.front()) {
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                     std::to_string(dims_.front()));
  }
}

Matrix DenseNet::forward(const Matrix& x, const DropoutMask* mask) const {
  check_input(x);
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix z = layer.weight * h;
    z.colwise() += layer.bias;
    apply_activation(layer.activation, z);
    if (mask != nullptr && l + 1 < layers_.size()) apply_mask(z, mask->layers[l]);
    h = std::move(z);
  }
  return h;
}

Matrix DenseNet::forward(const Matrix& x, ForwardCache& cache, const DropoutMask* mask) const {
  check_input(x);
  cache.mask = mask;
  cache.layer_inputs.resize(layers_.size());
  cache.layer_outputs.resize(layers_.size());
  cache.layer_inputs[0] = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix z = layer.weight * cache.layer_inputs[l];
    z.colwise() += layer.bias;
    apply_activation(layer.activation, z);
    cache.layer_outputs[l] = z;
    if (l + 1 < layers_.size()) {
      if (mask != nullptr) apply_mask(z, mask->layers[l]);
      cache.layer_inputs[l + 1] = std::move(z);
    }
  }
  return cache.layer_outputs.back();
}

Gradients DenseNet::backward(const ForwardCache& cache, const Matrix& upstream) const {
  if (cache.layer_outputs.size() != layers_.size()) {
    throw ShapeError("backward called without a matching forward cache");
  }
  if (upstream.rows() != dims_.back() || upstream.cols() != cache.layer_outputs.back().cols()) {
    throw ShapeError("upstream gradient shape does not match network output");
  }
  Gradients g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());

  Matrix delta = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    apply_activation_derivative(layer.activation, cache.layer_outputs[l], delta);
    g.weight[l].noalias() = delta * cache.layer_inputs[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    Matrix prev = layer.weight.transpose() * delta;
    if (l > 0 && cache.mask != nullptr) apply_mask(prev, cache.mask->layers[l - 1]);
    delta = std::move(prev);
  }
  g.input = std::move(delta);
  return g;
}

DropoutMask DenseNet::sample_mask(Rng& rng, Eigen::Index batch) const {
  DropoutMask mask;
  mask.layers.resize(dropout_.size());
  for (std::size_t l = 0; l < dropout_.size(); ++l) {
    const double p = dropout_[l];
    Matrix m(dims_[l + 1], batch);
    if (p == 0.0) {
      m.setOnes();
    } else {
      const double keep_scale = 1.0 / (1.0 - p);
      for (Eigen::Index j = 0; j < batch; ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          m(i, j) = rng.bernoulli(p) ? 0.0 : keep_scale;
        }
      }
    }
    mask.layers[l] = std::move(m);
  }
  return mask;
}

bool DenseNet::same_architecture(const DenseNet& other) const {
  return dims_ == other.dims_ && activations() == other.activations();
}

Gradients DenseNet::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

bool DenseNet::operator==(const DenseNet& other) const {
  if (dims_ != other.dims_ || dropout_ != other.dropout_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].activation != other.layers_[l].activation) return false;
    if (layers_[l].weight != other.layers_[l].weight) return false;
    if (layers_[l].bias != other.layers_[l].bias) return false;
  }
  return true;
}

void blend_into(DenseNet& target, const DenseNet& source, double rate) {
  if (!target.same_architecture(source)) {
    throw ShapeError("soft update between networks of different architecture");
  }
  if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("soft update rate must be in [0, 1]");
  auto& t = target.layers();
  const auto& s = source.layers();
  for (std::size_t l = 0; l < t.size(); ++l) {
    if (rate == 1.0) {
      t[l].weight = s[l].weight;
      t[l].bias = s[l].bias;
    } else if (rate > 0.0) {
      t[l].weight = rate * s[l].weight + (1.0 - rate) * t[l].weight;
      t[l].bias = rate * s[l].bias + (1.0 - rate) * t[l].bias;
    }
  }
}

double clip_log_var(double log_var) { return std::clamp(log_var, kMinLogVar, kMaxLogVar); }

NllTerm gaussian_nll(double residual, double log_var) {
  const double lv = clip_log_var(log_var);
  const double precision = std::exp(-lv);
  NllTerm t;
  t.loss = 0.5 * precision * residual * residual + 0.5 * lv;
  t.d_residual = precision * residual;
  t.d_log_var = -0.5 * precision * residual * residual + 0.5;
  return t;
}

AdamState AdamState::for_net(const DenseNet& net, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const auto& l : net.layers()) {
    s.m_weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    s.v_weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    s.m_bias.push_back(Vector::Zero(l.bias.size()));
    s.v_bias.push_back(Vector::Zero(l.bias.size()));
  }
  return s;
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.layers();
  if (grads.weight.size() != layers.size() || grads.bias.size() != layers.size() ||
      state.m_weight.size() != layers.size()) {
    throw ShapeError("adam_step: gradient/state layout does not match network");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.weight[l].rows() != layers[l].weight.rows() ||
        grads.weight[l].cols() != layers[l].weight.cols() ||
        grads.bias[l].size() != layers[l].bias.size()) {
      throw ShapeError("adam_step: gradient shape mismatch in layer " + std::to_string(l));
    }
  }

  const auto& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const double step_size = c.learning_rate / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_bc2 + c.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads.weight[l], state.m_weight[l], state.v_weight[l]);
    update(layers[l].bias, grads.bias[l], state.m_bias[l], state.v_bias[l]);
  }
}

nlohmann::json to_json(const DenseNet& net) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["layer_dims"] = net.layer_dims();
  std::vector<std::string> acts;
  for (auto a : net.activations()) acts.emplace_back(to_string(a));
  doc["activations"] = acts;
  doc["dropout_rates"] = net.dropout_rates();
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) w.push_back(l.weight(i, j));
    }
    weights.push_back(w);
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  doc["weights"] = weights;
  doc["biases"] = biases;
  return doc;
}

DenseNet dense_net_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format_version " + std::to_string(version));
    }
    const auto dims = doc.at("layer_dims").get<std::vector<int>>();
    std::vector<Activation> acts;
    for (const auto& a : doc.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
    DenseNet net(dims, acts, doc.at("dropout_rates").get<std::vector<double>>());
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (weights.size() != net.num_layers() || biases.size() != net.num_layers()) {
      throw FormatError("checkpoint has wrong number of weight/bias arrays");
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto& layer = net.layers()[l];
      const auto w = weights[l].get<std::vector<double>>();
      const auto b = biases[l].get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(layer.weight.size()) ||
          b.size() != static_cast<std::size_t>(layer.bias.size())) {
        throw FormatError("checkpoint layer " + std::to_string(l) + " has wrong size");
      }
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = w[k++];
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = b[static_cast<std::size_t>(i)];
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network checkpoint: ") + e.what());
  }
}

}  // namespace hedgekit::nn
