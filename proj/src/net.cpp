#include "gemflow/net.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "gemflow/errors.hpp"

namespace gemflow {

namespace {

using Eigen::MatrixXd;

struct Trace {
  std::vector<MatrixXd> activations;  // activations[0] = input, activations[l] = output of layer l
  std::vector<MatrixXd> pre;          // pre-activation of each layer
};

Trace run_forward(const std::vector<LayerParams>& layers, const PointBatch& batch) {
  Trace t;
  t.activations.reserve(layers.size() + 1);
  t.pre.reserve(layers.size());
  t.activations.push_back(batch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    MatrixXd z = t.activations.back() * layers[l].w.transpose();
    z.rowwise() += layers[l].b.transpose();
    t.pre.push_back(z);
    if (l + 1 < layers.size())
      t.activations.push_back(z.cwiseMax(0.0));
    else
      t.activations.push_back(std::move(z));
  }
  return t;
}

MatrixXd relu_mask(const MatrixXd& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

}  // namespace

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("ParamGrads: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].w.rows() != other.layers[l].w.rows() || layers[l].w.cols() != other.layers[l].w.cols())
      throw ShapeError("ParamGrads: layer shape mismatch");
    layers[l].w += other.layers[l].w;
    layers[l].b += other.layers[l].b;
  }
  return *this;
}

ParamGrads& ParamGrads::operator*=(double factor) {
  for (auto& layer : layers) {
    layer.w *= factor;
    layer.b *= factor;
  }
  return *this;
}

bool ParamGrads::finite() const {
  for (const auto& layer : layers)
    if (!layer.w.allFinite() || !layer.b.allFinite()) return false;
  return true;
}

std::vector<double> ParamGrads::flatten() const {
  std::vector<double> out;
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) out.push_back(layer.w(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) out.push_back(layer.b(r));
  }
  return out;
}

Network::Network(std::vector<LayerParams> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.w.rows() == 0 || layer.w.cols() == 0) throw ConfigError("network layer has an empty weight matrix");
    if (layer.b.size() != layer.w.rows()) throw ShapeError("bias length differs from fan_out");
    if (l > 0 && layer.w.cols() != layers_[l - 1].w.rows()) throw ShapeError("consecutive layers are not conformable");
    if (!layer.w.allFinite() || !layer.b.allFinite()) throw NumericFault("network parameters must be finite");
  }
}

Network Network::he_init(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("layer_widths needs at least input and output widths");
  for (int w : widths)
    if (w <= 0) throw ConfigError("layer widths must be positive");
  Rng rng = make_rng(seed, 0x6e6574);
  std::vector<LayerParams> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    std::normal_distribution<double> draw(0.0, std::sqrt(2.0 / fan_in));
    LayerParams layer{MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.w(r, c) = draw(rng);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

std::vector<int> Network::widths() const {
  std::vector<int> out{input_width()};
  for (const auto& layer : layers_) out.push_back(static_cast<int>(layer.w.rows()));
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.w.size() + layer.b.size());
  return n;
}

void Network::require_input(const PointBatch& batch) const {
  if (layers_.empty()) throw ConfigError("network is empty");
  if (batch.cols() != input_width())
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " differs from network input width " +
                     std::to_string(input_width()));
}

void Network::require_scalar_output(const char* what) const {
  if (output_width() != 1) throw ConfigError(std::string(what) + " requires a scalar-output network");
}

Eigen::MatrixXd Network::forward(const PointBatch& batch) const {
  require_input(batch);
  MatrixXd h = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    MatrixXd z = h * layers_[l].w.transpose();
    z.rowwise() += layers_[l].b.transpose();
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Backprop Network::backward(const PointBatch& batch, const Eigen::MatrixXd& upstream) const {
  require_input(batch);
  if (upstream.rows() != batch.rows() || upstream.cols() != output_width())
    throw ShapeError("upstream cotangent must be n x output_width");
  const Trace t = run_forward(layers_, batch);
  Backprop out;
  out.params.layers.resize(layers_.size());
  MatrixXd g = upstream;  // cotangent of the current layer's pre-activation
  for (std::size_t l = layers_.size(); l-- > 0;) {
    out.params.layers[l].w = g.transpose() * t.activations[l];
    out.params.layers[l].b = g.colwise().sum().transpose();
    MatrixXd down = g * layers_[l].w;
    if (l > 0) down.array() *= (t.pre[l - 1].array() > 0.0).cast<double>();
    g = std::move(down);
  }
  out.input = std::move(g);
  return out;
}

Eigen::MatrixXd Network::input_gradient(const PointBatch& batch) const {
  require_scalar_output("input_gradient");
  return backward(batch, MatrixXd::Ones(batch.rows(), 1)).input;
}

std::pair<double, ParamGrads> Network::weighted_input_gradient_sq(const PointBatch& batch,
                                                                  const Eigen::VectorXd& weights) const {
  require_input(batch);
  require_scalar_output("gradient penalty");
  if (weights.size() != batch.rows()) throw ShapeError("penalty weights must have one entry per row");
  const Trace t = run_forward(layers_, batch);
  const std::size_t depth = layers_.size();

  // Cotangents of the pre-activations for a unit output seed, layer by layer.
  std::vector<MatrixXd> seed(depth);
  std::vector<MatrixXd> masks(depth);
  seed[depth - 1] = MatrixXd::Ones(batch.rows(), 1);
  for (std::size_t l = depth - 1; l > 0; --l) {
    masks[l - 1] = relu_mask(t.pre[l - 1]);
    seed[l - 1] = (seed[l] * layers_[l].w).cwiseProduct(masks[l - 1]);
  }
  const MatrixXd grad = seed[0] * layers_[0].w;  // n x m

  const double value = (grad.rowwise().squaredNorm().array() * weights.array()).sum();

  ParamGrads out = zero_grads();
  // Reverse sweep over the linear chain grad = seed_0 W_0, seed_{l-1} = (seed_l W_l) .* mask.
  MatrixXd grad_bar = grad;
  grad_bar.array().colwise() *= 2.0 * weights.array();
  out.layers[0].w = seed[0].transpose() * grad_bar;
  MatrixXd seed_bar = grad_bar * layers_[0].w.transpose();  // n x fan_out_0
  for (std::size_t l = 1; l < depth; ++l) {
    const MatrixXd a = seed_bar.cwiseProduct(masks[l - 1]);
    out.layers[l].w = seed[l].transpose() * a;
    seed_bar = a * layers_[l].w.transpose();
  }
  return {value, std::move(out)};
}

ParamGrads Network::zero_grads() const {
  ParamGrads g;
  for (const auto& layer : layers_)
    g.layers.push_back({MatrixXd::Zero(layer.w.rows(), layer.w.cols()), Eigen::VectorXd::Zero(layer.b.size())});
  return g;
}

bool Network::operator==(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.w.rows() != b.w.rows() || a.w.cols() != b.w.cols() || a.b.size() != b.b.size()) return false;
    if (a.w != b.w || a.b != b.b) return false;
  }
  return true;
}

OptState OptState::for_network(const Network& net, double learning_rate, double decay, double epsilon) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("RMSProp decay must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("RMSProp epsilon must be positive");
  OptState opt;
  opt.learning_rate = learning_rate;
  opt.decay = decay;
  opt.epsilon = epsilon;
  opt.accumulator = net.zero_grads().layers;
  return opt;
}

void rmsprop_step(Network& net, const ParamGrads& grads, OptState& opt) {
  auto& layers = net.mutable_layers();
  if (grads.layers.size() != layers.size()) throw ShapeError("gradient layout does not match network");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.layers[l].w.rows() != layers[l].w.rows() || grads.layers[l].w.cols() != layers[l].w.cols() ||
        grads.layers[l].b.size() != layers[l].b.size())
      throw ShapeError("gradient layout does not match network");
  }
  if (!grads.finite()) throw NumericFault("rmsprop_step: non-finite gradient");
  if (opt.accumulator.empty()) opt.accumulator = net.zero_grads().layers;
  if (opt.accumulator.size() != layers.size()) throw ShapeError("optimizer state does not match network");

  const double keep = opt.decay;
  const double mix = 1.0 - opt.decay;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& acc = opt.accumulator[l];
    const auto& g = grads.layers[l];
    acc.w.array() = keep * acc.w.array() + mix * g.w.array().square();
    acc.b.array() = keep * acc.b.array() + mix * g.b.array().square();
    layers[l].w.array() -= opt.learning_rate * g.w.array() / (acc.w.array() + opt.epsilon).sqrt();
    layers[l].b.array() -= opt.learning_rate * g.b.array() / (acc.b.array() + opt.epsilon).sqrt();
  }
}

namespace {

using nlohmann::json;

json layers_to_json(const std::vector<LayerParams>& layers) {
  json arr = json::array();
  for (const auto& layer : layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.w.size()));
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) w.push_back(layer.w(r, c));
    std::vector<double> b(layer.b.data(), layer.b.data() + layer.b.size());
    arr.push_back({{"w", w}, {"b", b}});
  }
  return arr;
}

std::vector<LayerParams> layers_from_json(const json& arr, const std::vector<int>& widths) {
  if (!arr.is_array() || arr.size() + 1 != widths.size())
    throw IoError("network JSON: layer count does not match widths");
  std::vector<LayerParams> layers;
  for (std::size_t l = 0; l < arr.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const auto w = arr[l].at("w").get<std::vector<double>>();
    const auto b = arr[l].at("b").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out) ||
        b.size() != static_cast<std::size_t>(fan_out))
      throw IoError("network JSON: layer " + std::to_string(l) + " has the wrong number of entries");
    LayerParams layer{MatrixXd(fan_out, fan_in), Eigen::VectorXd(fan_out)};
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.w(r, c) = w[static_cast<std::size_t>(r * fan_in + c)];
    for (int r = 0; r < fan_out; ++r) layer.b(r) = b[static_cast<std::size_t>(r)];
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

std::string network_to_json(const Network& net) {
  json j;
  j["widths"] = net.widths();
  j["layers"] = layers_to_json(net.layers());
  return j.dump();
}

Network network_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto widths = j.at("widths").get<std::vector<int>>();
    for (int w : widths)
      if (w <= 0) throw IoError("network JSON: non-positive width");
    return Network(layers_from_json(j.at("layers"), widths));
  } catch (const json::exception& e) {
    throw IoError(std::string("network JSON: ") + e.what());
  }
}

std::string optstate_to_json(const OptState& opt) {
  json j;
  j["learning_rate"] = opt.learning_rate;
  j["decay"] = opt.decay;
  j["epsilon"] = opt.epsilon;
  std::vector<int> widths;
  if (!opt.accumulator.empty()) {
    widths.push_back(static_cast<int>(opt.accumulator.front().w.cols()));
    for (const auto& layer : opt.accumulator) widths.push_back(static_cast<int>(layer.w.rows()));
  }
  j["widths"] = widths;
  j["accumulator"] = layers_to_json(opt.accumulator);
  return j.dump();
}

OptState optstate_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    OptState opt;
    opt.learning_rate = j.at("learning_rate").get<double>();
    opt.decay = j.at("decay").get<double>();
    opt.epsilon = j.at("epsilon").get<double>();
    const auto widths = j.at("widths").get<std::vector<int>>();
    if (!widths.empty()) opt.accumulator = layers_from_json(j.at("accumulator"), widths);
    return opt;
  } catch (const json::exception& e) {
    throw IoError(std::string("optimizer JSON: ") + e.what());
  }
}

}  // namespace gemflow
