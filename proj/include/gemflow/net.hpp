#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gemflow/types.hpp"

namespace gemflow {

struct LayerParams {
  Eigen::MatrixXd w;  // fan_out x fan_in
  Eigen::VectorXd b;  // fan_out
};

/// Gradients with the same layout as a Network's parameters.
struct ParamGrads {
  std::vector<LayerParams> layers;

  ParamGrads& operator+=(const ParamGrads& other);
  ParamGrads& operator*=(double factor);
  bool finite() const;
  /// Flattened view in (w row-major, b) order per layer; used by tests.
  std::vector<double> flatten() const;
};

/// Result of a reverse-mode sweep.
struct Backprop {
  ParamGrads params;
  Eigen::MatrixXd input;  // n x m
};

/// Fully-connected network: ReLU on hidden layers, identity on the output.
class Network {
 public:
  Network() = default;
  /// Validates conformability and finiteness of the given layers.
  explicit Network(std::vector<LayerParams> layers);

  /// He (fan-in) Gaussian weights and zero biases; deterministic given seed.
  static Network he_init(const std::vector<int>& widths, std::uint64_t seed);

  std::vector<int> widths() const;
  int input_width() const { return static_cast<int>(layers_.front().w.cols()); }
  int output_width() const { return static_cast<int>(layers_.back().w.rows()); }
  std::size_t depth() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<LayerParams>& layers() const { return layers_; }
  std::vector<LayerParams>& mutable_layers() { return layers_; }

  Eigen::MatrixXd forward(const PointBatch& batch) const;

  /// Reverse-mode gradients of sum_i <upstream_i, output_i> with respect to all
  /// parameters and all inputs. The ReLU subgradient at zero is zero.
  Backprop backward(const PointBatch& batch, const Eigen::MatrixXd& upstream) const;

  /// Rows are grad_x R(x_i) for a scalar-output network.
  Eigen::MatrixXd input_gradient(const PointBatch& batch) const;

  /// Value sum_i c_i ||grad_x R(x_i)||^2 and its exact parameter gradient
  /// (second-order path through the input gradient). ReLU masks are locally
  /// constant, so bias gradients vanish almost everywhere.
  std::pair<double, ParamGrads> weighted_input_gradient_sq(const PointBatch& batch,
                                                           const Eigen::VectorXd& weights) const;

  ParamGrads zero_grads() const;

  bool operator==(const Network& other) const;

 private:
  void require_input(const PointBatch& batch) const;
  void require_scalar_output(const char* what) const;

  std::vector<LayerParams> layers_;
};

inline Network network_init(const std::vector<int>& widths, std::uint64_t seed) {
  return Network::he_init(widths, seed);
}

/// RMSProp state: squared-gradient running average per parameter.
struct OptState {
  double learning_rate = 5e-4;
  double decay = 0.9;
  double epsilon = 1e-8;
  std::vector<LayerParams> accumulator;  // empty until first step

  static OptState for_network(const Network& net, double learning_rate, double decay = 0.9,
                              double epsilon = 1e-8);
};

/// acc <- decay*acc + (1-decay)*g^2; p <- p - lr*g/sqrt(acc+eps).
/// Non-finite gradients throw NumericFault and leave net and opt untouched.
void rmsprop_step(Network& net, const ParamGrads& grads, OptState& opt);

/// {"widths":[...], "layers":[{"w":[row-major], "b":[...]}, ...]}
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

std::string optstate_to_json(const OptState& opt);
OptState optstate_from_json(const std::string& text);

}  // namespace gemflow
