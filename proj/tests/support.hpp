#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gemflow/net.hpp"
#include "gemflow/types.hpp"

namespace gemflow::testing {

inline constexpr double kFdStep = 1e-4;
inline constexpr double kFdTol = 1e-5;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Smallest |pre-activation| over all hidden units and rows.
inline double min_hidden_preactivation(const Network& net, const PointBatch& batch) {
  Eigen::MatrixXd h = batch;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    const auto& layer = net.layers()[l];
    Eigen::MatrixXd z = (h * layer.w.transpose()).rowwise() + layer.b.transpose();
    smallest = std::min(smallest, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return smallest;
}

/// Gaussian batch redrawn until no hidden unit sits within `margin` of its kink.
inline PointBatch kink_free_batch(const Network& net, Eigen::Index n, Rng& rng, double margin = 1e-2) {
  std::normal_distribution<double> z(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    PointBatch b(n, net.input_width());
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = z(rng);
    if (net.depth() == 1 || min_hidden_preactivation(net, b) > margin) return b;
  }
  throw std::runtime_error("could not draw a kink-free batch");
}

/// Random network with nonzero biases so bias gradients are exercised.
inline Network random_net(const std::vector<int>& widths, std::uint64_t seed) {
  Network net = Network::he_init(widths, seed);
  Rng rng = make_rng(seed, 99);
  std::normal_distribution<double> z(0.0, 0.3);
  for (auto& layer : net.mutable_layers())
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = z(rng);
  return net;
}

/// Central differences of `f` with respect to every parameter, in ParamGrads::flatten order.
inline std::vector<double> fd_param_grad(const Network& net, const std::function<double(const Network&)>& f,
                                         double h = kFdStep) {
  std::vector<double> out;
  Network probe = net;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto& layer = probe.mutable_layers()[l];
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
        const double keep = layer.w(r, c);
        layer.w(r, c) = keep + h;
        const double up = f(probe);
        layer.w(r, c) = keep - h;
        const double down = f(probe);
        layer.w(r, c) = keep;
        out.push_back((up - down) / (2 * h));
      }
    }
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) {
      const double keep = layer.b(r);
      layer.b(r) = keep + h;
      const double up = f(probe);
      layer.b(r) = keep - h;
      const double down = f(probe);
      layer.b(r) = keep;
      out.push_back((up - down) / (2 * h));
    }
  }
  return out;
}

/// Central differences of a scalar function of one point.
inline Vector fd_point_grad(const std::function<double(const Vector&)>& f, const Vector& x, double h = kFdStep) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector up = x;
    Vector down = x;
    up(j) += h;
    down(j) -= h;
    g(j) = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

inline double scalar_output(const Network& net, const Vector& x) {
  return net.forward(x.transpose())(0, 0);
}

/// Largest relative error between two equally long gradient vectors.
inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

}  // namespace gemflow::testing
