#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "gemflow/errors.hpp"
#include "gemflow/net.hpp"
#include "support.hpp"

using namespace gemflow;
using namespace gemflow::testing;

namespace {

Network affine(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) { return Network({LayerParams{w, b}}); }

}  // namespace

TEST(NetworkInit, TableShapedWidths) {
  const Network net = network_init({2, 64, 64, 64, 1}, 7);
  EXPECT_EQ(net.widths(), (std::vector<int>{2, 64, 64, 64, 1}));
  EXPECT_EQ(net.depth(), 4u);
  EXPECT_EQ(net.parameter_count(), 2u * 64 + 64 + 64 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
  for (const auto& layer : net.layers()) EXPECT_TRUE(layer.b.isZero());
}

TEST(NetworkInit, SingleLinearLayerIsZeroAtOrigin) {
  const Network net = network_init({2, 1}, 123);
  EXPECT_EQ(net.forward(Eigen::RowVector2d(0, 0))(0, 0), 0.0);
}

TEST(NetworkInit, DeterministicGivenSeed) {
  EXPECT_TRUE(network_init({1, 2, 1}, 1) == network_init({1, 2, 1}, 1));
  EXPECT_FALSE(network_init({1, 2, 1}, 1) == network_init({1, 2, 1}, 2));
}

TEST(NetworkInit, HeScaleMatchesFanIn) {
  const Network net = network_init({400, 300, 1}, 5);
  const auto& w = net.layers()[0].w;
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 2.0 / 400, 0.05 * 2.0 / 400);
}

TEST(NetworkInit, RejectsBadWidths) {
  EXPECT_THROW(network_init({}, 0), ConfigError);
  EXPECT_THROW(network_init({3}, 0), ConfigError);
  EXPECT_THROW(network_init({2, 0, 1}, 0), ConfigError);
  EXPECT_THROW(network_init({2, -4, 1}, 0), ConfigError);
}

TEST(NetworkInit, RejectsNonConformableOrNonFiniteLayers) {
  LayerParams a{Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3)};
  LayerParams b{Eigen::MatrixXd::Ones(1, 4), Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(Network({a, b}), ShapeError);
  LayerParams c{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(2)};
  EXPECT_THROW(Network({c}), ShapeError);
  a.w(0, 0) = std::nan("");
  EXPECT_THROW(Network({a}), NumericFault);
}

TEST(Forward, IdentityLayer) {
  const Network net = affine(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
  const Eigen::RowVector2d x(0.3, -7.25);
  EXPECT_EQ(net.forward(x), Eigen::MatrixXd(x));
}

TEST(Forward, HandAffine) {
  const Network net = affine((Eigen::MatrixXd(1, 2) << 1, -1).finished(), Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_EQ(net.forward(Eigen::RowVector2d(2, 1))(0, 0), 1.5);
}

TEST(Forward, HandUnrolledTwoLayer) {
  Eigen::MatrixXd w1(3, 2);
  w1 << 1.0, -2.0, 0.5, 0.25, -1.0, 1.0;
  const Eigen::Vector3d b1(0.1, -0.2, 0.3);
  Eigen::MatrixXd w2(1, 3);
  w2 << 2.0, -1.0, 0.5;
  const Eigen::VectorXd b2 = Eigen::VectorXd::Constant(1, -0.4);
  const Network net({LayerParams{w1, b1}, LayerParams{w2, b2}});
  const double x1 = 0.7;
  const double x2 = -0.3;
  const double h1 = std::max(0.0, 1.0 * x1 - 2.0 * x2 + 0.1);
  const double h2 = std::max(0.0, 0.5 * x1 + 0.25 * x2 - 0.2);
  const double h3 = std::max(0.0, -1.0 * x1 + 1.0 * x2 + 0.3);
  const double expected = 2.0 * h1 - 1.0 * h2 + 0.5 * h3 - 0.4;
  EXPECT_DOUBLE_EQ(net.forward(Eigen::RowVector2d(x1, x2))(0, 0), expected);
}

TEST(Forward, WidthMismatchThrows) {
  const Network net = network_init({2, 4, 1}, 0);
  EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(3, 3)), ShapeError);
}

TEST(Forward, BitwiseDeterministic) {
  const Network net = random_net({2, 16, 16, 1}, 3);
  Rng rng = make_rng(3);
  const PointBatch x = kink_free_batch(net, 20, rng);
  const Eigen::MatrixXd a = net.forward(x);
  const Eigen::MatrixXd b = net.forward(x);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
}

TEST(Backward, LinearInputGradientIsTransposedWeights) {
  Eigen::MatrixXd w(2, 3);
  w << 1, 2, 3, -4, 5, -6;
  const Network net = affine(w, Eigen::Vector2d(0.5, 0.5));
  const PointBatch x = PointBatch::Random(4, 3);
  const Backprop bp = net.backward(x, Eigen::MatrixXd::Ones(4, 2));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(Eigen::RowVectorXd(bp.input.row(i)), Eigen::RowVectorXd((w.transpose() * Eigen::Vector2d::Ones()).transpose()));
}

TEST(Backward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = random_net({3, 6, 5, 2}, seed);
    Rng rng = make_rng(seed, 1);
    const PointBatch x = kink_free_batch(net, 5, rng);
    const Eigen::MatrixXd up = Eigen::MatrixXd::Random(5, 2);
    const Backprop bp = net.backward(x, up);
    auto objective = [&](const Network& n) { return (n.forward(x).array() * up.array()).sum(); };
    EXPECT_LT(max_rel_err(bp.params.flatten(), fd_param_grad(net, objective)), kFdTol) << "seed " << seed;
  }
}

TEST(Backward, InputGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = random_net({3, 6, 5, 2}, seed);
    Rng rng = make_rng(seed, 2);
    const PointBatch x = kink_free_batch(net, 4, rng);
    const Eigen::MatrixXd up = Eigen::MatrixXd::Random(4, 2);
    const Backprop bp = net.backward(x, up);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      auto f = [&](const Vector& v) {
        return (net.forward(v.transpose()).array() * up.row(i).array()).sum();
      };
      const Vector fd = fd_point_grad(f, x.row(i).transpose());
      for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_LT(rel_err(bp.input(i, j), fd(j)), kFdTol);
    }
  }
}

TEST(Backward, DuplicatedRowsGetIdenticalGradients) {
  const Network net = random_net({2, 8, 1}, 11);
  Rng rng = make_rng(11);
  const PointBatch x = kink_free_batch(net, 3, rng);
  PointBatch doubled(6, 2);
  doubled << x, x;
  const Eigen::MatrixXd out = net.forward(doubled);
  const Eigen::MatrixXd g = net.input_gradient(doubled);
  EXPECT_EQ(out.topRows(3), out.bottomRows(3));
  EXPECT_EQ(g.topRows(3), g.bottomRows(3));
  EXPECT_EQ(out.topRows(3), net.forward(x));
  EXPECT_EQ(g.topRows(3), net.input_gradient(x));
}

TEST(Backward, ShapeMismatchThrows) {
  const Network net = network_init({2, 4, 1}, 0);
  EXPECT_THROW(net.backward(PointBatch::Zero(3, 2), Eigen::MatrixXd::Zero(2, 1)), ShapeError);
}

TEST(InputGradient, AffineRows) {
  const Network net = affine((Eigen::MatrixXd(1, 2) << 1, 2).finished(), Eigen::VectorXd::Zero(1));
  const Eigen::MatrixXd g = net.input_gradient(PointBatch::Random(5, 2));
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_EQ(g(i, 0), 1.0);
    EXPECT_EQ(g(i, 1), 2.0);
  }
}

TEST(InputGradient, ConstantNetIsZero) {
  Network net = random_net({2, 8, 1}, 4);
  net.mutable_layers().back().w.setZero();
  EXPECT_TRUE(net.input_gradient(PointBatch::Random(6, 2)).isZero());
}

TEST(InputGradient, RandomNetMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = random_net({2, 10, 10, 1}, seed);
    Rng rng = make_rng(seed, 3);
    const PointBatch x = kink_free_batch(net, 6, rng);
    const Eigen::MatrixXd g = net.input_gradient(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vector fd = fd_point_grad([&](const Vector& v) { return scalar_output(net, v); }, x.row(i).transpose());
      for (Eigen::Index j = 0; j < 2; ++j) EXPECT_LT(rel_err(g(i, j), fd(j)), kFdTol);
    }
  }
}

TEST(InputGradient, NonScalarOutputThrows) {
  EXPECT_THROW(network_init({2, 3}, 0).input_gradient(PointBatch::Zero(1, 2)), ConfigError);
}

TEST(WeightedInputGradientSq, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network net = random_net({2, 7, 6, 1}, seed);
    Rng rng = make_rng(seed, 4);
    const PointBatch x = kink_free_batch(net, 5, rng);
    const Vector c = Vector::Random(5).cwiseAbs();
    auto value = [&](const Network& n) {
      return (n.input_gradient(x).rowwise().squaredNorm().array() * c.array()).sum();
    };
    const auto [v, grads] = net.weighted_input_gradient_sq(x, c);
    EXPECT_NEAR(v, value(net), 1e-12 * std::max(1.0, std::abs(v)));
    EXPECT_LT(max_rel_err(grads.flatten(), fd_param_grad(net, value)), kFdTol);
  }
}

TEST(RmsProp, ZeroGradientDecaysAccumulatorOnly) {
  Network net = random_net({2, 3, 1}, 2);
  const Network before = net;
  OptState opt = OptState::for_network(net, 0.1);
  ParamGrads g = net.zero_grads();
  for (auto& l : g.layers) l.w.setOnes();
  rmsprop_step(net, g, opt);
  const Eigen::MatrixXd acc_w = opt.accumulator[0].w;
  net = before;
  rmsprop_step(net, net.zero_grads(), opt);
  EXPECT_TRUE(net == before);
  EXPECT_TRUE(opt.accumulator[0].w.isApprox(0.9 * acc_w));
}

TEST(RmsProp, OneStepHandComputation) {
  Network net = affine(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1));
  OptState opt = OptState::for_network(net, 0.1, 0.9, 1e-8);
  ParamGrads g = net.zero_grads();
  g.layers[0].w(0, 0) = 1.0;
  rmsprop_step(net, g, opt);
  EXPECT_DOUBLE_EQ(opt.accumulator[0].w(0, 0), 0.1);
  EXPECT_DOUBLE_EQ(net.layers()[0].w(0, 0), -0.1 * 1.0 / std::sqrt(0.1 + 1e-8));
  EXPECT_EQ(net.layers()[0].b(0), 0.0);
}

TEST(RmsProp, ConstantGradientMovesMonotonically) {
  Network net = affine(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1));
  OptState opt = OptState::for_network(net, 0.01);
  ParamGrads g = net.zero_grads();
  g.layers[0].w(0, 0) = 3.0;
  double last = 0.0;
  for (int i = 0; i < 2; ++i) {
    rmsprop_step(net, g, opt);
    EXPECT_LT(net.layers()[0].w(0, 0), last);
    last = net.layers()[0].w(0, 0);
  }
}

TEST(RmsProp, NonFiniteGradientRejectedAndStateUntouched) {
  Network net = random_net({2, 3, 1}, 8);
  OptState opt = OptState::for_network(net, 0.1);
  ParamGrads g = net.zero_grads();
  g.layers[0].w.setOnes();
  rmsprop_step(net, g, opt);
  const Network net_before = net;
  const auto acc_before = opt.accumulator;
  g.layers[1].b(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(rmsprop_step(net, g, opt), NumericFault);
  EXPECT_TRUE(net == net_before);
  for (std::size_t l = 0; l < acc_before.size(); ++l) EXPECT_EQ(opt.accumulator[l].w, acc_before[l].w);
}

TEST(RmsProp, AccumulatorStaysNonnegativeAndFinite) {
  Network net = random_net({2, 4, 1}, 9);
  OptState opt = OptState::for_network(net, 1e-3);
  Rng rng = make_rng(9);
  std::normal_distribution<double> z(0.0, 100.0);
  for (int step = 0; step < 200; ++step) {
    ParamGrads g = net.zero_grads();
    for (auto& l : g.layers) {
      for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = z(rng);
      for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = z(rng);
    }
    rmsprop_step(net, g, opt);
    for (const auto& a : opt.accumulator) {
      EXPECT_TRUE(a.w.allFinite() && (a.w.array() >= 0).all());
      EXPECT_TRUE(a.b.allFinite() && (a.b.array() >= 0).all());
    }
  }
  for (const auto& l : net.layers()) EXPECT_TRUE(l.w.allFinite() && l.b.allFinite());
}

TEST(RmsProp, InvalidHyperparametersRejected) {
  const Network net = network_init({1, 1}, 0);
  EXPECT_THROW(OptState::for_network(net, 0.0), ConfigError);
  EXPECT_THROW(OptState::for_network(net, 0.1, 1.0), ConfigError);
  EXPECT_THROW(OptState::for_network(net, 0.1, 0.9, 0.0), ConfigError);
}

TEST(NetworkJson, RoundTripIsValueExact) {
  Network net = random_net({2, 5, 3, 1}, 21);
  net.mutable_layers()[0].w(0, 0) = 0.1 + 0.2;
  net.mutable_layers()[0].w(1, 1) = 1e-300;
  net.mutable_layers()[1].b(2) = -123456.789e10;
  EXPECT_TRUE(network_from_json(network_to_json(net)) == net);
}

TEST(NetworkJson, SchemaFields) {
  const Network net = affine((Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished(), Eigen::Vector2d(7, 8));
  const std::string text = network_to_json(net);
  EXPECT_NE(text.find("\"widths\""), std::string::npos);
  EXPECT_NE(text.find("[1.0,2.0,3.0,4.0,5.0,6.0]"), std::string::npos) << text;
}

TEST(NetworkJson, MalformedInputIsIoError) {
  EXPECT_THROW(network_from_json("{"), IoError);
  EXPECT_THROW(network_from_json(R"({"widths":[2,1],"layers":[{"w":[1],"b":[0]}]})"), IoError);
}

TEST(OptStateJson, RoundTrip) {
  Network net = random_net({2, 3, 1}, 5);
  OptState opt = OptState::for_network(net, 0.01, 0.8, 1e-7);
  ParamGrads g = net.zero_grads();
  g.layers[0].w.setConstant(0.3);
  rmsprop_step(net, g, opt);
  const OptState back = optstate_from_json(optstate_to_json(opt));
  EXPECT_EQ(back.learning_rate, opt.learning_rate);
  EXPECT_EQ(back.decay, opt.decay);
  EXPECT_EQ(back.epsilon, opt.epsilon);
  ASSERT_EQ(back.accumulator.size(), opt.accumulator.size());
  for (std::size_t l = 0; l < back.accumulator.size(); ++l) {
    EXPECT_EQ(back.accumulator[l].w, opt.accumulator[l].w);
    EXPECT_EQ(back.accumulator[l].b, opt.accumulator[l].b);
  }
}
