#pragma once

#include "gemflow/net.hpp"
#include "gemflow/types.hpp"

namespace gemflow {

/// Bregman generator for ratio fitting: LSDR g(c)=(c-1)^2, LR g(c)=c log c-(c+1)log(c+1).
enum class ScoreKind { lsdr, lr };

/// Softplus followed by a clamp to [r_min, r_max]; keeps a network output positive.
struct PositiveMap {
  double r_min = 1e-3;
  double r_max = 1e3;

  double value(double raw) const;
  /// d value / d raw; zero outside the clamp interval.
  double slope(double raw) const;
};

struct RatioObjective {
  ScoreKind kind = ScoreKind::lsdr;
  double penalty_alpha = 0.0;
  PositiveMap clamp{};

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  ParamGrads grads;
};

/// (1/|x|) sum R(x)^2 + alpha (1/|x|) sum ||grad R(x)||^2 - (2/|y|) sum R(y), with
/// x ~ target and y ~ current particles. R is the raw network output.
LossResult lsdr_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q, double alpha);

/// E_p[log(1+R)] - E_q[log(R/(1+R))] with R = clamp(softplus(raw)).
LossResult lr_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q,
                             const PositiveMap& map = {});

/// Base measure of the density-difference score: uniform on an axis-aligned box.
struct DiffObjective {
  Vector lower;
  Vector upper;
  Eigen::Index sample_count = 1000;

  /// Bounding box of x_p and y_q inflated by 10% of its extent per axis.
  static DiffObjective from_batches(const PointBatch& x_p, const PointBatch& y_q, Eigen::Index sample_count);
  PointBatch sample(Rng& rng) const;
};

/// 2 E_p[D] - 2 E_q[D] + E_w[D^2] with fixed base-measure draws w.
LossResult lsdd_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q,
                               const PointBatch& w_samples);
LossResult lsdd_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q,
                               const DiffObjective& diff, Rng& rng);

/// (1/n) sum ||grad_x R(x_i)||^2 and its parameter gradient.
LossResult gradient_penalty(const Network& net, const PointBatch& x_p);

/// Finite-support pair of distributions over shared atoms.
struct DiscreteDistributionPair {
  PointBatch atoms;
  Vector p;
  Vector q;

  void validate() const;
  /// r_i = q_i / p_i, and 0 where both vanish.
  Vector ratio() const;
};

/// Bregman generator and derivative, exposed for the oracle and its tests.
double score_g(ScoreKind kind, double c);
double score_g_prime(ScoreKind kind, double c);

/// Exact B_ratio(r, R) - B_ratio(r, r) = sum_i p_i [g(r_i) - g(R_i) - g'(R_i)(r_i - R_i)].
double bregman_oracle(const DiscreteDistributionPair& pair, const Vector& R, ScoreKind kind);

}  // namespace gemflow
