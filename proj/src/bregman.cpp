#include "gemflow/bregman.hpp"

#include <cmath>
#include <string>

#include "gemflow/errors.hpp"

namespace gemflow {

namespace {

void require_batches(const Network& net, const PointBatch& x_p, const PointBatch& y_q) {
  if (x_p.rows() == 0 || y_q.rows() == 0) throw InvalidArgument("loss needs nonempty target and particle batches");
  if (x_p.cols() != net.input_width() || y_q.cols() != net.input_width())
    throw ShapeError("batch width differs from network input width");
  if (net.output_width() != 1) throw ConfigError("ratio/difference networks must have scalar output");
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericFault(std::string(what) + ": non-finite loss");
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

double PositiveMap::value(double raw) const {
  const double v = softplus(raw);
  return v < r_min ? r_min : (v > r_max ? r_max : v);
}

double PositiveMap::slope(double raw) const {
  const double v = softplus(raw);
  if (v < r_min || v > r_max) return 0.0;
  return sigmoid(raw);
}

void RatioObjective::validate() const {
  if (!(penalty_alpha >= 0.0)) throw ConfigError("penalty_alpha must be nonnegative");
  if (!(clamp.r_min > 0.0) || !(clamp.r_min < clamp.r_max)) throw ConfigError("ratio clamp needs 0 < r_min < r_max");
}

LossResult lsdr_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q, double alpha) {
  require_batches(net, x_p, y_q);
  if (!(alpha >= 0.0)) throw InvalidArgument("penalty alpha must be nonnegative");
  const double nx = static_cast<double>(x_p.rows());
  const double ny = static_cast<double>(y_q.rows());

  const Eigen::MatrixXd rx = net.forward(x_p);
  const Eigen::MatrixXd ry = net.forward(y_q);
  LossResult out;
  out.value = rx.squaredNorm() / nx - 2.0 * ry.sum() / ny;

  out.grads = net.backward(x_p, (2.0 / nx) * rx).params;
  out.grads += net.backward(y_q, Eigen::MatrixXd::Constant(y_q.rows(), 1, -2.0 / ny)).params;

  if (alpha > 0.0) {
    auto [pen, pen_grads] = net.weighted_input_gradient_sq(x_p, Eigen::VectorXd::Constant(x_p.rows(), alpha / nx));
    out.value += pen;
    out.grads += pen_grads;
  }
  require_finite(out.value, "lsdr_empirical_loss");
  return out;
}

LossResult lr_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q,
                             const PositiveMap& map) {
  require_batches(net, x_p, y_q);
  const double nx = static_cast<double>(x_p.rows());
  const double ny = static_cast<double>(y_q.rows());
  const Eigen::MatrixXd raw_x = net.forward(x_p);
  const Eigen::MatrixXd raw_y = net.forward(y_q);

  LossResult out;
  Eigen::MatrixXd up_x(x_p.rows(), 1);
  Eigen::MatrixXd up_y(y_q.rows(), 1);
  double value = 0.0;
  for (Eigen::Index i = 0; i < x_p.rows(); ++i) {
    const double r = map.value(raw_x(i, 0));
    value += std::log1p(r) / nx;
    up_x(i, 0) = map.slope(raw_x(i, 0)) / (1.0 + r) / nx;
  }
  for (Eigen::Index i = 0; i < y_q.rows(); ++i) {
    const double r = map.value(raw_y(i, 0));
    value -= (std::log(r) - std::log1p(r)) / ny;
    up_y(i, 0) = -map.slope(raw_y(i, 0)) / (r * (1.0 + r)) / ny;
  }
  out.value = value;
  out.grads = net.backward(x_p, up_x).params;
  out.grads += net.backward(y_q, up_y).params;
  require_finite(out.value, "lr_empirical_loss");
  return out;
}

DiffObjective DiffObjective::from_batches(const PointBatch& x_p, const PointBatch& y_q, Eigen::Index sample_count) {
  if (x_p.rows() == 0 || y_q.rows() == 0) throw InvalidArgument("base measure needs nonempty batches");
  if (x_p.cols() != y_q.cols()) throw ShapeError("batches differ in width");
  if (sample_count <= 0) throw ConfigError("base measure sample count must be positive");
  DiffObjective d;
  d.lower = x_p.colwise().minCoeff().transpose().cwiseMin(y_q.colwise().minCoeff().transpose());
  d.upper = x_p.colwise().maxCoeff().transpose().cwiseMax(y_q.colwise().maxCoeff().transpose());
  const Vector pad = 0.1 * (d.upper - d.lower);
  d.lower -= pad;
  d.upper += pad;
  d.sample_count = sample_count;
  return d;
}

PointBatch DiffObjective::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointBatch w(sample_count, lower.size());
  for (Eigen::Index i = 0; i < sample_count; ++i)
    for (Eigen::Index j = 0; j < lower.size(); ++j) w(i, j) = lower(j) + (upper(j) - lower(j)) * unit(rng);
  return w;
}

LossResult lsdd_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q,
                               const PointBatch& w_samples) {
  require_batches(net, x_p, y_q);
  if (w_samples.rows() == 0) throw InvalidArgument("base measure sample is empty");
  if (w_samples.cols() != net.input_width()) throw ShapeError("base measure sample width differs from network");
  const double nx = static_cast<double>(x_p.rows());
  const double ny = static_cast<double>(y_q.rows());
  const double nw = static_cast<double>(w_samples.rows());
  const Eigen::MatrixXd dx = net.forward(x_p);
  const Eigen::MatrixXd dy = net.forward(y_q);
  const Eigen::MatrixXd dw = net.forward(w_samples);

  LossResult out;
  out.value = 2.0 * dx.sum() / nx - 2.0 * dy.sum() / ny + dw.squaredNorm() / nw;
  out.grads = net.backward(x_p, Eigen::MatrixXd::Constant(x_p.rows(), 1, 2.0 / nx)).params;
  out.grads += net.backward(y_q, Eigen::MatrixXd::Constant(y_q.rows(), 1, -2.0 / ny)).params;
  out.grads += net.backward(w_samples, (2.0 / nw) * dw).params;
  require_finite(out.value, "lsdd_empirical_loss");
  return out;
}

LossResult lsdd_empirical_loss(const Network& net, const PointBatch& x_p, const PointBatch& y_q,
                               const DiffObjective& diff, Rng& rng) {
  return lsdd_empirical_loss(net, x_p, y_q, diff.sample(rng));
}

LossResult gradient_penalty(const Network& net, const PointBatch& x_p) {
  if (x_p.rows() == 0) throw InvalidArgument("gradient penalty needs a nonempty batch");
  auto [value, grads] =
      net.weighted_input_gradient_sq(x_p, Eigen::VectorXd::Constant(x_p.rows(), 1.0 / static_cast<double>(x_p.rows())));
  require_finite(value, "gradient_penalty");
  return {value, std::move(grads)};
}

void DiscreteDistributionPair::validate() const {
  if (p.size() != atoms.rows() || q.size() != atoms.rows())
    throw ShapeError("distribution weights must have one entry per atom");
  if ((p.array() < 0.0).any() || (q.array() < 0.0).any()) throw InvalidArgument("distribution weights must be nonnegative");
  if (std::abs(p.sum() - 1.0) > 1e-12 || std::abs(q.sum() - 1.0) > 1e-12)
    throw InvalidArgument("distribution weights must sum to one");
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (q(i) > 0.0 && p(i) == 0.0)
      throw DomainError("density ratio undefined: q > 0 where p = 0 at atom " + std::to_string(i));
}

Vector DiscreteDistributionPair::ratio() const {
  Vector r(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) {
      if (q(i) > 0.0) throw DomainError("density ratio undefined: q > 0 where p = 0 at atom " + std::to_string(i));
      r(i) = 0.0;
    } else {
      r(i) = q(i) / p(i);
    }
  }
  return r;
}

double score_g(ScoreKind kind, double c) {
  switch (kind) {
    case ScoreKind::lsdr:
      return (c - 1.0) * (c - 1.0);
    case ScoreKind::lr:
      if (c < 0.0) throw DomainError("LR score needs a nonnegative argument");
      return xlogx(c) - xlogx(c + 1.0);
  }
  return 0.0;
}

double score_g_prime(ScoreKind kind, double c) {
  switch (kind) {
    case ScoreKind::lsdr:
      return 2.0 * (c - 1.0);
    case ScoreKind::lr:
      if (!(c > 0.0)) throw DomainError("LR score derivative needs a positive argument");
      return std::log(c) - std::log1p(c);
  }
  return 0.0;
}

double bregman_oracle(const DiscreteDistributionPair& pair, const Vector& R, ScoreKind kind) {
  pair.validate();
  if (R.size() != pair.atoms.rows()) throw ShapeError("candidate ratio must have one value per atom");
  const Vector r = pair.ratio();
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (pair.p(i) == 0.0) continue;
    if (kind == ScoreKind::lr && !(R(i) > 0.0)) throw DomainError("LR oracle needs a positive candidate ratio");
    const double gap = score_g(kind, r(i)) - score_g(kind, R(i)) - score_g_prime(kind, R(i)) * (r(i) - R(i));
    total += pair.p(i) * gap;
  }
  return total;
}

}  // namespace gemflow
