#include "gemflow/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gemflow/errors.hpp"

namespace gemflow {

DivergenceTag parse_divergence(std::string_view name) {
  if (name == "chi2") return DivergenceTag::chi2;
  if (name == "kl") return DivergenceTag::kl;
  if (name == "js") return DivergenceTag::js;
  if (name == "logd") return DivergenceTag::logd;
  throw ConfigError("unknown divergence '" + std::string(name) + "' (expected chi2, kl, js or logd)");
}

std::string to_string(DivergenceTag tag) {
  switch (tag) {
    case DivergenceTag::chi2: return "chi2";
    case DivergenceTag::kl: return "kl";
    case DivergenceTag::js: return "js";
    case DivergenceTag::logd: return "logd";
  }
  return "chi2";
}

double FDivergence::f(double u) const {
  if (!(u > 0.0)) throw DomainError("f-divergence generator needs u > 0");
  switch (tag) {
    case DivergenceTag::chi2: return (u - 1.0) * (u - 1.0);
    case DivergenceTag::kl: return u * std::log(u);
    case DivergenceTag::js: return u * std::log(u) - (u + 1.0) * std::log((u + 1.0) / 2.0);
    case DivergenceTag::logd: return std::log1p(u) - std::log(2.0 * u);
  }
  return 0.0;
}

double FDivergence::f_prime(double u) const {
  if (!(u > 0.0)) throw DomainError("f-divergence generator needs u > 0");
  switch (tag) {
    case DivergenceTag::chi2: return 2.0 * (u - 1.0);
    case DivergenceTag::kl: return std::log(u) + 1.0;
    case DivergenceTag::js: return std::log(u) - std::log((u + 1.0) / 2.0);
    case DivergenceTag::logd: return 1.0 / (1.0 + u) - 1.0 / u;
  }
  return 0.0;
}

double FDivergence::f_second(double u) const {
  if (!(u > 0.0)) throw DomainError("f'' needs u > 0");
  switch (tag) {
    case DivergenceTag::chi2: return 2.0;
    case DivergenceTag::kl: return 1.0 / u;
    case DivergenceTag::js: return 1.0 / (u * (u + 1.0));
    case DivergenceTag::logd: return 1.0 / (u * u) - 1.0 / ((1.0 + u) * (1.0 + u));
  }
  return 0.0;
}

double f_second(const FDivergence& div, double u) { return div.f_second(u); }

Eigen::MatrixXd ratio_velocity(const Network& net, const FDivergence& div, const PointBatch& points,
                               const RatioReadout& readout) {
  const Eigen::MatrixXd raw = net.forward(points);
  Eigen::MatrixXd field = net.input_gradient(points);
  if (div.tag == DivergenceTag::chi2 && !readout.positive) {
    field *= -2.0;
  } else {
    const double lo = readout.map.r_min;
    const double hi = readout.map.r_max;
    for (Eigen::Index i = 0; i < field.rows(); ++i) {
      double r = raw(i, 0);
      double slope = 1.0;
      if (readout.positive) {
        slope = readout.map.slope(r);
        r = readout.map.value(r);
      }
      const double weight = div.f_second(std::clamp(r, lo, hi));
      field.row(i) *= -weight * slope;
    }
  }
  if (!field.allFinite()) throw NumericFault("ratio_velocity: non-finite velocity");
  return field;
}

Eigen::MatrixXd diff_velocity(const Network& net, const PointBatch& points) {
  Eigen::MatrixXd field = -2.0 * net.input_gradient(points);
  if (!field.allFinite()) throw NumericFault("diff_velocity: non-finite velocity");
  return field;
}

void Kernel::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ConfigError("kernel bandwidth must be positive and finite");
}

double Kernel::operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z) const {
  return std::exp(-(x - z).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

Vector kernel_grad(const Kernel& kernel, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z) {
  const double h2 = kernel.bandwidth * kernel.bandwidth;
  const Vector diff = x - z;
  return -(std::exp(-diff.squaredNorm() / (2.0 * h2)) / h2) * diff;
}

namespace {

// Adds (scale) * sum_z grad_x K(x_i, z) into each row of `out`.
void accumulate_embedding_grad(const Kernel& kernel, const PointBatch& support, double scale,
                               const PointBatch& points, Eigen::MatrixXd& out) {
  const double h2 = kernel.bandwidth * kernel.bandwidth;
  const double inv_two_h2 = 1.0 / (2.0 * h2);
  const Eigen::Index m = points.cols();
  Vector acc(m);
  Vector diff(m);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    acc.setZero();
    for (Eigen::Index j = 0; j < support.rows(); ++j) {
      double sq = 0.0;
      for (Eigen::Index c = 0; c < m; ++c) {
        diff(c) = points(i, c) - support(j, c);
        sq += diff(c) * diff(c);
      }
      acc -= (std::exp(-sq * inv_two_h2) / h2) * diff;
    }
    out.row(i) += scale * acc.transpose();
  }
}

}  // namespace

Eigen::MatrixXd mmd_velocity(const Kernel& kernel, const PointBatch& target, const PointBatch& current,
                             const PointBatch& points) {
  kernel.validate();
  if (target.rows() == 0 || current.rows() == 0 || points.rows() == 0)
    throw InvalidArgument("mmd_velocity needs nonempty batches");
  if (target.cols() != points.cols() || current.cols() != points.cols())
    throw ShapeError("mmd_velocity: batches differ in width");
  Eigen::MatrixXd pull = Eigen::MatrixXd::Zero(points.rows(), points.cols());
  Eigen::MatrixXd push = Eigen::MatrixXd::Zero(points.rows(), points.cols());
  accumulate_embedding_grad(kernel, target, 1.0 / static_cast<double>(target.rows()), points, pull);
  accumulate_embedding_grad(kernel, current, 1.0 / static_cast<double>(current.rows()), points, push);
  Eigen::MatrixXd field = pull - push;
  if (!field.allFinite()) throw NumericFault("mmd_velocity: non-finite velocity");
  return field;
}

double median_heuristic_bandwidth(const PointBatch& batch, Eigen::Index max_points) {
  const Eigen::Index n = std::min(batch.rows(), max_points);
  if (n < 2) throw InvalidArgument("median heuristic needs at least two points");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) dists.push_back((batch.row(i) - batch.row(j)).norm());
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double h = *mid;
  if (!(h > 0.0)) throw InvalidArgument("median heuristic: degenerate batch (all points equal)");
  return h;
}

void cap_row_norms(Eigen::MatrixXd& field, double v_max) {
  if (!std::isfinite(v_max)) return;
  for (Eigen::Index i = 0; i < field.rows(); ++i) {
    const double norm = field.row(i).norm();
    if (norm > v_max) field.row(i) *= v_max / norm;
  }
}

}  // namespace gemflow
