#pragma once

#include <limits>
#include <string>
#include <string_view>

#include "gemflow/bregman.hpp"
#include "gemflow/net.hpp"
#include "gemflow/types.hpp"

namespace gemflow {

enum class DivergenceTag { chi2, kl, js, logd };

DivergenceTag parse_divergence(std::string_view name);
std::string to_string(DivergenceTag tag);

/// Convex f with f(1) = 0 defining D_f(q || p) = E_p f(q/p).
///   chi2: (u-1)^2
///   kl:   u log u
///   js:   u log u - (u+1) log((u+1)/2)
///   logd: -log(2u/(1+u))
struct FDivergence {
  DivergenceTag tag = DivergenceTag::chi2;

  double f(double u) const;
  double f_prime(double u) const;
  double f_second(double u) const;
};

/// f''(u); throws DomainError for u <= 0.
double f_second(const FDivergence& div, double u);

/// How a ratio network's raw output becomes R: raw for LSDR, clamped softplus for LR.
struct RatioReadout {
  bool positive = false;
  PositiveMap map{};

  static RatioReadout for_score(ScoreKind kind, const PositiveMap& map = {}) {
    return {kind == ScoreKind::lr, map};
  }
};

/// Rows -f''(R(x_i)) grad R(x_i). f'' is evaluated at R clamped into the readout's
/// [r_min, r_max] so that raw LSDR outputs <= 0 stay in the domain.
Eigen::MatrixXd ratio_velocity(const Network& net, const FDivergence& div, const PointBatch& points,
                               const RatioReadout& readout = {});

/// Rows -2 grad D(x_i).
Eigen::MatrixXd diff_velocity(const Network& net, const PointBatch& points);

/// Gaussian RBF K(x,z) = exp(-||x-z||^2 / (2h^2)).
struct Kernel {
  double bandwidth = 1.0;

  double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z) const;
  void validate() const;
};

/// grad_x K(x, z) = -(x - z)/h^2 K(x, z).
Vector kernel_grad(const Kernel& kernel, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z);

/// Rows (1/|target|) sum_z grad_x K(x,z) - (1/|current|) sum_z grad_x K(x,z).
Eigen::MatrixXd mmd_velocity(const Kernel& kernel, const PointBatch& target, const PointBatch& current,
                             const PointBatch& points);

/// Median pairwise Euclidean distance over at most `max_points` rows.
double median_heuristic_bandwidth(const PointBatch& batch, Eigen::Index max_points = 1000);

/// Rescale rows whose norm exceeds v_max onto the v_max sphere; no-op for infinite v_max.
void cap_row_norms(Eigen::MatrixXd& field, double v_max);

}  // namespace gemflow
