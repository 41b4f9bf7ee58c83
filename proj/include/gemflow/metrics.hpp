#pragma once

#include <optional>
#include <vector>

#include "gemflow/net.hpp"
#include "gemflow/types.hpp"
#include "gemflow/velocity.hpp"

namespace gemflow {

/// Pairing of rows of A to rows of B with total squared cost sum ||a_i - b_{perm[i]}||^2.
struct TransportPlan {
  std::vector<Eigen::Index> perm;
  double cost = 0.0;
};

/// Total squared cost of a given pairing, summed in ascending term order.
double plan_cost(const PointBatch& a, const PointBatch& b, const std::vector<Eigen::Index>& perm);

/// Dense min-cost assignment (shortest augmenting paths with potentials).
/// `cost` is n x n; returns row -> column and the dual potentials.
struct AssignmentSolution {
  std::vector<Eigen::Index> row_to_col;
  Vector row_potential;
  Vector col_potential;
};
AssignmentSolution solve_assignment(const Eigen::MatrixXd& cost);

struct W2Result {
  double distance = 0.0;
  TransportPlan plan;
};

/// Exact W2 between equal-size uniform empirical measures (n <= 4096).
W2Result wasserstein2_exact(const PointBatch& a, const PointBatch& b);

/// Unbiased U-statistic estimate of MMD^2 with a Gaussian kernel.
double mmd2_unbiased(const PointBatch& a, const PointBatch& b, const Kernel& kernel);

/// Regular grid of cell-centred density values; values(row = y index, col = x index).
struct DensityGrid {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
  int nx = 200;
  int ny = 200;
  Eigen::MatrixXd values;

  double cell_area() const { return (x_max - x_min) / nx * (y_max - y_min) / ny; }
  double x_center(int ix) const { return x_min + (ix + 0.5) * (x_max - x_min) / nx; }
  double y_center(int iy) const { return y_min + (iy + 0.5) * (y_max - y_min) / ny; }

  /// Bounding box of the points inflated by 10% per axis.
  static DensityGrid covering(const PointBatch& points, int nx = 200, int ny = 200);
};

/// Gaussian product-kernel density on the grid, normalized so sum * cell_area = 1.
/// Without a bandwidth, Scott's rule n^(-1/6) * sigma_hat is used per axis.
DensityGrid kde(const PointBatch& points, DensityGrid grid, std::optional<double> bandwidth = std::nullopt);

/// sum |a - b| * cell_area over two grids with identical geometry.
double kde_l1(const DensityGrid& a, const DensityGrid& b);

struct FitDiagnostics {
  double lsdr_loss = 0.0;       // alpha = 0 empirical LSDR loss
  double mean_grad_norm = 0.0;  // (1/n) sum ||grad R(Y_i)|| over particles
};

FitDiagnostics fit_diagnostics(const Network& net, const PointBatch& target, const PointBatch& particles);

}  // namespace gemflow
