#include "gemflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gemflow/bregman.hpp"
#include "gemflow/errors.hpp"

namespace gemflow {

double plan_cost(const PointBatch& a, const PointBatch& b, const std::vector<Eigen::Index>& perm) {
  std::vector<double> terms(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    terms[static_cast<std::size_t>(i)] = (a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).squaredNorm();
  // Summing in sorted order makes the total independent of which side is listed first.
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

AssignmentSolution solve_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw ShapeError("assignment cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based indices with a virtual column 0.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Eigen::Index> match(static_cast<std::size_t>(n + 1), 0);  // column -> row
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n + 1), 0);
  std::vector<double> minv(static_cast<std::size_t>(n + 1));
  std::vector<char> used(static_cast<std::size_t>(n + 1));

  for (Eigen::Index row = 1; row <= n; ++row) {
    match[0] = row;
    Eigen::Index col0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[static_cast<std::size_t>(col0)] = 1;
      const Eigen::Index row0 = match[static_cast<std::size_t>(col0)];
      double delta = kInf;
      Eigen::Index col1 = 0;
      const double u_row0 = u[static_cast<std::size_t>(row0)];
      for (Eigen::Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double reduced = cost(row0 - 1, j - 1) - u_row0 - v[sj];
        if (reduced < minv[sj]) {
          minv[sj] = reduced;
          way[sj] = col0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          col1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      col0 = col1;
    } while (match[static_cast<std::size_t>(col0)] != 0);
    do {
      const Eigen::Index col1 = way[static_cast<std::size_t>(col0)];
      match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }

  AssignmentSolution sol;
  sol.row_to_col.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 1; j <= n; ++j) sol.row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  sol.row_potential = Eigen::Map<const Vector>(u.data() + 1, n);
  sol.col_potential = Eigen::Map<const Vector>(v.data() + 1, n);
  return sol;
}

W2Result wasserstein2_exact(const PointBatch& a, const PointBatch& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("wasserstein2_exact needs equal sample sizes (subsample upstream)");
  if (a.cols() != b.cols()) throw ShapeError("wasserstein2_exact: point widths differ");
  if (a.rows() == 0) throw InvalidArgument("wasserstein2_exact needs nonempty batches");
  if (a.rows() > 4096) throw InvalidArgument("wasserstein2_exact supports at most 4096 points per side");
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) cost(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  AssignmentSolution sol = solve_assignment(cost);
  W2Result out;
  out.plan.perm = std::move(sol.row_to_col);
  out.plan.cost = plan_cost(a, b, out.plan.perm);
  out.distance = std::sqrt(out.plan.cost / static_cast<double>(n));
  return out;
}

namespace {

double kernel_block_sum(const PointBatch& a, const PointBatch& b, double inv_two_h2, bool skip_diagonal) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      if (skip_diagonal && i == j) continue;
      total += std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv_two_h2);
    }
  return total;
}

}  // namespace

double mmd2_unbiased(const PointBatch& a, const PointBatch& b, const Kernel& kernel) {
  kernel.validate();
  if (a.rows() < 2 || b.rows() < 2) throw InvalidArgument("mmd2_unbiased needs at least two points per batch");
  if (a.cols() != b.cols()) throw ShapeError("mmd2_unbiased: point widths differ");
  const double inv_two_h2 = 1.0 / (2.0 * kernel.bandwidth * kernel.bandwidth);
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(b.rows());
  const double kaa = kernel_block_sum(a, a, inv_two_h2, true) / (n * (n - 1.0));
  const double kbb = kernel_block_sum(b, b, inv_two_h2, true) / (m * (m - 1.0));
  const double kab = kernel_block_sum(a, b, inv_two_h2, false) / (n * m);
  return kaa + kbb - 2.0 * kab;
}

DensityGrid DensityGrid::covering(const PointBatch& points, int nx, int ny) {
  if (points.rows() == 0 || points.cols() != 2) throw InvalidArgument("grid needs a nonempty 2D point batch");
  if (nx < 1 || ny < 1) throw ConfigError("grid resolution must be positive");
  DensityGrid g;
  g.nx = nx;
  g.ny = ny;
  const double x_lo = points.col(0).minCoeff();
  const double x_hi = points.col(0).maxCoeff();
  const double y_lo = points.col(1).minCoeff();
  const double y_hi = points.col(1).maxCoeff();
  const double px = x_hi > x_lo ? 0.1 * (x_hi - x_lo) : 1.0;
  const double py = y_hi > y_lo ? 0.1 * (y_hi - y_lo) : 1.0;
  g.x_min = x_lo - px;
  g.x_max = x_hi + px;
  g.y_min = y_lo - py;
  g.y_max = y_hi + py;
  return g;
}

DensityGrid kde(const PointBatch& points, DensityGrid grid, std::optional<double> bandwidth) {
  if (points.rows() == 0 || points.cols() != 2) throw InvalidArgument("kde needs a nonempty 2D point batch");
  if (grid.nx < 1 || grid.ny < 1 || !(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min))
    throw ConfigError("kde grid has an empty extent");
  const Eigen::Index n = points.rows();
  double hx = 0.0;
  double hy = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw ConfigError("kde bandwidth must be positive");
    hx = hy = *bandwidth;
  } else {
    const double scott = std::pow(static_cast<double>(n), -1.0 / 6.0);
    auto spread = [&](int c) {
      if (n < 2) return 0.0;
      const double mean = points.col(c).mean();
      return std::sqrt((points.col(c).array() - mean).square().sum() / static_cast<double>(n - 1));
    };
    hx = scott * spread(0);
    hy = scott * spread(1);
    // Degenerate spread: fall back to one cell width so the bump stays resolvable.
    if (!(hx > 0.0)) hx = (grid.x_max - grid.x_min) / grid.nx;
    if (!(hy > 0.0)) hy = (grid.y_max - grid.y_min) / grid.ny;
  }

  // The product kernel factorizes: values = KY^T KX with KX (n x nx), KY (n x ny).
  Eigen::MatrixXd kx(n, grid.nx);
  Eigen::MatrixXd ky(n, grid.ny);
  for (int ix = 0; ix < grid.nx; ++ix) {
    const double cx = grid.x_center(ix);
    kx.col(ix) = (-(points.col(0).array() - cx).square() / (2.0 * hx * hx)).exp();
  }
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double cy = grid.y_center(iy);
    ky.col(iy) = (-(points.col(1).array() - cy).square() / (2.0 * hy * hy)).exp();
  }
  grid.values = ky.transpose() * kx;
  const double mass = grid.values.sum() * grid.cell_area();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericFault("kde: no density mass falls on the grid");
  grid.values /= mass;
  return grid;
}

double kde_l1(const DensityGrid& a, const DensityGrid& b) {
  if (a.nx != b.nx || a.ny != b.ny || a.x_min != b.x_min || a.x_max != b.x_max || a.y_min != b.y_min ||
      a.y_max != b.y_max)
    throw ShapeError("kde_l1 needs grids with identical geometry");
  return (a.values - b.values).cwiseAbs().sum() * a.cell_area();
}

FitDiagnostics fit_diagnostics(const Network& net, const PointBatch& target, const PointBatch& particles) {
  if (target.rows() == 0 || particles.rows() == 0) throw InvalidArgument("diagnostics need nonempty batches");
  FitDiagnostics d;
  d.lsdr_loss = net.forward(target).squaredNorm() / static_cast<double>(target.rows()) -
                2.0 * net.forward(particles).sum() / static_cast<double>(particles.rows());
  d.mean_grad_norm = net.input_gradient(particles).rowwise().norm().mean();
  return d;
}

}  // namespace gemflow
