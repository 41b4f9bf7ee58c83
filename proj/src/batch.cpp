#include <algorithm>
#include <numeric>
#include <vector>

#include "gemflow/types.hpp"

namespace gemflow {

PointBatch sample_rows(const PointBatch& pool, Eigen::Index count, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, pool.rows() - 1);
  PointBatch out(count, pool.cols());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = pool.row(pick(rng));
  return out;
}

PointBatch subsample_rows(const PointBatch& pool, Eigen::Index count, Rng& rng) {
  if (count >= pool.rows()) return pool;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // partial Fisher-Yates
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, pool.rows() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  PointBatch out(count, pool.cols());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = pool.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace gemflow
