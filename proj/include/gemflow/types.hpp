#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace gemflow {

/// n x m particle coordinates, one particle per row.
using PointBatch = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Deterministic generator for a (seed, stream) pair; streams decorrelate
/// the independent random consumers of a run.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Rows of `pool` drawn uniformly with replacement.
PointBatch sample_rows(const PointBatch& pool, Eigen::Index count, Rng& rng);

/// Rows of `pool` drawn without replacement (a random subset); returns
/// `pool` itself when count >= rows.
PointBatch subsample_rows(const PointBatch& pool, Eigen::Index count, Rng& rng);

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace gemflow
