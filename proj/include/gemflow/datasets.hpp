#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gemflow/types.hpp"

namespace gemflow {

enum class DatasetId {
  eight_gaussians,
  pinwheel,
  moons,
  checkerboard,
  two_spirals,
  circles,
  four_squares,
  five_squares,
  small_four_gaussians,
  large_four_gaussians,
  gaussian_ref,
  uniform_ref,
};

DatasetId parse_dataset(std::string_view name);
std::string to_string(DatasetId id);
const std::vector<std::string>& dataset_names();

/// Named 2D distribution. `params` overrides per-dataset defaults
/// (see `dataset_param_defaults`); unknown parameter names are rejected.
struct DatasetSpec {
  DatasetId id = DatasetId::gaussian_ref;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

/// Documented parameters of each construction and their defaults.
///   eight_gaussians        radius=2 sigma=0.2
///   pinwheel               blades=5 radial_mean=1 radial_std=0.25 tangential_std=0.05 twist=0.4
///   moons                  noise=0.08
///   checkerboard           (none) unit cells on [-2,2]^2, occupied where floor(x)+floor(y) is even
///   two_spirals            noise=0.05
///   circles                noise=0.08 (before the final 0.5 scale)
///   four_squares           side=0.5 offset=1
///   five_squares           side=0.5 offset=1
///   small_four_gaussians   offset=0.5 sigma=0.1
///   large_four_gaussians   offset=1.5 sigma=0.1
///   gaussian_ref           sigma=1
///   uniform_ref            half_width=1
std::map<std::string, double> dataset_param_defaults(DatasetId id);

/// n i.i.d. draws (n x 2); deterministic given (spec, n).
PointBatch sample(const DatasetSpec& spec, Eigen::Index n);

/// Exact N(mu_q, sigma^2) / N(mu_p, sigma^2) density ratio.
std::function<double(double)> analytic_ratio_1d(double mu_q, double mu_p, double sigma);

}  // namespace gemflow
