#include "gemflow/datasets.hpp"

#include <cmath>
#include <numbers>

#include "gemflow/errors.hpp"

namespace gemflow {

namespace {

struct NamedId {
  const char* name;
  DatasetId id;
};

constexpr NamedId kNames[] = {
    {"eight_gaussians", DatasetId::eight_gaussians},
    {"pinwheel", DatasetId::pinwheel},
    {"moons", DatasetId::moons},
    {"checkerboard", DatasetId::checkerboard},
    {"two_spirals", DatasetId::two_spirals},
    {"circles", DatasetId::circles},
    {"four_squares", DatasetId::four_squares},
    {"five_squares", DatasetId::five_squares},
    {"small_four_gaussians", DatasetId::small_four_gaussians},
    {"large_four_gaussians", DatasetId::large_four_gaussians},
    {"gaussian_ref", DatasetId::gaussian_ref},
    {"uniform_ref", DatasetId::uniform_ref},
};

constexpr double kPi = std::numbers::pi;

std::map<std::string, double> resolve_params(const DatasetSpec& spec) {
  auto params = dataset_param_defaults(spec.id);
  for (const auto& [key, value] : spec.params) {
    auto it = params.find(key);
    if (it == params.end())
      throw ConfigError("dataset " + to_string(spec.id) + " has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw ConfigError("dataset parameter '" + key + "' must be finite");
    it->second = value;
  }
  return params;
}

void require_positive(const std::map<std::string, double>& params, const char* key) {
  if (!(params.at(key) > 0.0)) throw ConfigError(std::string("dataset parameter '") + key + "' must be positive");
}

void require_nonnegative(const std::map<std::string, double>& params, const char* key) {
  if (!(params.at(key) >= 0.0)) throw ConfigError(std::string("dataset parameter '") + key + "' must be nonnegative");
}

// Equal mixture of isotropic Gaussians at the four corners (+-offset, +-offset).
void four_corner_gaussians(PointBatch& out, Rng& rng, double offset, double sigma) {
  std::uniform_int_distribution<int> corner(0, 3);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const int c = corner(rng);
    out(i, 0) = ((c & 1) ? offset : -offset) + noise(rng);
    out(i, 1) = ((c & 2) ? offset : -offset) + noise(rng);
  }
}

void squares(PointBatch& out, Rng& rng, double side, double offset, bool with_center) {
  std::uniform_int_distribution<int> which(0, with_center ? 4 : 3);
  std::uniform_real_distribution<double> jitter(-side / 2.0, side / 2.0);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const int c = which(rng);
    double cx = 0.0;
    double cy = 0.0;
    if (c < 4) {
      cx = (c & 1) ? offset : -offset;
      cy = (c & 2) ? offset : -offset;
    }
    out(i, 0) = cx + jitter(rng);
    out(i, 1) = cy + jitter(rng);
  }
}

}  // namespace

DatasetId parse_dataset(std::string_view name) {
  for (const auto& entry : kNames)
    if (name == entry.name) return entry.id;
  throw ConfigError("unknown dataset id '" + std::string(name) + "'");
}

std::string to_string(DatasetId id) {
  for (const auto& entry : kNames)
    if (entry.id == id) return entry.name;
  return "unknown";
}

const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : kNames) out.emplace_back(entry.name);
    return out;
  }();
  return names;
}

std::map<std::string, double> dataset_param_defaults(DatasetId id) {
  switch (id) {
    case DatasetId::eight_gaussians: return {{"radius", 2.0}, {"sigma", 0.2}};
    case DatasetId::pinwheel:
      return {{"blades", 5.0}, {"radial_mean", 1.0}, {"radial_std", 0.25}, {"tangential_std", 0.05}, {"twist", 0.4}};
    case DatasetId::moons: return {{"noise", 0.08}};
    case DatasetId::checkerboard: return {};
    case DatasetId::two_spirals: return {{"noise", 0.05}};
    case DatasetId::circles: return {{"noise", 0.08}};
    case DatasetId::four_squares:
    case DatasetId::five_squares: return {{"side", 0.5}, {"offset", 1.0}};
    case DatasetId::small_four_gaussians: return {{"offset", 0.5}, {"sigma", 0.1}};
    case DatasetId::large_four_gaussians: return {{"offset", 1.5}, {"sigma", 0.1}};
    case DatasetId::gaussian_ref: return {{"sigma", 1.0}};
    case DatasetId::uniform_ref: return {{"half_width", 1.0}};
  }
  return {};
}

PointBatch sample(const DatasetSpec& spec, Eigen::Index n) {
  if (n < 1) throw InvalidArgument("sample size must be positive");
  const auto params = resolve_params(spec);
  Rng rng = make_rng(spec.seed, 0xda7a0000ULL + static_cast<std::uint64_t>(spec.id));
  PointBatch out(n, 2);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  switch (spec.id) {
    case DatasetId::eight_gaussians: {
      require_positive(params, "radius");
      require_nonnegative(params, "sigma");
      const double radius = params.at("radius");
      const double sigma = params.at("sigma");
      std::uniform_int_distribution<int> mode(0, 7);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double angle = 2.0 * kPi * mode(rng) / 8.0;
        out(i, 0) = radius * std::cos(angle) + sigma * std_normal(rng);
        out(i, 1) = radius * std::sin(angle) + sigma * std_normal(rng);
      }
      break;
    }
    case DatasetId::pinwheel: {
      const int blades = static_cast<int>(params.at("blades"));
      if (blades < 1 || params.at("blades") != blades) throw ConfigError("pinwheel blades must be a positive integer");
      require_nonnegative(params, "radial_std");
      require_nonnegative(params, "tangential_std");
      std::uniform_int_distribution<int> blade(0, blades - 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = std::abs(params.at("radial_mean") + params.at("radial_std") * std_normal(rng));
        const double t = params.at("tangential_std") * std_normal(rng);
        const double angle = 2.0 * kPi * blade(rng) / blades + params.at("twist") * r;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        out(i, 0) = c * r - s * t;
        out(i, 1) = s * r + c * t;
      }
      break;
    }
    case DatasetId::moons: {
      require_nonnegative(params, "noise");
      const double noise = params.at("noise");
      std::bernoulli_distribution second(0.5);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double theta = kPi * unit(rng);
        if (second(rng)) {
          out(i, 0) = 1.0 - std::cos(theta);
          out(i, 1) = 0.5 - std::sin(theta);
        } else {
          out(i, 0) = std::cos(theta);
          out(i, 1) = std::sin(theta);
        }
        out(i, 0) += noise * std_normal(rng);
        out(i, 1) += noise * std_normal(rng);
      }
      break;
    }
    case DatasetId::checkerboard: {
      // Cells of side 2 on [-4,4]^2, column and row indices in {-2,...,1}; a cell
      // is occupied when the indices have even sum. The result is scaled by 0.5.
      std::uniform_real_distribution<double> x_draw(-4.0, 4.0);
      std::uniform_real_distribution<double> in_cell(0.0, 2.0);
      std::bernoulli_distribution upper(0.5);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double x = x_draw(rng);
        const int col = static_cast<int>(std::floor(x / 2.0));
        const int parity = ((col % 2) + 2) % 2;
        const int row = (upper(rng) ? 0 : -2) + parity;
        out(i, 0) = 0.5 * x;
        out(i, 1) = 0.5 * (2.0 * row + in_cell(rng));
      }
      break;
    }
    case DatasetId::two_spirals: {
      require_nonnegative(params, "noise");
      const double noise = params.at("noise");
      std::bernoulli_distribution flip(0.5);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double theta = 3.0 * kPi * unit(rng);
        const double r = theta / (3.0 * kPi) * 2.0;
        const double sign = flip(rng) ? -1.0 : 1.0;
        out(i, 0) = sign * r * std::cos(theta) + noise * std_normal(rng);
        out(i, 1) = sign * r * std::sin(theta) + noise * std_normal(rng);
      }
      break;
    }
    case DatasetId::circles: {
      require_nonnegative(params, "noise");
      const double noise = params.at("noise");
      std::bernoulli_distribution outer(0.5);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * unit(rng);
        const double radius = (outer(rng) ? 2.0 : 1.0) + noise * std_normal(rng);
        out(i, 0) = 0.5 * radius * std::cos(theta);
        out(i, 1) = 0.5 * radius * std::sin(theta);
      }
      break;
    }
    case DatasetId::four_squares:
    case DatasetId::five_squares:
      require_positive(params, "side");
      squares(out, rng, params.at("side"), params.at("offset"), spec.id == DatasetId::five_squares);
      break;
    case DatasetId::small_four_gaussians:
    case DatasetId::large_four_gaussians:
      require_nonnegative(params, "sigma");
      four_corner_gaussians(out, rng, params.at("offset"), params.at("sigma"));
      break;
    case DatasetId::gaussian_ref: {
      require_positive(params, "sigma");
      const double sigma = params.at("sigma");
      for (Eigen::Index i = 0; i < n; ++i) {
        out(i, 0) = sigma * std_normal(rng);
        out(i, 1) = sigma * std_normal(rng);
      }
      break;
    }
    case DatasetId::uniform_ref: {
      require_positive(params, "half_width");
      std::uniform_real_distribution<double> coord(-params.at("half_width"), params.at("half_width"));
      for (Eigen::Index i = 0; i < n; ++i) {
        out(i, 0) = coord(rng);
        out(i, 1) = coord(rng);
      }
      break;
    }
  }
  return out;
}

std::function<double(double)> analytic_ratio_1d(double mu_q, double mu_p, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  return [=](double x) { return std::exp((mu_q - mu_p) * (2.0 * x - mu_q - mu_p) / (2.0 * sigma * sigma)); };
}

}  // namespace gemflow
