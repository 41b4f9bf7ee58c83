#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gemflow/datasets.hpp"
#include "gemflow/flow.hpp"

namespace gemflow {

/// Optional generator refit block (`[outer]` section).
struct OuterBlock {
  int latent_dim = 2;
  std::vector<int> generator_widths{64, 64, 64};  // hidden widths
  int rounds = 10;
  int inner_per_outer = 20;
  int generator_epochs = 200;
  double generator_lr = 1e-4;

  bool operator==(const OuterBlock&) const = default;
};

/// Everything a `train-flow` run needs. Parsed from flat `key = value` text;
/// `#` starts a comment; keys after an `[outer]` line belong to the outer block.
struct RunConfig {
  FlowConfig flow;
  DatasetId dataset = DatasetId::moons;
  DatasetId reference = DatasetId::gaussian_ref;
  std::map<std::string, double> dataset_params;    // `dataset.<name> = value`
  std::map<std::string, double> reference_params;  // `reference.<name> = value`
  std::optional<std::uint64_t> target_seed;        // defaults to seed + 1
  std::optional<std::uint64_t> reference_seed;     // defaults to seed + 2
  Eigen::Index particles = 50000;
  Eigen::Index target_samples = 50000;
  std::string out_dir = "run";
  int checkpoint_every = 0;  // 0 writes only the final checkpoint
  bool plots = true;
  std::optional<OuterBlock> outer;

  DatasetSpec target_spec() const;
  DatasetSpec reference_spec() const;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool operator==(const RunConfig& other) const;
};

/// Throws ConfigError naming the line for syntax errors, unknown keys and bad values.
RunConfig parse_run_config(const std::string& text);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace gemflow
