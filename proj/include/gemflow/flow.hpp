#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gemflow/bregman.hpp"
#include "gemflow/errors.hpp"
#include "gemflow/net.hpp"
#include "gemflow/types.hpp"
#include "gemflow/velocity.hpp"

namespace gemflow {

enum class Estimator { lsdr, lr, lsdd, mmd };

Estimator parse_estimator(std::string_view name);
std::string to_string(Estimator e);

struct FlowConfig {
  double step_size = 0.005;
  int iterations = 20000;
  int fit_rounds = 5;
  double penalty_alpha = 0.0;
  int batch_size = 1000;
  Estimator estimator = Estimator::lsdr;
  DivergenceTag divergence = DivergenceTag::chi2;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
  int diag_every = 100;
  double v_max = 1e3;

  /// Hidden widths of the ratio/difference network (input and output widths are implied).
  std::vector<int> hidden_widths{64, 64, 64};
  /// Keep the fitted network across Euler iterations; false re-initializes it each iteration.
  bool warm_start = true;
  /// Base-measure draws per LSDD fitting round.
  int lsdd_samples = 1000;
  /// MMD estimator / diagnostic kernel bandwidth; <= 0 selects the median heuristic on the target.
  double kernel_bandwidth = 0.0;
  /// Per-side subsample sizes for diagnostics; 0 disables that diagnostic (NaN in the record).
  int diag_samples = 5000;
  int w2_subsample = 2048;
  int mmd_subsample = 1000;

  /// Throws ConfigError when a field is out of range. `particle_count` checks batch_size.
  void validate(Eigen::Index particle_count) const;
};

struct DiagRow {
  int iter = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  double w2 = std::numeric_limits<double>::quiet_NaN();
  double mmd = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = std::numeric_limits<double>::quiet_NaN();
};

/// Append-only diagnostics ordered by iteration.
class RunRecord {
 public:
  void append(const DiagRow& row);
  const std::vector<DiagRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  const DiagRow& back() const { return rows_.back(); }

 private:
  std::vector<DiagRow> rows_;
};

/// Everything needed to continue a run bit-for-bit.
struct FlowState {
  PointBatch particles;
  Network net;
  OptState opt;
  RunRecord record;
  int iteration = 0;  // completed Euler iterations
};

/// Thrown when a run aborts on a numeric fault; carries the partial state.
class FlowAborted : public NumericFault {
 public:
  FlowAborted(const std::string& what, FlowState state) : NumericFault(what), state_(std::move(state)) {}
  const FlowState& state() const { return state_; }

 private:
  FlowState state_;
};

/// particles + s * field.
PointBatch euler_step(const PointBatch& particles, const Eigen::MatrixXd& field, double s);

/// Widths {m, hidden..., 1} for the configured ratio/difference network.
std::vector<int> ratio_network_widths(const FlowConfig& cfg, int dim);

/// Fresh state: particles, He-initialized network, zeroed optimizer.
FlowState make_flow_state(const PointBatch& particles, const FlowConfig& cfg);

using CheckpointHook = std::function<void(const FlowState&)>;

/// Advance `state` until state.iteration == until. Each iteration fits the
/// estimator for fit_rounds mini-batch rounds, evaluates the velocity on all
/// particles, and applies one Euler step. Randomness is keyed on (seed, iteration),
/// so continuing from a saved state reproduces an uninterrupted run exactly.
/// `hook` runs after every `checkpoint_every` completed iterations (0 disables).
void advance_flow(FlowState& state, const PointBatch& target, const FlowConfig& cfg, int until,
                  const CheckpointHook& hook = {}, int checkpoint_every = 0);

struct InnerLoopResult {
  PointBatch particles;
  Network net;
  RunRecord record;
};

/// K = cfg.iterations Euler iterations starting from `net`.
InnerLoopResult inner_loop(const PointBatch& particles, const PointBatch& target, const Network& net,
                           const FlowConfig& cfg);

/// Full-batch RMSProp on (1/n) sum ||G(z_i) - y_i||^2.
Network fit_generator(const Network& gen, const PointBatch& latents, const PointBatch& targets, int epochs, double lr);

/// Mean squared error (1/n) sum ||G(z_i) - y_i||^2.
double generator_mse(const Network& gen, const PointBatch& latents, const PointBatch& targets);

using LatentSampler = std::function<PointBatch(Eigen::Index n, Rng& rng)>;

struct OuterConfig {
  int rounds = 1;
  int inner_per_outer = 20;
  Eigen::Index particles = 2000;
  int generator_epochs = 200;
  double generator_lr = 1e-4;
};

struct OuterLoopResult {
  Network generator;
  Network ratio_net;
  RunRecord record;
  /// Generator samples G(Z) after each round, on a fixed latent batch.
  std::vector<PointBatch> round_samples;
};

OuterLoopResult outer_loop(const Network& gen, const LatentSampler& latent_sampler, const PointBatch& target,
                           const FlowConfig& cfg, const OuterConfig& outer);

using AnalyticField = std::function<Eigen::MatrixXd(const PointBatch&)>;

/// K forward-Euler steps of size s under a closed-form field.
PointBatch integrate_analytic(const AnalyticField& field, const PointBatch& x0, double s, int iterations);

/// Run-directory checkpoint files for iteration k:
/// particles_<k>.csv, net_<k>.json, opt_<k>.json, and record.csv.
void write_checkpoint(const std::filesystem::path& dir, const FlowState& state);
FlowState read_checkpoint(const std::filesystem::path& dir, int iteration);
/// Largest k with a complete checkpoint in `dir`.
std::optional<int> latest_checkpoint(const std::filesystem::path& dir);

}  // namespace gemflow
