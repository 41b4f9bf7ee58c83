#include "gemflow/flow.hpp"

#include <chrono>
#include <cmath>
#include <regex>

#include "gemflow/io.hpp"
#include "gemflow/metrics.hpp"

namespace gemflow {

namespace {

// Random-stream identifiers; each consumer gets its own (seed, stream) generator.
constexpr std::uint64_t kFitStream = 1ULL << 32;
constexpr std::uint64_t kReinitStream = 2ULL << 32;
constexpr std::uint64_t kDiagSetStream = 3ULL << 32;
constexpr std::uint64_t kLatentStream = 4ULL << 32;

Eigen::Index sub_size(int requested, Eigen::Index available) {
  return std::min<Eigen::Index>(requested, available);
}

// Fixed diagnostic subsets, derived from the seed alone so a resumed run sees the same ones.
struct DiagSets {
  PointBatch target_loss;
  std::vector<Eigen::Index> particle_loss;
  PointBatch target_w2;
  std::vector<Eigen::Index> particle_w2;
  PointBatch target_mmd;
  std::vector<Eigen::Index> particle_mmd;
};

std::vector<Eigen::Index> index_subset(Eigen::Index n, Eigen::Index count, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (count >= n) return idx;
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

PointBatch gather(const PointBatch& pool, const std::vector<Eigen::Index>& idx) {
  PointBatch out(static_cast<Eigen::Index>(idx.size()), pool.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pool.row(idx[i]);
  return out;
}

DiagSets make_diag_sets(const PointBatch& target, Eigen::Index particle_count, const FlowConfig& cfg) {
  Rng rng = make_rng(cfg.seed, kDiagSetStream);
  DiagSets d;
  d.target_loss = gather(target, index_subset(target.rows(), sub_size(cfg.diag_samples, target.rows()), rng));
  d.particle_loss = index_subset(particle_count, sub_size(cfg.diag_samples, particle_count), rng);
  const Eigen::Index w2_n = std::min<Eigen::Index>({static_cast<Eigen::Index>(cfg.w2_subsample), target.rows(),
                                                    particle_count, Eigen::Index{4096}});
  d.target_w2 = gather(target, index_subset(target.rows(), w2_n, rng));
  d.particle_w2 = index_subset(particle_count, w2_n, rng);
  d.target_mmd = gather(target, index_subset(target.rows(), sub_size(cfg.mmd_subsample, target.rows()), rng));
  d.particle_mmd = index_subset(particle_count, sub_size(cfg.mmd_subsample, particle_count), rng);
  return d;
}

Kernel run_kernel(const PointBatch& target, const FlowConfig& cfg) {
  if (cfg.kernel_bandwidth > 0.0) return Kernel{cfg.kernel_bandwidth};
  return Kernel{median_heuristic_bandwidth(target, 1000)};
}

LossResult fit_objective(const Network& net, const PointBatch& x, const PointBatch& y, const FlowConfig& cfg,
                         Rng& rng) {
  switch (cfg.estimator) {
    case Estimator::lsdr: return lsdr_empirical_loss(net, x, y, cfg.penalty_alpha);
    case Estimator::lr: return lr_empirical_loss(net, x, y);
    case Estimator::lsdd: {
      const auto diff = DiffObjective::from_batches(x, y, cfg.lsdd_samples);
      return lsdd_empirical_loss(net, x, y, diff, rng);
    }
    case Estimator::mmd: break;
  }
  throw ConfigError("estimator has no fitting objective");
}

Eigen::MatrixXd velocity_field(const FlowState& state, const PointBatch& target, const FlowConfig& cfg,
                               const Kernel& kernel) {
  switch (cfg.estimator) {
    case Estimator::lsdr:
      return ratio_velocity(state.net, FDivergence{cfg.divergence}, state.particles, RatioReadout::for_score(ScoreKind::lsdr));
    case Estimator::lr:
      return ratio_velocity(state.net, FDivergence{cfg.divergence}, state.particles, RatioReadout::for_score(ScoreKind::lr));
    case Estimator::lsdd: return diff_velocity(state.net, state.particles);
    case Estimator::mmd: return mmd_velocity(kernel, target, state.particles, state.particles);
  }
  return {};
}

DiagRow diagnose(const FlowState& state, const FlowConfig& cfg, const DiagSets& sets, const Kernel& kernel,
                 double wall) {
  DiagRow row;
  row.iter = state.iteration;
  row.wall_seconds = wall;
  if (cfg.estimator != Estimator::mmd && cfg.diag_samples > 0) {
    const PointBatch particles = gather(state.particles, sets.particle_loss);
    if (cfg.estimator == Estimator::lsdr) {
      const auto d = fit_diagnostics(state.net, sets.target_loss, particles);
      row.loss = d.lsdr_loss;
      row.grad_norm = d.mean_grad_norm;
    } else {
      Rng rng = make_rng(cfg.seed, kFitStream + 0xffffffffULL);
      row.loss = fit_objective(state.net, sets.target_loss, particles, cfg, rng).value;
      row.grad_norm = state.net.input_gradient(particles).rowwise().norm().mean();
    }
  }
  if (cfg.w2_subsample > 0 && !sets.particle_w2.empty())
    row.w2 = wasserstein2_exact(gather(state.particles, sets.particle_w2), sets.target_w2).distance;
  if (cfg.mmd_subsample >= 2 && sets.particle_mmd.size() >= 2 && sets.target_mmd.rows() >= 2)
    row.mmd = mmd2_unbiased(gather(state.particles, sets.particle_mmd), sets.target_mmd, kernel);
  return row;
}

}  // namespace

Estimator parse_estimator(std::string_view name) {
  if (name == "lsdr") return Estimator::lsdr;
  if (name == "lr") return Estimator::lr;
  if (name == "lsdd") return Estimator::lsdd;
  if (name == "mmd") return Estimator::mmd;
  throw ConfigError("unknown estimator '" + std::string(name) + "' (expected lsdr, lr, lsdd or mmd)");
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::lsdr: return "lsdr";
    case Estimator::lr: return "lr";
    case Estimator::lsdd: return "lsdd";
    case Estimator::mmd: return "mmd";
  }
  return "lsdr";
}

void FlowConfig::validate(Eigen::Index particle_count) const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("step_size must be positive");
  if (iterations < 0) throw ConfigError("iterations must be nonnegative");
  if (fit_rounds < 1) throw ConfigError("fit_rounds must be at least 1");
  if (!(penalty_alpha >= 0.0)) throw ConfigError("penalty_alpha must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (particle_count > 0 && batch_size > particle_count) throw ConfigError("batch_size exceeds the particle count");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (diag_every < 1) throw ConfigError("diag_every must be positive");
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive (use inf to disable)");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden widths must be positive");
  if (lsdd_samples < 1) throw ConfigError("lsdd_samples must be positive");
  if (diag_samples < 0 || w2_subsample < 0 || mmd_subsample < 0) throw ConfigError("subsample sizes must be nonnegative");
  if (estimator == Estimator::lsdd && divergence != DivergenceTag::chi2)
    throw ConfigError("divergence applies to ratio estimators only; leave it at chi2 for lsdd");
}

void RunRecord::append(const DiagRow& row) {
  if (!rows_.empty() && row.iter <= rows_.back().iter)
    throw InvalidArgument("run record rows must have increasing iteration indices");
  rows_.push_back(row);
}

PointBatch euler_step(const PointBatch& particles, const Eigen::MatrixXd& field, double s) {
  if (particles.rows() != field.rows() || particles.cols() != field.cols())
    throw ShapeError("euler_step: field shape differs from particle batch");
  return particles + s * field;
}

std::vector<int> ratio_network_widths(const FlowConfig& cfg, int dim) {
  std::vector<int> widths{dim};
  widths.insert(widths.end(), cfg.hidden_widths.begin(), cfg.hidden_widths.end());
  widths.push_back(1);
  return widths;
}

FlowState make_flow_state(const PointBatch& particles, const FlowConfig& cfg) {
  FlowState state;
  state.particles = particles;
  state.net = Network::he_init(ratio_network_widths(cfg, static_cast<int>(particles.cols())), cfg.seed);
  state.opt = OptState::for_network(state.net, cfg.learning_rate);
  return state;
}

void advance_flow(FlowState& state, const PointBatch& target, const FlowConfig& cfg, int until,
                  const CheckpointHook& hook, int checkpoint_every) {
  cfg.validate(state.particles.rows());
  if (target.rows() == 0) throw InvalidArgument("target pool is empty");
  if (target.cols() != state.particles.cols()) throw ShapeError("target and particles differ in width");
  if (cfg.estimator != Estimator::mmd && state.net.input_width() != state.particles.cols())
    throw ShapeError("network input width differs from particle width");

  const Kernel kernel =
      (cfg.estimator == Estimator::mmd || cfg.mmd_subsample >= 2) ? run_kernel(target, cfg) : Kernel{1.0};
  const DiagSets sets = make_diag_sets(target, state.particles.rows(), cfg);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  const int last = cfg.iterations - 1;

  try {
    while (state.iteration < until) {
      const int k = state.iteration;
      if (cfg.estimator != Estimator::mmd) {
        if (!cfg.warm_start && k > 0) {
          state.net = Network::he_init(state.net.widths(), cfg.seed + kReinitStream + static_cast<std::uint64_t>(k));
          state.opt = OptState::for_network(state.net, cfg.learning_rate);
        }
        Rng rng = make_rng(cfg.seed, kFitStream + static_cast<std::uint64_t>(k));
        for (int t = 0; t < cfg.fit_rounds; ++t) {
          const PointBatch x = sample_rows(target, cfg.batch_size, rng);
          const PointBatch y = sample_rows(state.particles, cfg.batch_size, rng);
          const LossResult fit = fit_objective(state.net, x, y, cfg, rng);
          rmsprop_step(state.net, fit.grads, state.opt);
        }
      }
      if (k % cfg.diag_every == 0 || k == last) state.record.append(diagnose(state, cfg, sets, kernel, elapsed()));

      Eigen::MatrixXd field = velocity_field(state, target, cfg, kernel);
      cap_row_norms(field, cfg.v_max);
      PointBatch next = euler_step(state.particles, field, cfg.step_size);
      if (!next.allFinite()) throw NumericFault("euler step produced non-finite particles at iteration " + std::to_string(k));
      state.particles = std::move(next);
      state.iteration = k + 1;
      if (hook && checkpoint_every > 0 && state.iteration % checkpoint_every == 0) hook(state);
    }
  } catch (const FlowAborted&) {
    throw;
  } catch (const NumericFault& e) {
    throw FlowAborted(e.what(), state);
  }
}

InnerLoopResult inner_loop(const PointBatch& particles, const PointBatch& target, const Network& net,
                           const FlowConfig& cfg) {
  FlowState state;
  state.particles = particles;
  state.net = net;
  state.opt = OptState::for_network(net, cfg.learning_rate);
  advance_flow(state, target, cfg, cfg.iterations);
  return {std::move(state.particles), std::move(state.net), std::move(state.record)};
}

double generator_mse(const Network& gen, const PointBatch& latents, const PointBatch& targets) {
  if (latents.rows() != targets.rows()) throw ShapeError("latents and targets differ in row count");
  if (gen.output_width() != targets.cols()) throw ShapeError("generator output width differs from target width");
  return (gen.forward(latents) - targets).squaredNorm() / static_cast<double>(latents.rows());
}

Network fit_generator(const Network& gen, const PointBatch& latents, const PointBatch& targets, int epochs, double lr) {
  if (latents.cols() != gen.input_width()) throw ShapeError("latent width differs from generator input width");
  if (targets.cols() != gen.output_width()) throw ShapeError("target width differs from generator output width");
  if (latents.rows() != targets.rows() || latents.rows() == 0)
    throw ShapeError("latents and targets must be nonempty with equal row counts");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  Network out = gen;
  OptState opt = OptState::for_network(out, lr);
  const double scale = 2.0 / static_cast<double>(latents.rows());
  for (int e = 0; e < epochs; ++e) {
    const Eigen::MatrixXd residual = out.forward(latents) - targets;
    rmsprop_step(out, out.backward(latents, scale * residual).params, opt);
  }
  return out;
}

OuterLoopResult outer_loop(const Network& gen, const LatentSampler& latent_sampler, const PointBatch& target,
                           const FlowConfig& cfg, const OuterConfig& outer) {
  if (outer.rounds < 0 || outer.inner_per_outer < 0) throw ConfigError("outer rounds and inner_per_outer must be nonnegative");
  if (outer.particles < 1) throw ConfigError("outer loop needs at least one particle");
  if (gen.output_width() != target.cols()) throw ShapeError("generator output width differs from target width");

  OuterLoopResult result;
  result.generator = gen;
  FlowState state = make_flow_state(PointBatch::Zero(outer.particles, target.cols()), cfg);
  Rng probe_rng = make_rng(cfg.seed, kLatentStream + 0xffffffffULL);
  const PointBatch probe = latent_sampler(outer.particles, probe_rng);

  FlowConfig inner_cfg = cfg;
  for (int round = 0; round < outer.rounds; ++round) {
    Rng rng = make_rng(cfg.seed, kLatentStream + static_cast<std::uint64_t>(round));
    const PointBatch latents = latent_sampler(outer.particles, rng);
    if (latents.rows() != outer.particles || latents.cols() != result.generator.input_width())
      throw ShapeError("latent sampler returned a batch of the wrong shape");
    state.particles = result.generator.forward(latents);
    const int until = state.iteration + outer.inner_per_outer;
    inner_cfg.iterations = until;
    advance_flow(state, target, inner_cfg, until);
    result.generator = fit_generator(result.generator, latents, state.particles, outer.generator_epochs, outer.generator_lr);
    result.round_samples.push_back(result.generator.forward(probe));
  }
  result.ratio_net = state.net;
  result.record = state.record;
  return result;
}

PointBatch integrate_analytic(const AnalyticField& field, const PointBatch& x0, double s, int iterations) {
  if (iterations < 0) throw ConfigError("iterations must be nonnegative");
  PointBatch x = x0;
  for (int k = 0; k < iterations; ++k) x = euler_step(x, field(x), s);
  return x;
}

void write_checkpoint(const std::filesystem::path& dir, const FlowState& state) {
  std::filesystem::create_directories(dir);
  const std::string k = std::to_string(state.iteration);
  write_points_csv(dir / ("particles_" + k + ".csv"), state.particles);
  write_text_atomic(dir / ("net_" + k + ".json"), network_to_json(state.net));
  write_text_atomic(dir / ("opt_" + k + ".json"), optstate_to_json(state.opt));
  write_text_atomic(dir / "record.csv", record_to_csv(state.record));
}

FlowState read_checkpoint(const std::filesystem::path& dir, int iteration) {
  const std::string k = std::to_string(iteration);
  FlowState state;
  state.particles = read_points_csv(dir / ("particles_" + k + ".csv"));
  state.net = network_from_json(read_text(dir / ("net_" + k + ".json")));
  state.opt = optstate_from_json(read_text(dir / ("opt_" + k + ".json")));
  const RunRecord full = parse_record_csv(read_text(dir / "record.csv"), (dir / "record.csv").string());
  for (const auto& row : full.rows())
    if (row.iter < iteration) state.record.append(row);
  state.iteration = iteration;
  return state;
}

std::optional<int> latest_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  static const std::regex pattern(R"(particles_(\d+)\.csv)");
  std::optional<int> best;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const int k = std::stoi(m[1].str());
    const std::string ks = m[1].str();
    if (!std::filesystem::exists(dir / ("net_" + ks + ".json")) || !std::filesystem::exists(dir / ("opt_" + ks + ".json")))
      continue;
    if (!best || k > *best) best = k;
  }
  return best;
}

}  // namespace gemflow
