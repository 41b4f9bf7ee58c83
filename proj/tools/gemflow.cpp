// gemflow: particle-flow generative modeling from the command line.
//
//   gemflow sample-data --dataset moons --n 1000 --seed 3 --out moons.csv
//   gemflow train-flow  --config run.cfg [--out DIR] [--seed N] [--resume]
//   gemflow eval        --particles DIR/particles_2000.csv --dataset moons --out metrics.csv
//   gemflow plot        --particles FILE | --grid FILE | --record FILE  --out FILE.svg
//
// Exit codes: 0 success, 2 configuration error, 3 numeric fault, 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gemflow/config.hpp"
#include "gemflow/datasets.hpp"
#include "gemflow/errors.hpp"
#include "gemflow/flow.hpp"
#include "gemflow/io.hpp"
#include "gemflow/metrics.hpp"
#include "gemflow/svg.hpp"

namespace fs = std::filesystem;
using namespace gemflow;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void apply_thread_cap() {
  const char* env = std::getenv("GEMFLOW_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("GEMFLOW_THREADS must be a positive integer");
  Eigen::setNbThreads(static_cast<int>(n));
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects name=value, got '" + item + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
      out[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw ConfigError("--param value for '" + item.substr(0, eq) + "' is not a number");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// sample-data

struct SampleArgs {
  std::string dataset;
  long long n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> params;
};

int cmd_sample_data(const SampleArgs& a) {
  if (a.n < 1) throw ConfigError("--n must be positive");
  DatasetSpec spec{parse_dataset(a.dataset), parse_params(a.params), a.seed};
  write_points_csv(a.out, sample(spec, a.n));
  return 0;
}

// ---------------------------------------------------------------------------
// train-flow

struct TrainArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

void write_plots(const fs::path& dir, const PointBatch& target, const PointBatch& generated, const RunRecord& record) {
  const DensityGrid geometry = DensityGrid::covering(target, 100, 100);
  write_text_atomic(dir / "kde_target.svg", heatmap_svg(kde(target, geometry)));
  write_text_atomic(dir / "kde_generated.svg", heatmap_svg(kde(generated, geometry)));
  if (!record.empty()) write_text_atomic(dir / "trace.svg", trace_svg(record));
}

int cmd_train_flow(const TrainArgs& a) {
  const std::string text = read_text(a.config);
  RunConfig cfg = parse_run_config(text);
  if (a.out) cfg.out_dir = *a.out;
  if (a.seed) cfg.flow.seed = *a.seed;
  cfg.validate();

  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  write_text_atomic(dir / "config.txt", serialize_run_config(cfg));

  const PointBatch target = sample(cfg.target_spec(), cfg.target_samples);

  if (cfg.outer) {
    const OuterBlock& ob = *cfg.outer;
    std::vector<int> widths{ob.latent_dim};
    widths.insert(widths.end(), ob.generator_widths.begin(), ob.generator_widths.end());
    widths.push_back(static_cast<int>(target.cols()));
    const Network gen = Network::he_init(widths, cfg.flow.seed + 7);
    const int latent_dim = ob.latent_dim;
    LatentSampler latents = [latent_dim](Eigen::Index n, Rng& rng) {
      std::normal_distribution<double> z(0.0, 1.0);
      PointBatch out(n, latent_dim);
      for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = z(rng);
      return out;
    };
    OuterConfig oc{ob.rounds, ob.inner_per_outer, cfg.particles, ob.generator_epochs, ob.generator_lr};
    const OuterLoopResult res = outer_loop(gen, latents, target, cfg.flow, oc);
    Rng fallback_rng = make_rng(cfg.flow.seed);
    const PointBatch generated =
        res.round_samples.empty() ? gen.forward(latents(cfg.particles, fallback_rng)) : res.round_samples.back();
    const int k = ob.rounds * ob.inner_per_outer;
    write_text_atomic(dir / "generator.json", network_to_json(res.generator));
    write_text_atomic(dir / ("net_" + std::to_string(k) + ".json"), network_to_json(res.ratio_net));
    write_points_csv(dir / ("particles_" + std::to_string(k) + ".csv"), generated);
    write_text_atomic(dir / "record.csv", record_to_csv(res.record));
    if (cfg.plots) write_plots(dir, target, generated, res.record);
    return 0;
  }

  const PointBatch reference = sample(cfg.reference_spec(), cfg.particles);
  write_points_csv(dir / "reference.csv", reference);

  FlowState state;
  std::optional<int> resume_from;
  if (a.resume) resume_from = latest_checkpoint(dir);
  if (resume_from) {
    state = read_checkpoint(dir, *resume_from);
    if (state.particles.rows() != cfg.particles || state.particles.cols() != target.cols())
      throw ConfigError("checkpoint particle batch does not match the configuration");
    std::cerr << "resuming from iteration " << *resume_from << "\n";
  } else {
    state = make_flow_state(reference, cfg.flow);
    write_checkpoint(dir, state);
  }

  auto hook = [&dir](const FlowState& s) { write_checkpoint(dir, s); };
  try {
    advance_flow(state, target, cfg.flow, cfg.flow.iterations, hook, cfg.checkpoint_every);
  } catch (const FlowAborted& e) {
    write_text_atomic(dir / "record.csv", record_to_csv(e.state().record));
    throw;
  }
  write_checkpoint(dir, state);
  if (cfg.plots) write_plots(dir, target, state.particles, state.record);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string particles;
  std::string dataset;
  std::uint64_t seed = 1;
  std::string out;
  long long w2_n = 1024;
  int replicates = 10;
  std::vector<std::string> params;
};

int cmd_eval(const EvalArgs& a) {
  if (a.w2_n < 1) throw ConfigError("--w2-n must be positive");
  if (a.replicates < 1) throw ConfigError("--replicates must be positive");
  const PointBatch particles = read_points_csv(a.particles);
  if (particles.rows() < 2) throw IoError(a.particles + ": need at least two particles");
  if (particles.cols() != 2) throw IoError(a.particles + ": expected 2D particles");
  DatasetSpec spec{parse_dataset(a.dataset), parse_params(a.params), a.seed};
  const Eigen::Index n = particles.rows();
  const PointBatch target = sample(spec, n);

  const Eigen::Index m = std::min<Eigen::Index>(n, a.w2_n);
  Rng rng = make_rng(a.seed, 0xe7a1);
  const double w2 = wasserstein2_exact(subsample_rows(particles, m, rng), subsample_rows(target, m, rng)).distance;

  // Two-independent-samples baseline at the same subsample size.
  double base_sum = 0.0;
  double base_max = 0.0;
  for (int r = 0; r < a.replicates; ++r) {
    DatasetSpec s1 = spec;
    DatasetSpec s2 = spec;
    s1.seed = a.seed + 1000 + 2 * static_cast<std::uint64_t>(r);
    s2.seed = s1.seed + 1;
    const double d = wasserstein2_exact(sample(s1, m), sample(s2, m)).distance;
    base_sum += d;
    base_max = std::max(base_max, d);
  }

  const Eigen::Index mm = std::min<Eigen::Index>(n, 1000);
  const Kernel kernel{median_heuristic_bandwidth(target, 1000)};
  const double mmd = mmd2_unbiased(particles.topRows(mm), target.topRows(mm), kernel);

  const DensityGrid geometry = DensityGrid::covering(target, 100, 100);
  const double l1 = kde_l1(kde(particles, geometry), kde(target, geometry));

  std::string csv = "w2,mmd,kde_l1,w2_baseline_mean,w2_baseline_max\n";
  csv += format_double(w2) + ',' + format_double(mmd) + ',' + format_double(l1) + ',' +
         format_double(base_sum / a.replicates) + ',' + format_double(base_max) + '\n';
  if (a.out.empty())
    std::cout << csv;
  else
    write_text_atomic(a.out, csv);
  return 0;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::string particles;
  std::string grid;
  std::string record;
  bool kde = false;
  std::string out;
};

int cmd_plot(const PlotArgs& a) {
  const int inputs = !a.particles.empty() + !a.grid.empty() + !a.record.empty();
  if (inputs != 1) throw ConfigError("plot takes exactly one of --particles, --grid, --record");
  std::string svg;
  if (!a.particles.empty()) {
    const PointBatch points = read_points_csv(a.particles);
    if (points.rows() == 0) throw IoError(a.particles + ": no particles to plot");
    if (points.cols() != 2) throw IoError(a.particles + ": expected 2D particles");
    svg = a.kde ? heatmap_svg(kde(points, DensityGrid::covering(points, 100, 100))) : scatter_svg(points);
  } else if (!a.grid.empty()) {
    svg = heatmap_svg(parse_grid_csv(read_text(a.grid), a.grid));
  } else {
    const RunRecord record = parse_record_csv(read_text(a.record), a.record);
    if (record.empty()) throw IoError(a.record + ": no record rows to plot");
    svg = trace_svg(record);
  }
  write_text_atomic(a.out, svg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemflow: particle-flow generative modeling"};
  app.require_subcommand(1);

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample-data", "Write i.i.d. draws of a named 2D distribution as CSV");
  sample_cmd->add_option("--dataset", sa.dataset, "Dataset id")->required();
  sample_cmd->add_option("--n", sa.n, "Number of samples")->required();
  sample_cmd->add_option("--seed", sa.seed, "Random seed");
  sample_cmd->add_option("--out", sa.out, "Output CSV path")->required();
  sample_cmd->add_option("--param", sa.params, "Dataset parameter override name=value (repeatable)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train-flow", "Run the particle flow described by a config file");
  train_cmd->add_option("--config", ta.config, "Config file")->required();
  train_cmd->add_option("--out", ta.out, "Run directory (overrides out_dir)");
  train_cmd->add_option("--seed", ta.seed, "Seed (overrides seed)");
  train_cmd->add_flag("--resume", ta.resume, "Continue from the latest checkpoint in the run directory");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Compare particles with a fresh target sample");
  eval_cmd->add_option("--particles", ea.particles, "Particle CSV")->required();
  eval_cmd->add_option("--dataset", ea.dataset, "Target dataset id")->required();
  eval_cmd->add_option("--seed", ea.seed, "Seed of the target sample");
  eval_cmd->add_option("--out", ea.out, "Metrics CSV path (stdout when omitted)");
  eval_cmd->add_option("--w2-n", ea.w2_n, "W2 subsample size per side");
  eval_cmd->add_option("--replicates", ea.replicates, "Baseline replicates");
  eval_cmd->add_option("--param", ea.params, "Dataset parameter override name=value (repeatable)");

  PlotArgs pa;
  auto* plot_cmd = app.add_subcommand("plot", "Render particles, a KDE grid, or a run record as SVG");
  plot_cmd->add_option("--particles", pa.particles, "Particle CSV (scatter, or heatmap with --kde)");
  plot_cmd->add_option("--grid", pa.grid, "KDE grid CSV");
  plot_cmd->add_option("--record", pa.record, "record.csv of a run");
  plot_cmd->add_flag("--kde", pa.kde, "Render particles as a KDE heatmap");
  plot_cmd->add_option("--out", pa.out, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    apply_thread_cap();
    if (*sample_cmd) return cmd_sample_data(sa);
    if (*train_cmd) return cmd_train_flow(ta);
    if (*eval_cmd) return cmd_eval(ea);
    if (*plot_cmd) return cmd_plot(pa);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
