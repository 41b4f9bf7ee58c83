#include "gemflow/config.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>
#include <string_view>

#include "gemflow/errors.hpp"
#include "gemflow/io.hpp"

namespace gemflow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double to_double(std::string_view v, std::size_t line, std::string_view key) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || std::isnan(out))
    bad(line, "'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

long long to_int(std::string_view v, std::size_t line, std::string_view key) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    bad(line, "'" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_u64(std::string_view v, std::size_t line, std::string_view key) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    bad(line, "'" + std::string(key) + "' expects a nonnegative integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view v, std::size_t line, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(line, "'" + std::string(key) + "' expects true or false");
}

std::vector<int> to_widths(std::string_view v, std::size_t line, std::string_view key) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t pos = v.find(',', start);
    const auto item = trim(v.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    const long long w = to_int(item, line, key);
    if (w < 1) bad(line, "'" + std::string(key) + "' widths must be positive");
    out.push_back(static_cast<int>(w));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join_widths(const std::vector<int>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) out += (i ? "," : "") + std::to_string(widths[i]);
  return out;
}

void set_main_key(RunConfig& cfg, std::string_view key, std::string_view value, std::size_t line) {
  FlowConfig& f = cfg.flow;
  try {
    if (key == "dataset") cfg.dataset = parse_dataset(value);
    else if (key == "reference") cfg.reference = parse_dataset(value);
    else if (key == "particles") cfg.particles = to_int(value, line, key);
    else if (key == "target_samples") cfg.target_samples = to_int(value, line, key);
    else if (key == "step_size") f.step_size = to_double(value, line, key);
    else if (key == "iterations") f.iterations = static_cast<int>(to_int(value, line, key));
    else if (key == "fit_rounds") f.fit_rounds = static_cast<int>(to_int(value, line, key));
    else if (key == "penalty_alpha") f.penalty_alpha = to_double(value, line, key);
    else if (key == "batch_size") f.batch_size = static_cast<int>(to_int(value, line, key));
    else if (key == "estimator") f.estimator = parse_estimator(value);
    else if (key == "divergence") f.divergence = parse_divergence(value);
    else if (key == "learning_rate") f.learning_rate = to_double(value, line, key);
    else if (key == "seed") f.seed = to_u64(value, line, key);
    else if (key == "diag_every") f.diag_every = static_cast<int>(to_int(value, line, key));
    else if (key == "v_max") f.v_max = to_double(value, line, key);
    else if (key == "hidden_widths") f.hidden_widths = to_widths(value, line, key);
    else if (key == "warm_start") f.warm_start = to_bool(value, line, key);
    else if (key == "lsdd_samples") f.lsdd_samples = static_cast<int>(to_int(value, line, key));
    else if (key == "kernel_bandwidth") f.kernel_bandwidth = to_double(value, line, key);
    else if (key == "diag_samples") f.diag_samples = static_cast<int>(to_int(value, line, key));
    else if (key == "w2_subsample") f.w2_subsample = static_cast<int>(to_int(value, line, key));
    else if (key == "mmd_subsample") f.mmd_subsample = static_cast<int>(to_int(value, line, key));
    else if (key == "out_dir") cfg.out_dir = std::string(value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = static_cast<int>(to_int(value, line, key));
    else if (key == "plots") cfg.plots = to_bool(value, line, key);
    else if (key == "target_seed") cfg.target_seed = to_u64(value, line, key);
    else if (key == "reference_seed") cfg.reference_seed = to_u64(value, line, key);
    else if (key.starts_with("dataset.")) cfg.dataset_params[std::string(key.substr(8))] = to_double(value, line, key);
    else if (key.starts_with("reference.")) cfg.reference_params[std::string(key.substr(10))] = to_double(value, line, key);
    else bad(line, "unknown key '" + std::string(key) + "'");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.starts_with("config line")) throw;
    bad(line, msg);
  }
}

void set_outer_key(OuterBlock& o, std::string_view key, std::string_view value, std::size_t line) {
  if (key == "latent_dim") o.latent_dim = static_cast<int>(to_int(value, line, key));
  else if (key == "generator_widths") o.generator_widths = to_widths(value, line, key);
  else if (key == "rounds") o.rounds = static_cast<int>(to_int(value, line, key));
  else if (key == "inner_per_outer") o.inner_per_outer = static_cast<int>(to_int(value, line, key));
  else if (key == "generator_epochs") o.generator_epochs = static_cast<int>(to_int(value, line, key));
  else if (key == "generator_lr") o.generator_lr = to_double(value, line, key);
  else bad(line, "unknown [outer] key '" + std::string(key) + "'");
}

}  // namespace

DatasetSpec RunConfig::target_spec() const {
  return {dataset, dataset_params, target_seed.value_or(flow.seed + 1)};
}

DatasetSpec RunConfig::reference_spec() const {
  return {reference, reference_params, reference_seed.value_or(flow.seed + 2)};
}

void RunConfig::validate() const {
  if (particles < 1) throw ConfigError("particles must be positive");
  if (target_samples < 1) throw ConfigError("target_samples must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be nonnegative");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  flow.validate(particles);
  if (flow.batch_size > target_samples) throw ConfigError("batch_size exceeds target_samples");
  // Surface unknown dataset parameters before any work starts.
  for (const auto& [k, v] : dataset_params)
    if (!dataset_param_defaults(dataset).contains(k)) throw ConfigError("dataset " + to_string(dataset) + " has no parameter '" + k + "'");
  for (const auto& [k, v] : reference_params)
    if (!dataset_param_defaults(reference).contains(k)) throw ConfigError("dataset " + to_string(reference) + " has no parameter '" + k + "'");
  if (outer) {
    if (outer->latent_dim < 1) throw ConfigError("[outer] latent_dim must be positive");
    if (outer->rounds < 0 || outer->inner_per_outer < 0 || outer->generator_epochs < 0)
      throw ConfigError("[outer] counts must be nonnegative");
    if (!(outer->generator_lr > 0.0)) throw ConfigError("[outer] generator_lr must be positive");
  }
}

bool RunConfig::operator==(const RunConfig& o) const {
  return flow.step_size == o.flow.step_size && flow.iterations == o.flow.iterations &&
         flow.fit_rounds == o.flow.fit_rounds && flow.penalty_alpha == o.flow.penalty_alpha &&
         flow.batch_size == o.flow.batch_size && flow.estimator == o.flow.estimator &&
         flow.divergence == o.flow.divergence && flow.learning_rate == o.flow.learning_rate &&
         flow.seed == o.flow.seed && flow.diag_every == o.flow.diag_every && flow.v_max == o.flow.v_max &&
         flow.hidden_widths == o.flow.hidden_widths && flow.warm_start == o.flow.warm_start &&
         flow.lsdd_samples == o.flow.lsdd_samples && flow.kernel_bandwidth == o.flow.kernel_bandwidth &&
         flow.diag_samples == o.flow.diag_samples && flow.w2_subsample == o.flow.w2_subsample &&
         flow.mmd_subsample == o.flow.mmd_subsample && dataset == o.dataset && reference == o.reference &&
         dataset_params == o.dataset_params && reference_params == o.reference_params &&
         target_seed == o.target_seed && reference_seed == o.reference_seed && particles == o.particles &&
         target_samples == o.target_samples && out_dir == o.out_dir && checkpoint_every == o.checkpoint_every &&
         plots == o.plots && outer == o.outer;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool in_outer = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[outer]") bad(line_no, "unknown section '" + std::string(line) + "'");
      if (cfg.outer) bad(line_no, "duplicate [outer] section");
      cfg.outer = OuterBlock{};
      in_outer = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) bad(line_no, "empty key");
    if (in_outer)
      set_outer_key(*cfg.outer, key, value, line_no);
    else
      set_main_key(cfg, key, value, line_no);
  }
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  const FlowConfig& f = cfg.flow;
  std::ostringstream out;
  out << "dataset = " << to_string(cfg.dataset) << '\n';
  for (const auto& [k, v] : cfg.dataset_params) out << "dataset." << k << " = " << format_double(v) << '\n';
  out << "reference = " << to_string(cfg.reference) << '\n';
  for (const auto& [k, v] : cfg.reference_params) out << "reference." << k << " = " << format_double(v) << '\n';
  if (cfg.target_seed) out << "target_seed = " << *cfg.target_seed << '\n';
  if (cfg.reference_seed) out << "reference_seed = " << *cfg.reference_seed << '\n';
  out << "particles = " << cfg.particles << '\n';
  out << "target_samples = " << cfg.target_samples << '\n';
  out << "step_size = " << format_double(f.step_size) << '\n';
  out << "iterations = " << f.iterations << '\n';
  out << "fit_rounds = " << f.fit_rounds << '\n';
  out << "penalty_alpha = " << format_double(f.penalty_alpha) << '\n';
  out << "batch_size = " << f.batch_size << '\n';
  out << "estimator = " << to_string(f.estimator) << '\n';
  out << "divergence = " << to_string(f.divergence) << '\n';
  out << "learning_rate = " << format_double(f.learning_rate) << '\n';
  out << "seed = " << f.seed << '\n';
  out << "diag_every = " << f.diag_every << '\n';
  out << "v_max = " << format_double(f.v_max) << '\n';
  out << "hidden_widths = " << join_widths(f.hidden_widths) << '\n';
  out << "warm_start = " << (f.warm_start ? "true" : "false") << '\n';
  out << "lsdd_samples = " << f.lsdd_samples << '\n';
  out << "kernel_bandwidth = " << format_double(f.kernel_bandwidth) << '\n';
  out << "diag_samples = " << f.diag_samples << '\n';
  out << "w2_subsample = " << f.w2_subsample << '\n';
  out << "mmd_subsample = " << f.mmd_subsample << '\n';
  out << "out_dir = " << cfg.out_dir << '\n';
  out << "checkpoint_every = " << cfg.checkpoint_every << '\n';
  out << "plots = " << (cfg.plots ? "true" : "false") << '\n';
  if (cfg.outer) {
    const OuterBlock& o = *cfg.outer;
    out << "\n[outer]\n";
    out << "latent_dim = " << o.latent_dim << '\n';
    out << "generator_widths = " << join_widths(o.generator_widths) << '\n';
    out << "rounds = " << o.rounds << '\n';
    out << "inner_per_outer = " << o.inner_per_outer << '\n';
    out << "generator_epochs = " << o.generator_epochs << '\n';
    out << "generator_lr = " << format_double(o.generator_lr) << '\n';
  }
  return out.str();
}

}  // namespace gemflow
