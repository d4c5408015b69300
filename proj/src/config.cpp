// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "gdiff/error.hpp"

namespace gdiff {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_uint(key, item));
  return out;
}

template <class E>
E parse_enum(const std::string& key, const std::string& text, std::initializer_list<std::pair<const char*, E>> table) {
  std::string names;
  for (const auto& [name, value] : table) {
    if (text == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(key + ": unknown value '" + text + "' (expected one of " + names + ")");
}

void require_exists(const std::filesystem::path& path, const std::string& key) {
  if (!std::filesystem::exists(path)) throw ConfigError(key + ": file not found: " + path.string());
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source, const std::filesystem::path& base_dir) {
  ConfigFile file;
  file.source_ = source;
  file.base_dir_ = base_dir;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!file.values_.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse(in, path.string(), path.parent_path());
}

void ConfigFile::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::filesystem::path ConfigFile::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

std::string to_string(Task task) {
  switch (task) {
    case Task::denoise: return "denoise";
    case Task::inpaint_box: return "inpaint_box";
    case Task::inpaint_pattern: return "inpaint_pattern";
    case Task::super_resolution: return "super_resolution";
  }
  return "?";
}

std::string to_string(Estimator estimator) { return estimator == Estimator::map ? "map" : "tweedie"; }

std::string to_string(JacobianMode mode) {
  switch (mode) {
    case JacobianMode::exact_vjp: return "exact_vjp";
    case JacobianMode::schedule_identity: return "schedule_identity";
    case JacobianMode::finite_difference: return "finite_difference";
  }
  return "?";
}

NoiseSchedule ScheduleSettings::build() const {
  return NoiseSchedule::linear(steps, beta_start, beta_end, sigma_mode, time_unit, deterministic_last_step);
}

GuidanceValues preset_values(Task task, Preset preset) {
  if (preset == Preset::original) {
    switch (task) {
      case Task::super_resolution: return {2.0, 10.0, 200.0};
      case Task::denoise: return {12.0, 22.0, 2.2};
      case Task::inpaint_box: return {10.0, 24.0, 4.0};
      case Task::inpaint_pattern: return {12.0, 23.0, 3.0};
    }
  }
  if (preset == Preset::desk) {
    switch (task) {
      case Task::super_resolution: return {2.0, 10.0, 6e-4};
      case Task::denoise: return {12.0, 22.0, 2e-3};
      case Task::inpaint_box: return {10.0, 24.0, 6e-4};
      case Task::inpaint_pattern: return {12.0, 23.0, 6e-4};
    }
  }
  throw ConfigError("guidance.preset: no preset selected");
}

ExperimentConfig ExperimentConfig::from(const ConfigFile& file) {
  ExperimentConfig c;
  std::optional<std::string> gmm_weights, gmm_means, gmm_variances;
  bool explicit_q1 = false, explicit_q2 = false, explicit_eta = false;

  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  const std::map<std::string, Setter> setters = {
      {"task", [&](auto& k, auto& v) {
         c.task = parse_enum<Task>(k, v, {{"denoise", Task::denoise}, {"inpaint_box", Task::inpaint_box},
                                          {"inpaint_pattern", Task::inpaint_pattern},
                                          {"super_resolution", Task::super_resolution}});
       }},
      {"schedule.T", [&](auto& k, auto& v) { c.schedule.steps = static_cast<int>(parse_uint(k, v)); }},
      {"schedule.beta_start", [&](auto& k, auto& v) { c.schedule.beta_start = parse_double(k, v); }},
      {"schedule.beta_end", [&](auto& k, auto& v) { c.schedule.beta_end = parse_double(k, v); }},
      {"schedule.sigma_mode", [&](auto& k, auto& v) {
         c.schedule.sigma_mode = parse_enum<SigmaMode>(k, v, {{"beta", SigmaMode::beta}, {"beta_tilde", SigmaMode::beta_tilde}});
       }},
      {"schedule.t_unit", [&](auto& k, auto& v) {
         c.schedule.time_unit = parse_enum<TimeUnit>(k, v, {{"normalized", TimeUnit::normalized}, {"index", TimeUnit::index}});
       }},
      {"schedule.deterministic_last_step", [&](auto& k, auto& v) { c.schedule.deterministic_last_step = parse_bool(k, v); }},
      {"model.kind", [&](auto& k, auto& v) {
         c.model.kind = parse_enum<ModelKind>(k, v, {{"mlp", ModelKind::mlp}, {"gmm", ModelKind::gmm},
                                                     {"standard_normal", ModelKind::standard_normal}});
       }},
      {"model.weights", [&](auto&, auto& v) { c.model.weights = file.resolve(v); }},
      {"model.gmm.weights", [&](auto&, auto& v) { gmm_weights = v; }},
      {"model.gmm.means", [&](auto&, auto& v) { gmm_means = v; }},
      {"model.gmm.variances", [&](auto&, auto& v) { gmm_variances = v; }},
      {"data.truth", [&](auto&, auto& v) { c.data.truth = file.resolve(v); }},
      {"data.measurement", [&](auto&, auto& v) { c.data.measurement = file.resolve(v); }},
      {"data.shape", [&](auto& k, auto& v) { c.data.shape = parse_sizes(k, v); }},
      {"data.limit", [&](auto& k, auto& v) { c.data.limit = parse_uint(k, v); }},
      {"operator.sigma_y", [&](auto& k, auto& v) { c.op.sigma_y = parse_double(k, v); }},
      {"operator.box", [&](auto& k, auto& v) {
         const auto b = parse_sizes(k, v);
         if (b.size() != 4) throw ConfigError(k + ": expected top, left, height, width");
         c.op.box = std::array<std::size_t, 4>{b[0], b[1], b[2], b[3]};
       }},
      {"operator.pattern", [&](auto&, auto& v) { c.op.pattern = file.resolve(v); }},
      {"operator.factor", [&](auto& k, auto& v) { c.op.factor = parse_uint(k, v); }},
      {"operator.kernel", [&](auto& k, auto& v) {
         c.op.kernel = parse_enum<DownsampleKernel>(
             k, v, {{"block_average", DownsampleKernel::block_average}, {"bicubic", DownsampleKernel::bicubic}});
       }},
      {"guidance.q1", [&](auto& k, auto& v) { c.guidance.q1 = parse_double(k, v); explicit_q1 = true; }},
      {"guidance.q2", [&](auto& k, auto& v) {
         explicit_q2 = true;
         if (v == "zeta") {
           c.guidance.q2_tracks_zeta = true;
         } else {
           c.guidance.q2 = parse_double(k, v);
         }
       }},
      {"guidance.eta", [&](auto& k, auto& v) { c.guidance.eta = parse_double(k, v); explicit_eta = true; }},
      {"guidance.estimator", [&](auto& k, auto& v) {
         c.guidance.estimator = parse_enum<Estimator>(k, v, {{"map", Estimator::map}, {"tweedie", Estimator::tweedie}});
       }},
      {"guidance.jacobian_mode", [&](auto& k, auto& v) {
         c.guidance.jacobian_mode = parse_enum<JacobianMode>(
             k, v, {{"exact_vjp", JacobianMode::exact_vjp}, {"schedule_identity", JacobianMode::schedule_identity},
                    {"finite_difference", JacobianMode::finite_difference}});
       }},
      {"guidance.fd_step", [&](auto& k, auto& v) { c.guidance.fd_step = parse_double(k, v); }},
      {"guidance.clamp_x0", [&](auto& k, auto& v) { c.guidance.clamp_x0 = parse_bool(k, v); }},
      {"guidance.preset", [&](auto& k, auto& v) {
         c.preset = parse_enum<Preset>(k, v, {{"none", Preset::none}, {"original", Preset::original}, {"desk", Preset::desk}});
       }},
      {"run.seed", [&](auto& k, auto& v) { c.run.seed = parse_uint(k, v); }},
      {"run.chains", [&](auto& k, auto& v) { c.run.chains = parse_uint(k, v); }},
      {"run.store_trajectory", [&](auto& k, auto& v) { c.run.store_trajectory = parse_bool(k, v); }},
      {"run.out", [&](auto&, auto& v) { c.run.out = v; }},
      {"run.jobs", [&](auto& k, auto& v) { c.run.jobs = parse_uint(k, v); }},
      {"run.clamp_output", [&](auto& k, auto& v) { c.run.clamp_output = parse_bool(k, v); }},
      {"run.write_outputs", [&](auto& k, auto& v) { c.run.write_outputs = parse_bool(k, v); }},
      {"train.dataset", [&](auto&, auto& v) { c.train.dataset = file.resolve(v); }},
      {"train.limit", [&](auto& k, auto& v) { c.train.limit = parse_uint(k, v); }},
      {"train.hidden", [&](auto& k, auto& v) { c.train.hidden = parse_sizes(k, v); }},
      {"train.time_features", [&](auto& k, auto& v) { c.train.time_features = parse_uint(k, v); }},
      {"train.output_gain", [&](auto& k, auto& v) { c.train.output_gain = parse_double(k, v); }},
      {"train.steps", [&](auto& k, auto& v) { c.train.optimizer.steps = parse_uint(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { c.train.optimizer.batch_size = parse_uint(k, v); }},
      {"train.learning_rate", [&](auto& k, auto& v) { c.train.optimizer.learning_rate = parse_double(k, v); }},
      {"train.momentum", [&](auto& k, auto& v) { c.train.optimizer.momentum = parse_double(k, v); }},
      {"train.final_lr_fraction", [&](auto& k, auto& v) { c.train.optimizer.final_lr_fraction = parse_double(k, v); }},
      {"train.grad_clip", [&](auto& k, auto& v) { c.train.optimizer.grad_clip = parse_double(k, v); }},
      {"train.seed", [&](auto& k, auto& v) { c.train.optimizer.seed = parse_uint(k, v); }},
      {"sweep.param", [&](auto& k, auto& v) {
         c.sweep.param = parse_enum<SweepParam>(k, v, {{"q1", SweepParam::q1}, {"q2", SweepParam::q2}, {"eta", SweepParam::eta}});
       }},
      {"sweep.values", [&](auto& k, auto& v) { c.sweep.values = parse_doubles(k, v); }},
  };

  for (const auto& [key, value] : file.values()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(file.source() + ": unknown key '" + key + "'");
    it->second(key, value);
  }

  if (gmm_weights || gmm_means || gmm_variances) {
    if (!gmm_weights || !gmm_means || !gmm_variances) {
      throw ConfigError("model.gmm: weights, means and variances must all be given");
    }
    c.model.gmm.weights = parse_doubles("model.gmm.weights", *gmm_weights);
    c.model.gmm.variances = parse_doubles("model.gmm.variances", *gmm_variances);
    for (const auto& component : split(*gmm_means, ';')) {
      c.model.gmm.means.push_back(parse_doubles("model.gmm.means", component));
    }
    try {
      c.model.gmm.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("model.gmm: ") + e.what());
    }
  }

  if (c.preset != Preset::none) {
    const GuidanceValues p = preset_values(c.task, c.preset);
    if (!explicit_q1) c.guidance.q1 = p.q1;
    if (!explicit_q2) c.guidance.q2 = p.q2;
    if (!explicit_eta) c.guidance.eta = p.eta;
  }
  return c;
}

void ExperimentConfig::validate_for_solve() const {
  try {
    const NoiseSchedule s = schedule.build();
    guidance.validate(s);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!(op.sigma_y > 0.0)) throw ConfigError("operator.sigma_y must be positive");
  if (run.chains == 0) throw ConfigError("run.chains must be at least 1");
  if (run.jobs == 0) throw ConfigError("run.jobs must be at least 1");

  if (data.truth.empty() && data.measurement.empty()) throw ConfigError("data.truth or data.measurement is required");
  if (!data.truth.empty() && !data.measurement.empty()) {
    throw ConfigError("data.truth and data.measurement are mutually exclusive");
  }
  if (!data.truth.empty()) require_exists(data.truth, "data.truth");
  if (!data.measurement.empty()) {
    require_exists(data.measurement, "data.measurement");
    if (data.shape.empty()) throw ConfigError("data.shape is required with data.measurement");
  }

  switch (model.kind) {
    case ModelKind::mlp:
      if (model.weights.empty()) throw ConfigError("model.weights is required for model.kind = mlp");
      require_exists(model.weights, "model.weights");
      break;
    case ModelKind::gmm:
      if (model.gmm.weights.empty()) throw ConfigError("model.gmm.* is required for model.kind = gmm");
      break;
    case ModelKind::standard_normal:
      break;
  }

  switch (task) {
    case Task::denoise:
      break;
    case Task::inpaint_box:
      if (!op.box) throw ConfigError("operator.box is required for task inpaint_box");
      break;
    case Task::inpaint_pattern:
      if (op.pattern.empty()) throw ConfigError("operator.pattern is required for task inpaint_pattern");
      require_exists(op.pattern, "operator.pattern");
      break;
    case Task::super_resolution:
      if (op.factor < 1) throw ConfigError("operator.factor must be at least 1");
      break;
  }
}

void ExperimentConfig::validate_for_train() const {
  if (train.dataset.empty()) throw ConfigError("train.dataset is required");
  require_exists(train.dataset, "train.dataset");
  if (train.hidden.empty()) throw ConfigError("train.hidden must list at least one width");
  for (std::size_t w : train.hidden) {
    if (w == 0) throw ConfigError("train.hidden widths must be positive");
  }
  if (train.optimizer.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(train.optimizer.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  try {
    (void)schedule.build();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

void ExperimentConfig::validate_for_sweep() const {
  if (!sweep.param) throw ConfigError("sweep.param is required (q1, q2 or eta)");
  if (sweep.values.empty()) throw ConfigError("sweep.values must list at least one value");
}

}  // namespace gdiff
