// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gdiff/dataset.hpp"
#include "gdiff/error.hpp"
#include "gdiff/log.hpp"
#include "gdiff/metrics.hpp"
#include "gdiff/sampler.hpp"
#include "gdiff/tensor_io.hpp"

namespace gdiff {

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool is_image_shape(const Shape& shape) {
  return shape.size() == 3 && (shape[0] == 1 || shape[0] == 3);
}

void save_output(const Tensor& t, const std::filesystem::path& stem) {
  write_tensor(t, stem.string() + ".gdt");
  if (is_image_shape(t.shape())) {
    write_image(t, ImageMeta::from_shape(t.shape()), stem.string() + (t.shape()[0] == 1 ? ".pgm" : ".ppm"));
  }
}

Tensor clamp_unit(Tensor t) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], 0.0, 1.0);
  return t;
}

struct Item {
  std::string name;
  std::optional<Tensor> truth;
  std::optional<Tensor> measurement;
};

std::vector<Item> load_items(const ExperimentConfig& config) {
  std::vector<Item> items;
  if (!config.data.measurement.empty()) {
    items.push_back({config.data.measurement.stem().string(), std::nullopt, load_tensor_or_image(config.data.measurement)});
    return items;
  }
  if (std::filesystem::is_directory(config.data.truth)) {
    for (auto& d : load_dataset(config.data.truth, config.data.limit)) items.push_back({d.name, std::move(d.tensor), std::nullopt});
  } else {
    items.push_back({config.data.truth.stem().string(), load_tensor_or_image(config.data.truth), std::nullopt});
  }
  return items;
}

ReportRow base_row(const ExperimentConfig& config) {
  ReportRow row;
  row.task = config.task;
  row.q1 = config.guidance.q1;
  row.q2 = config.guidance.q2;
  row.q2_tracks_zeta = config.guidance.q2_tracks_zeta;
  row.eta = config.guidance.eta;
  row.seed = config.run.seed;
  return row;
}

ReportRow mean_row(const ExperimentConfig& config, const std::vector<ReportRow>& rows) {
  ReportRow agg = base_row(config);
  agg.run_id = "mean";
  agg.has_metrics = !rows.empty() && rows.front().has_metrics;
  double psnr_sum = 0.0, mse_sum = 0.0, secs = 0.0, nfe = 0.0;
  for (const auto& r : rows) {
    psnr_sum += r.psnr_db;
    mse_sum += r.mse;
    secs += r.seconds;
    nfe += static_cast<double>(r.nfe);
  }
  const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  agg.psnr_db = psnr_sum / n;
  agg.mse = mse_sum / n;
  agg.seconds = secs / n;
  agg.nfe = std::lround(nfe / n);
  return agg;
}

}  // namespace

std::string format_row(const ReportRow& row) {
  std::string out = row.run_id + "," + to_string(row.task) + ",";
  if (row.failed) {
    // Parameters are kept so the failing point can be identified.
    out += shortest(row.q1) + "," + (row.q2_tracks_zeta ? "zeta" : shortest(row.q2)) + "," + shortest(row.eta) + "," +
           std::to_string(row.seed) + ",,,,";
    return out;
  }
  out += shortest(row.q1) + "," + (row.q2_tracks_zeta ? std::string("zeta") : shortest(row.q2)) + "," +
         shortest(row.eta) + "," + std::to_string(row.seed) + ",";
  if (row.has_metrics) {
    out += format_metric(row.psnr_db, 6) + "," + shortest(row.mse) + ",";
  } else {
    out += ",,";
  }
  out += fixed(row.seconds, 3) + "," + std::to_string(row.nfe);
  return out;
}

void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << kReportHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
  if (!out) throw IoError("failed writing report: " + path.string());
}

std::shared_ptr<const ScoreModel> build_model(const ExperimentConfig& config, std::size_t dim) {
  switch (config.model.kind) {
    case ModelKind::mlp: {
      auto net = std::make_shared<MlpScoreNet>(load_weights(config.model.weights));
      if (net->dimension() != dim) {
        throw ConfigError("model.weights: network dimension " + std::to_string(net->dimension()) +
                          " does not match data dimension " + std::to_string(dim));
      }
      return net;
    }
    case ModelKind::gmm:
      if (config.model.gmm.dimension() != dim) throw ConfigError("model.gmm: dimension does not match the data");
      return std::make_shared<GmmScore>(config.model.gmm);
    case ModelKind::standard_normal:
      return std::make_shared<GmmScore>(GmmPrior::standard_normal(dim));
  }
  throw ConfigError("model.kind: unsupported");
}

LinearOperator build_operator(const ExperimentConfig& config, const Shape& signal_shape) {
  switch (config.task) {
    case Task::denoise:
      return make_identity(signal_shape);
    case Task::inpaint_box: {
      const auto& b = *config.op.box;
      return make_box_mask(ImageMeta::from_shape(signal_shape), b[0], b[1], b[2], b[3]);
    }
    case Task::inpaint_pattern:
      return make_pattern_mask(ImageMeta::from_shape(signal_shape), load_pattern(config.op.pattern));
    case Task::super_resolution:
      return make_downsample(ImageMeta::from_shape(signal_shape), config.op.factor, config.op.kernel);
  }
  throw ConfigError("task: unsupported");
}

SolveResult run_solve(const ExperimentConfig& config) {
  config.validate_for_solve();
  const NoiseSchedule schedule = config.schedule.build();
  std::vector<Item> items = load_items(config);
  const Shape shape = items.front().truth ? items.front().truth->shape() : config.data.shape;
  const auto model = build_model(config, shape_size(shape));
  const LinearOperator op = build_operator(config, shape);

  const std::filesystem::path out_dir = config.run.out;
  if (config.run.write_outputs) {
    std::filesystem::create_directories(out_dir / "recon");
    std::filesystem::create_directories(out_dir / "measurement");
    if (config.run.store_trajectory) std::filesystem::create_directories(out_dir / "trajectory");
  }

  // Measurements use their own stream so chain noise never overlaps corruption noise.
  const SeededGenerator corruption_root(config.run.seed, 1);
  std::vector<Measurement> measurements;
  measurements.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].truth) {
      SeededGenerator rng = corruption_root.split(i);
      measurements.push_back(corrupt(op, *items[i].truth, config.op.sigma_y, rng));
    } else {
      const Tensor& y = *items[i].measurement;
      if (y.size() != op.out_dim()) {
        throw FormatError("data.measurement: expected " + std::to_string(op.out_dim()) + " values, got " +
                          std::to_string(y.size()));
      }
      measurements.push_back(Measurement{y.reshaped(op.out_shape()), config.op.sigma_y, op});
    }
    if (config.run.write_outputs) save_output(measurements.back().y, out_dir / "measurement" / items[i].name);
  }

  const std::size_t chains = config.run.chains;
  const std::size_t total = items.size() * chains;
  std::vector<double> seconds(total, 0.0);
  log_info("solve: " + std::to_string(items.size()) + " item(s) x " + std::to_string(chains) + " chain(s), task " +
           to_string(config.task));
  const auto runs = run_chains(total, config.run.jobs, [&](std::uint64_t index) {
    const auto start = std::chrono::steady_clock::now();
    SamplerOptions options;
    options.seed = config.run.seed;
    options.chain = index;
    options.store_trajectory = config.run.store_trajectory;
    SamplerRun run = sample_conditional(schedule, *model, measurements[index / chains], config.guidance, shape, options);
    seconds[index] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
  });

  SolveResult result;
  for (std::size_t index = 0; index < total; ++index) {
    const Item& item = items[index / chains];
    const std::string id = item.name + "/c" + std::to_string(index % chains);
    Tensor x = config.run.clamp_output ? clamp_unit(runs[index].x0) : runs[index].x0;
    ReportRow row = base_row(config);
    row.run_id = id;
    row.seconds = seconds[index];
    row.nfe = runs[index].nfe_count;
    row.has_metrics = item.truth.has_value();
    if (item.truth) {
      row.mse = mse(x, *item.truth);
      row.psnr_db = psnr(x, *item.truth);
    }
    if (config.run.write_outputs) {
      const std::string stem = item.name + "_c" + std::to_string(index % chains);
      save_output(x, out_dir / "recon" / stem);
      if (config.run.store_trajectory) write_trajectory(runs[index], out_dir / "trajectory", stem);
    }
    result.chain_rows.push_back(row);
    result.reconstructions.push_back(std::move(x));
  }
  result.aggregate = mean_row(config, result.chain_rows);

  if (op.kind() == OperatorKind::identity && items.front().truth) {
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < items.size(); ++i) {
      ReportRow r = base_row(config);
      r.mse = mse(measurements[i].y, *items[i].truth);
      r.psnr_db = psnr(measurements[i].y, *items[i].truth);
      rows.push_back(r);
    }
    ReportRow m = mean_row(config, rows);
    m.run_id = "measurement";
    m.nfe = 0;
    result.measurement_row = m;
  }

  std::vector<ReportRow> report = result.chain_rows;
  if (result.measurement_row) report.push_back(*result.measurement_row);
  report.push_back(result.aggregate);
  write_report(out_dir / "report.csv", report);
  if (result.aggregate.has_metrics) log_info("solve: mean PSNR " + format_metric(result.aggregate.psnr_db, 3) + " dB");
  return result;
}

TrainResultSummary run_train(const ExperimentConfig& config) {
  config.validate_for_train();
  const NoiseSchedule schedule = config.schedule.build();
  const auto items = load_dataset(config.train.dataset, config.train.limit);
  std::vector<Tensor> data;
  data.reserve(items.size());
  for (const auto& it : items) data.push_back(it.tensor);
  const std::size_t dim = data.front().size();

  MlpScoreNet net(dim, config.train.hidden, config.train.time_features);
  SeededGenerator init_rng(config.train.optimizer.seed, 2);
  net.initialize(init_rng, config.train.output_gain);
  log_info("train: " + std::to_string(data.size()) + " items, " + std::to_string(net.parameter_count()) +
           " parameters, " + std::to_string(config.train.optimizer.steps) + " steps");
  TrainResult trained = train_score_net(std::move(net), schedule, data, config.train.optimizer);

  const std::filesystem::path out_dir = config.run.out;
  std::filesystem::create_directories(out_dir);
  TrainResultSummary summary;
  summary.weights = out_dir / "weights.gdw";
  summary.baseline_loss = static_cast<double>(dim);
  save_weights(trained.net, summary.weights);
  std::ofstream loss(out_dir / "loss.csv", std::ios::binary);
  if (!loss) throw IoError("cannot write " + (out_dir / "loss.csv").string());
  loss << "step,loss\n";
  for (std::size_t i = 0; i < trained.losses.size(); ++i) loss << i + 1 << ',' << shortest(trained.losses[i]) << '\n';
  summary.losses = std::move(trained.losses);
  if (!summary.losses.empty()) {
    log_info("train: final loss " + shortest(summary.losses.back()) + " (zero predictor " +
             shortest(summary.baseline_loss) + ")");
  }
  return summary;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate_for_sweep();
  // Paths and operator settings are shared by every point, so they fail the whole sweep.
  config.validate_for_solve();
  const std::string name = *config.sweep.param == SweepParam::q1 ? "q1" : *config.sweep.param == SweepParam::q2 ? "q2" : "eta";
  SweepResult result;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < config.sweep.values.size(); ++k) {
    const double value = config.sweep.values[k];
    ExperimentConfig point = config;
    switch (*config.sweep.param) {
      case SweepParam::q1: point.guidance.q1 = value; break;
      case SweepParam::q2:
        point.guidance.q2 = value;
        point.guidance.q2_tracks_zeta = false;
        break;
      case SweepParam::eta: point.guidance.eta = value; break;
    }
    point.run.out = config.run.out / (name + "_" + std::to_string(k));
    const std::string id = name + "=" + shortest(value);
    try {
      SolveResult solved = run_solve(point);
      ReportRow row = solved.aggregate;
      row.run_id = id;
      if (row.has_metrics && std::isfinite(row.psnr_db)) {
        lo = std::min(lo, row.psnr_db);
        hi = std::max(hi, row.psnr_db);
      }
      result.rows.push_back(row);
    } catch (const InvalidArgument& e) {
      log_error("sweep point " + id + " failed: " + e.what());
    } catch (const ConfigError& e) {
      log_error("sweep point " + id + " failed: " + e.what());
    } catch (const NumericError& e) {
      log_error("sweep point " + id + " failed: " + e.what());
    }
    if (result.rows.empty() || result.rows.back().run_id != id) {
      ReportRow failed = base_row(point);
      failed.run_id = id + ":failed";
      failed.failed = true;
      result.rows.push_back(failed);
    }
  }
  result.psnr_spread = hi >= lo ? hi - lo : 0.0;
  write_report(config.run.out / "sweep.csv", result.rows);
  log_info("sweep: PSNR spread (max - min) " + fixed(result.psnr_spread, 3) + " dB over " + name);
  return result;
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const InvalidArgument*>(&error)) return 1;
  return 2;
}

}  // namespace gdiff
