// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdiff/config.hpp"

namespace gdiff {

inline constexpr const char* kReportHeader = "run_id,task,q1,q2,eta,seed,psnr_db,mse,seconds,nfe";

struct ReportRow {
  std::string run_id;
  Task task = Task::denoise;
  double q1 = 0.0;
  double q2 = 0.0;
  bool q2_tracks_zeta = false;
  double eta = 0.0;
  std::uint64_t seed = 0;
  /// Empty metric fields are written when there is no ground truth.
  bool has_metrics = true;
  double psnr_db = 0.0;
  double mse = 0.0;
  double seconds = 0.0;
  long nfe = 0;
  /// Failed sweep points keep their identity but leave numeric fields empty.
  bool failed = false;
};

std::string format_row(const ReportRow& row);
void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

std::shared_ptr<const ScoreModel> build_model(const ExperimentConfig& config, std::size_t dim);
LinearOperator build_operator(const ExperimentConfig& config, const Shape& signal_shape);

struct SolveResult {
  /// One row per (item, chain), in item-major order.
  std::vector<ReportRow> chain_rows;
  /// Corrupted-input row (identity operator with ground truth only).
  std::optional<ReportRow> measurement_row;
  /// Column means over chain_rows, run_id "mean".
  ReportRow aggregate;
  /// Final states (clamped when run.clamp_output), same order as chain_rows.
  std::vector<Tensor> reconstructions;
};

/// Corrupts (or loads) each measurement, samples run.chains guided chains per
/// item and writes reconstructions plus report.csv under run.out.
SolveResult run_solve(const ExperimentConfig& config);

struct TrainResultSummary {
  std::filesystem::path weights;
  std::vector<double> losses;
  /// Loss of the zero predictor, equal to the data dimension.
  double baseline_loss = 0.0;
};

/// Trains on train.dataset and writes weights.gdw and loss.csv under run.out.
TrainResultSummary run_train(const ExperimentConfig& config);

struct SweepResult {
  std::vector<ReportRow> rows;
  /// max - min aggregate PSNR over successful points.
  double psnr_spread = 0.0;
};

/// One solve per sweep value with the other parameters fixed; writes sweep.csv.
/// Points whose guidance settings are invalid or whose chains diverge are
/// reported as failed rows.
SweepResult run_sweep(const ExperimentConfig& config);

/// 1 for usage/config errors, 2 for runtime, I/O and divergence errors.
int exit_code_for(const std::exception& error);

}  // namespace gdiff
