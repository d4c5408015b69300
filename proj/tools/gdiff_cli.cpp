// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdiff/config.hpp"
#include "gdiff/dataset.hpp"
#include "gdiff/error.hpp"
#include "gdiff/experiment.hpp"
#include "gdiff/log.hpp"
#include "gdiff/metrics.hpp"
#include "gdiff/oracle_check.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> jobs;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "override run.seed");
  cmd->add_option("--out", flags.out, "override run.out");
  cmd->add_option("--chains", flags.chains, "override run.chains");
  cmd->add_option("--jobs", flags.jobs, "override run.jobs");
  cmd->add_option("--set", flags.sets, "override any key, as key=value")->take_all();
}

gdiff::ExperimentConfig load_config(const CommonFlags& flags) {
  gdiff::ConfigFile file = gdiff::ConfigFile::load(flags.config);
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw gdiff::ConfigError("--set expects key=value, got '" + kv + "'");
    file.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) file.set("run.seed", std::to_string(*flags.seed));
  if (flags.out) file.set("run.out", *flags.out);
  if (flags.chains) file.set("run.chains", std::to_string(*flags.chains));
  if (flags.jobs) file.set("run.jobs", std::to_string(*flags.jobs));
  return gdiff::ExperimentConfig::from(file);
}

int cmd_solve(const CommonFlags& flags) {
  const auto result = gdiff::run_solve(load_config(flags));
  if (result.measurement_row) std::cout << "measurement psnr_db " << gdiff::format_metric(result.measurement_row->psnr_db, 3) << '\n';
  if (result.aggregate.has_metrics) std::cout << "mean psnr_db " << gdiff::format_metric(result.aggregate.psnr_db, 3) << '\n';
  std::cout << "nfe " << result.aggregate.nfe << '\n';
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  const auto result = gdiff::run_train(load_config(flags));
  std::cout << "weights " << result.weights.string() << '\n';
  if (!result.losses.empty()) std::cout << "final loss " << result.losses.back() << " (zero predictor " << result.baseline_loss << ")\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::optional<std::string>& param, const std::optional<std::string>& values) {
  CommonFlags copy = flags;
  if (param) copy.sets.push_back("sweep.param=" + *param);
  if (values) copy.sets.push_back("sweep.values=" + *values);
  const auto result = gdiff::run_sweep(load_config(copy));
  std::size_t failed = 0;
  for (const auto& r : result.rows) {
    std::cout << r.run_id << ' ' << (r.failed ? std::string("failed") : gdiff::format_metric(r.psnr_db, 3)) << '\n';
    failed += r.failed ? 1 : 0;
  }
  std::cout << "psnr spread " << gdiff::format_metric(result.psnr_spread, 3) << " dB\n";
  return failed == result.rows.size() ? 2 : 0;
}

int cmd_oracle_check(const std::string& inject) {
  const auto results = gdiff::run_oracle_checks(inject);
  int failures = 0;
  for (const auto& r : results) {
    std::printf("%-20s %s  error %.3e  tolerance %.1e%s%s\n", r.name.c_str(), r.passed ? "pass" : "FAIL", r.error,
                r.tolerance, r.detail.empty() ? "" : "  ", r.detail.c_str());
    failures += r.passed ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("%d suite(s) failed\n", failures);
    return 2;
  }
  std::printf("all %zu suites passed\n", results.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided diffusion sampler for linear inverse problems"};
  app.require_subcommand(1);

  CommonFlags solve_flags, train_flags, sweep_flags;
  auto* solve = app.add_subcommand("solve", "reconstruct from measurements with the guided sampler");
  add_common(solve, solve_flags);

  auto* train = app.add_subcommand("train", "train the score network on a dataset directory");
  add_common(train, train_flags);

  auto* sweep = app.add_subcommand("sweep", "solve over a grid of one guidance parameter");
  add_common(sweep, sweep_flags);
  std::optional<std::string> sweep_param, sweep_values;
  sweep->add_option("--param", sweep_param, "q1, q2 or eta (overrides sweep.param)");
  sweep->add_option("--values", sweep_values, "comma-separated values (overrides sweep.values)");

  auto* oracle = app.add_subcommand("oracle-check", "run the property suites against their oracles");
  std::string inject;
  oracle->add_option("--inject-fault", inject, "force the named suite to fail");

  auto* make = app.add_subcommand("make-dataset", "write the rectangle toy dataset");
  std::size_t count = 200, size = 8;
  std::uint64_t seed = 0;
  std::string out;
  bool previews = false;
  make->add_option("--count", count, "number of images");
  make->add_option("--size", size, "canvas side length");
  make->add_option("--seed", seed, "generator seed");
  make->add_option("--out", out, "output directory")->required();
  make->add_flag("--previews", previews, "also write .pgm previews");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve) return cmd_solve(solve_flags);
    if (*train) return cmd_train(train_flags);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_param, sweep_values);
    if (*oracle) return cmd_oracle_check(inject);
    if (*make) {
      gdiff::write_dataset(out, gdiff::generate_rectangles(count, size, seed), previews);
      std::cout << "wrote " << count << " items to " << out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    gdiff::log_error(e.what());
    return gdiff::exit_code_for(e);
  }
  return 1;
}
