// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/sampler.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <string>
#include <thread>

#include "gdiff/error.hpp"
#include "gdiff/rng.hpp"
#include "gdiff/tensor_io.hpp"

namespace gdiff {

Tensor ddpm_step_from_score(const NoiseSchedule& schedule, const Tensor& score, const Tensor& x_t, int t,
                            const Tensor& z) {
  require_same_size(x_t, score, "ddpm_step score");
  require_same_size(x_t, z, "ddpm_step noise");
  require_finite(score, "ddpm_step score");
  const double alpha = schedule.alpha(t);
  const double eps_coeff = (1.0 - alpha) / std::sqrt(1.0 - schedule.alpha_bar(t));
  const double inv_root_alpha = 1.0 / std::sqrt(alpha);
  const double sigma = schedule.sigma_tilde(t);
  Tensor out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv_root_alpha * (x_t[i] - eps_coeff * score[i]) + sigma * z[i];
  }
  return out;
}

Tensor ddpm_step(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t, const Tensor& z) {
  return ddpm_step_from_score(schedule, model.eval(x_t, t, schedule), x_t, t, z);
}

namespace {

void check_shape(const ScoreModel& model, const Shape& shape) {
  if (shape_size(shape) != model.dimension()) {
    throw InvalidArgument("sampler: shape " + shape_string(shape) + " does not match model dimension " +
                          std::to_string(model.dimension()));
  }
}

void check_state(const Tensor& x, int t) {
  if (!all_finite(x.data())) {
    throw DivergenceError("sampling chain diverged: non-finite state after step t = " + std::to_string(t));
  }
}

void record(SamplerRun& run, const SamplerOptions& options, const Tensor& x, int t) {
  if (!options.store_trajectory) return;
  run.trajectory.push_back(x);
  run.trajectory_steps.push_back(t);
}

}  // namespace

SamplerRun sample_unconditional(const NoiseSchedule& schedule, const ScoreModel& model, const Shape& shape,
                                const SamplerOptions& options) {
  check_shape(model, shape);
  SeededGenerator rng = SeededGenerator(options.seed).split(options.chain);
  SamplerRun run;
  run.seed = options.seed;
  run.chain = options.chain;
  Tensor x = rng.gaussian(shape);
  record(run, options, x, schedule.steps());
  for (int t = schedule.steps(); t >= 1; --t) {
    const Tensor z = rng.gaussian(shape);
    const Tensor score = model.eval(x, t, schedule);
    ++run.nfe_count;
    x = ddpm_step_from_score(schedule, score, x, t, z);
    check_state(x, t);
    record(run, options, x, t - 1);
  }
  run.x0 = std::move(x);
  return run;
}

SamplerRun sample_conditional(const NoiseSchedule& schedule, const ScoreModel& model, const Measurement& measurement,
                              const GuidanceConfig& config, const Shape& shape, const SamplerOptions& options) {
  check_shape(model, shape);
  config.validate(schedule);
  if (measurement.op.in_dim() != shape_size(shape)) {
    throw InvalidArgument("sampler: operator input size does not match the state");
  }
  SeededGenerator rng = SeededGenerator(options.seed).split(options.chain);
  SamplerRun run;
  run.seed = options.seed;
  run.chain = options.chain;
  Tensor x = rng.gaussian(shape);
  record(run, options, x, schedule.steps());
  for (int t = schedule.steps(); t >= 1; --t) {
    const Tensor z = rng.gaussian(shape);
    Tensor next;
    if (config.eta == 0.0) {
      // Guidance off: same score and noise as the unconditional chain.
      next = ddpm_step_from_score(schedule, model.eval(x, t, schedule), x, t, z);
      ++run.nfe_count;
    } else {
      const Linearization lin = model.linearize(x, t, schedule);
      ++run.nfe_count;
      next = ddpm_step_from_score(schedule, lin.value, x, t, z);
      const Tensor guide = guided_term_from(schedule, model, lin, x, t, measurement, config, &run.nfe_count);
      next.add_scaled(guide, config.eta);
    }
    check_state(next, t);
    x = std::move(next);
    record(run, options, x, t - 1);
  }
  run.x0 = std::move(x);
  return run;
}

std::vector<SamplerRun> run_chains(std::size_t count, std::size_t jobs,
                                   const std::function<SamplerRun(std::uint64_t chain)>& run_one) {
  std::vector<SamplerRun> runs(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        runs[i] = run_one(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

void write_trajectory(const SamplerRun& run, const std::filesystem::path& directory, const std::string& stem) {
  const auto data_path = directory / (stem + ".traj.gdt");
  const auto index_path = directory / (stem + ".traj.idx");
  std::ofstream data(data_path, std::ios::binary);
  std::ofstream index(index_path);
  if (!data || !index) throw IoError("cannot write trajectory files for '" + stem + "'");
  for (std::size_t f = 0; f < run.trajectory.size(); ++f) {
    index << f << ' ' << run.trajectory_steps[f] << ' ' << static_cast<long long>(data.tellp()) << '\n';
    write_tensor(data, run.trajectory[f]);
  }
  if (!data || !index) throw IoError("trajectory write failed for '" + stem + "'");
}

}  // namespace gdiff
