// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "gdiff/guidance.hpp"
#include "gdiff/operators.hpp"
#include "gdiff/schedule.hpp"
#include "gdiff/score.hpp"

namespace gdiff {

/// x' = (x_t - (1 - alpha_t) / sqrt(1 - abar_t) S) / sqrt(alpha_t) + sigma_t z
Tensor ddpm_step_from_score(const NoiseSchedule& schedule, const Tensor& score, const Tensor& x_t, int t,
                            const Tensor& z);
Tensor ddpm_step(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t, const Tensor& z);

struct SamplerOptions {
  std::uint64_t seed = 0;
  /// Chain index; the chain's generator is SeededGenerator(seed).split(chain).
  std::uint64_t chain = 0;
  bool store_trajectory = false;
};

struct SamplerRun {
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;
  Tensor x0;
  /// x_T, x_{T-1}, ..., x_0 when trajectories are stored.
  std::vector<Tensor> trajectory;
  std::vector<int> trajectory_steps;
  /// Score-model evaluations performed by the chain.
  long nfe_count = 0;
};

/// Ancestral DDPM sampling from x_T ~ N(0, I).
SamplerRun sample_unconditional(const NoiseSchedule& schedule, const ScoreModel& model, const Shape& shape,
                                const SamplerOptions& options);

/**
 * Guided sampling: each step draws z_t, evaluates the score once at
 * (x_t, t), forms the ancestral proposal x'_{t-1} from it, and adds
 * eta times the guided term evaluated at x_t. A non-finite state throws
 * DivergenceError naming the step.
 *
 * Both samplers consume the generator identically, so eta -> 0 recovers
 * the unconditional chain for the same seed.
 */
SamplerRun sample_conditional(const NoiseSchedule& schedule, const ScoreModel& model, const Measurement& measurement,
                              const GuidanceConfig& config, const Shape& shape, const SamplerOptions& options);

/// Runs chains 0..count-1 on up to `jobs` threads; results are in chain order.
/// The first failure (by chain index) is rethrown after all workers stop.
std::vector<SamplerRun> run_chains(std::size_t count, std::size_t jobs,
                                   const std::function<SamplerRun(std::uint64_t chain)>& run_one);

/// Writes `<stem>.traj.gdt` (concatenated GDT1 frames) and `<stem>.traj.idx`
/// (one "frame step byte_offset" line per frame).
void write_trajectory(const SamplerRun& run, const std::filesystem::path& directory, const std::string& stem);

}  // namespace gdiff
