// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gdiff/rng.hpp"
#include "gdiff/score.hpp"

namespace gdiff {

/**
 * Fully connected noise-prediction network.
 *
 * Input is [x, t/T, sin(w_k t/T), cos(w_k t/T) for k < F] with
 * w_k = pi * 2^(k-1); hidden layers use tanh and the output layer is
 * affine with width equal to dim(x). vjp runs reverse-mode accumulation
 * through the cached forward activations.
 */
class MlpScoreNet : public ScoreModel {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  ///< out x in
    Eigen::VectorXd bias;
  };

  /// All parameters zero.
  MlpScoreNet(std::size_t data_dim, const std::vector<std::size_t>& hidden, std::size_t time_features);
  /// Adopts explicit layers; widths must chain and end at data_dim.
  MlpScoreNet(std::size_t data_dim, std::size_t time_features, std::vector<Layer> layers);

  /// Glorot-normal weights, zero biases; the output layer is scaled by `output_gain`.
  void initialize(SeededGenerator& rng, double output_gain = 1.0);

  std::size_t dimension() const override { return data_dim_; }
  std::size_t time_features() const { return time_features_; }
  std::size_t input_width() const { return data_dim_ + 1 + 2 * time_features_; }
  /// Layer widths, input first.
  std::vector<std::size_t> widths() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::size_t parameter_count() const;

  Tensor eval(const Tensor& x, int t, const NoiseSchedule& schedule) const override;
  Tensor vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const override;
  Linearization linearize(const Tensor& x, int t, const NoiseSchedule& schedule) const override;

  /// Writes the input features for (x, t) into `out` (size input_width()).
  void features(std::span<const double> x, int t, int steps, Eigen::Ref<Eigen::VectorXd> out) const;

  /// Throws NumericError when any parameter is NaN or infinite.
  void check_finite() const;

 private:
  void validate() const;

  std::size_t data_dim_;
  std::size_t time_features_;
  std::vector<Layer> layers_;
};

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  /// Learning rate decays linearly to learning_rate * final_lr_fraction.
  double final_lr_fraction = 1.0;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MlpScoreNet net;
  /// Mean minibatch loss per step.
  std::vector<double> losses;
};

/**
 * Denoising score matching with SGD + momentum: minimizes
 * E || net(sqrt(abar_t) x0 + sqrt(zeta_t) eps, t) - eps ||^2 over
 * x0 drawn from the dataset, t ~ U{1..T} and eps ~ N(0, I).
 * Throws DivergenceError if the loss becomes non-finite.
 */
TrainResult train_score_net(MlpScoreNet net, const NoiseSchedule& schedule, std::span<const Tensor> dataset,
                            const TrainConfig& config);

/// "GDW1" manifest (layer count, widths as u32 LE) followed by weight and
/// bias GDT1 tensors per layer.
void save_weights(const MlpScoreNet& net, const std::filesystem::path& path);
MlpScoreNet load_weights(const std::filesystem::path& path);

}  // namespace gdiff
