// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/mlp_score.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <string>

#include "gdiff/error.hpp"
#include "gdiff/log.hpp"
#include "gdiff/tensor_io.hpp"

namespace gdiff {

namespace {

constexpr char kWeightsMagic[4] = {'G', 'D', 'W', '1'};

struct ForwardCache {
  // acts[0] is the input; acts[l + 1] is the output of layer l.
  std::vector<Eigen::VectorXd> acts;
};

}  // namespace

MlpScoreNet::MlpScoreNet(std::size_t data_dim, const std::vector<std::size_t>& hidden, std::size_t time_features)
    : data_dim_(data_dim), time_features_(time_features) {
  if (data_dim == 0) throw InvalidArgument("MlpScoreNet: data dimension must be positive");
  std::vector<std::size_t> w{input_width()};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(data_dim);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    if (w[l + 1] == 0) throw InvalidArgument("MlpScoreNet: zero-width layer");
    layers_.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w[l + 1]), static_cast<Eigen::Index>(w[l])),
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w[l + 1]))});
  }
}

MlpScoreNet::MlpScoreNet(std::size_t data_dim, std::size_t time_features, std::vector<Layer> layers)
    : data_dim_(data_dim), time_features_(time_features), layers_(std::move(layers)) {
  validate();
}

void MlpScoreNet::validate() const {
  if (data_dim_ == 0) throw InvalidArgument("MlpScoreNet: data dimension must be positive");
  if (layers_.empty()) throw InvalidArgument("MlpScoreNet: no layers");
  std::size_t in = input_width();
  for (const Layer& layer : layers_) {
    if (static_cast<std::size_t>(layer.weight.cols()) != in || layer.bias.size() != layer.weight.rows() ||
        layer.weight.rows() == 0) {
      throw InvalidArgument("MlpScoreNet: layer shapes do not chain");
    }
    in = static_cast<std::size_t>(layer.weight.rows());
  }
  if (in != data_dim_) throw InvalidArgument("MlpScoreNet: output width must equal data dimension");
}

void MlpScoreNet::initialize(SeededGenerator& rng, double output_gain) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const double fan = static_cast<double>(layer.weight.rows() + layer.weight.cols());
    double scale = std::sqrt(2.0 / fan);
    if (l + 1 == layers_.size()) scale *= output_gain;
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = scale * rng.gaussian();
    }
    layer.bias.setZero();
  }
}

std::vector<std::size_t> MlpScoreNet::widths() const {
  std::vector<std::size_t> w{input_width()};
  for (const Layer& layer : layers_) w.push_back(static_cast<std::size_t>(layer.weight.rows()));
  return w;
}

std::size_t MlpScoreNet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

void MlpScoreNet::check_finite() const {
  for (const Layer& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) throw NumericError("MlpScoreNet: non-finite parameter");
  }
}

void MlpScoreNet::features(std::span<const double> x, int t, int steps, Eigen::Ref<Eigen::VectorXd> out) const {
  const double tau = static_cast<double>(t) / steps;
  for (std::size_t i = 0; i < data_dim_; ++i) out[static_cast<Eigen::Index>(i)] = x[i];
  Eigen::Index k = static_cast<Eigen::Index>(data_dim_);
  out[k++] = tau;
  double omega = std::numbers::pi / 2.0;
  for (std::size_t f = 0; f < time_features_; ++f, omega *= 2.0) {
    out[k++] = std::sin(omega * tau);
    out[k++] = std::cos(omega * tau);
  }
}

namespace {

ForwardCache forward(const MlpScoreNet& net, const Tensor& x, int t, const NoiseSchedule& schedule) {
  const auto& layers = net.layers();
  ForwardCache cache;
  cache.acts.reserve(layers.size() + 1);
  cache.acts.emplace_back(static_cast<Eigen::Index>(net.input_width()));
  net.features(x.data(), t, schedule.steps(), cache.acts.back());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].bias;
    z.noalias() += layers[l].weight * cache.acts.back();
    if (l + 1 < layers.size()) z = z.array().tanh().matrix();
    cache.acts.push_back(std::move(z));
  }
  return cache;
}

Tensor pullback(const MlpScoreNet& net, const ForwardCache& cache, const Tensor& v) {
  const auto& layers = net.layers();
  if (v.size() != net.dimension()) throw InvalidArgument("MlpScoreNet::vjp: cotangent size mismatch");
  require_finite(v, "MlpScoreNet::vjp cotangent");
  Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(v.data().data(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) g.array() *= 1.0 - cache.acts[l + 1].array().square();
    Eigen::VectorXd next;
    next.noalias() = layers[l].weight.transpose() * g;
    g = std::move(next);
  }
  Tensor out(v.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[static_cast<Eigen::Index>(i)];
  require_finite(out, "MlpScoreNet::vjp");
  return out;
}

Tensor output_tensor(const ForwardCache& cache, const Shape& shape) {
  const Eigen::VectorXd& o = cache.acts.back();
  Tensor out(shape, std::vector<double>(o.data(), o.data() + o.size()));
  require_finite(out, "MlpScoreNet::eval");
  return out;
}

}  // namespace

Tensor MlpScoreNet::eval(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  return output_tensor(forward(*this, x, t, schedule), x.shape());
}

Tensor MlpScoreNet::vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  return pullback(*this, forward(*this, x, t, schedule), v);
}

Linearization MlpScoreNet::linearize(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  auto cache = std::make_shared<const ForwardCache>(forward(*this, x, t, schedule));
  Linearization lin;
  lin.value = output_tensor(*cache, x.shape());
  lin.pullback = [this, cache](const Tensor& v) { return pullback(*this, *cache, v); };
  return lin;
}

TrainResult train_score_net(MlpScoreNet net, const NoiseSchedule& schedule, std::span<const Tensor> dataset,
                            const TrainConfig& config) {
  if (dataset.empty()) throw InvalidArgument("train_score_net: empty dataset");
  const std::size_t d = net.dimension();
  for (const Tensor& sample : dataset) {
    if (sample.size() != d) {
      throw InvalidArgument("train_score_net: dataset entry of size " + std::to_string(sample.size()) +
                            " does not match model dimension " + std::to_string(d));
    }
    require_finite(sample, "train_score_net dataset");
  }
  if (config.batch_size == 0) throw InvalidArgument("train_score_net: batch size must be positive");
  net.check_finite();

  auto& layers = net.mutable_layers();
  const std::size_t n_layers = layers.size();
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  std::vector<MlpScoreNet::Layer> velocity;
  for (const auto& layer : layers) {
    velocity.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  std::vector<MlpScoreNet::Layer> grad = velocity;
  std::vector<Eigen::MatrixXd> acts(n_layers + 1);
  Eigen::MatrixXd eps(static_cast<Eigen::Index>(d), batch);
  acts[0].resize(static_cast<Eigen::Index>(net.input_width()), batch);

  SeededGenerator rng(config.seed, 0x747261696eull);
  TrainResult result{net, {}};
  result.losses.reserve(config.steps);
  const int steps_t = schedule.steps();

  for (std::size_t step = 0; step < config.steps; ++step) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Tensor& x0 = dataset[rng.uniform_index(dataset.size())];
      const int t = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(steps_t)));
      const double a = std::sqrt(schedule.alpha_bar(t));
      const double s = std::sqrt(schedule.zeta(t));
      std::vector<double> xt(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double e = rng.gaussian();
        eps(static_cast<Eigen::Index>(i), b) = e;
        xt[i] = a * x0[i] + s * e;
      }
      net.features(xt, t, steps_t, acts[0].col(b));
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
      acts[l + 1].noalias() = layers[l].weight * acts[l];
      acts[l + 1].colwise() += layers[l].bias;
      if (l + 1 < n_layers) acts[l + 1] = acts[l + 1].array().tanh().matrix();
    }
    Eigen::MatrixXd g = acts[n_layers] - eps;
    const double loss = g.squaredNorm() / static_cast<double>(batch);
    if (!std::isfinite(loss)) {
      throw DivergenceError("train_score_net: loss became non-finite at step " + std::to_string(step));
    }
    result.losses.push_back(loss);
    g *= 2.0 / static_cast<double>(batch);

    double grad_sq = 0.0;
    for (std::size_t l = n_layers; l-- > 0;) {
      if (l + 1 < n_layers) g.array() *= 1.0 - acts[l + 1].array().square();
      grad[l].weight.noalias() = g * acts[l].transpose();
      grad[l].bias = g.rowwise().sum();
      grad_sq += grad[l].weight.squaredNorm() + grad[l].bias.squaredNorm();
      if (l > 0) {
        Eigen::MatrixXd next;
        next.noalias() = layers[l].weight.transpose() * g;
        g = std::move(next);
      }
    }
    double clip = 1.0;
    if (config.grad_clip > 0.0 && grad_sq > config.grad_clip * config.grad_clip) {
      clip = config.grad_clip / std::sqrt(grad_sq);
    }
    const double progress = config.steps > 1 ? static_cast<double>(step) / (config.steps - 1) : 0.0;
    const double lr = config.learning_rate * (1.0 - progress * (1.0 - config.final_lr_fraction));
    for (std::size_t l = 0; l < n_layers; ++l) {
      velocity[l].weight = config.momentum * velocity[l].weight + clip * grad[l].weight;
      velocity[l].bias = config.momentum * velocity[l].bias + clip * grad[l].bias;
      layers[l].weight -= lr * velocity[l].weight;
      layers[l].bias -= lr * velocity[l].bias;
    }
    if ((step + 1) % 1000 == 0) log_debug("train step " + std::to_string(step + 1) + " loss " + std::to_string(loss));
  }
  net.check_finite();
  result.net = std::move(net);
  return result;
}

void save_weights(const MlpScoreNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto widths = net.widths();
  out.write(kWeightsMagic, 4);
  auto put_u32 = [&out](std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(static_cast<std::uint32_t>(net.layers().size()));
  for (std::size_t w : widths) put_u32(static_cast<std::uint32_t>(w));
  for (const auto& layer : net.layers()) {
    const auto rows = static_cast<std::size_t>(layer.weight.rows());
    const auto cols = static_cast<std::size_t>(layer.weight.cols());
    std::vector<double> w(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        w[i * cols + j] = layer.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    write_tensor(out, Tensor({rows, cols}, std::move(w)));
    write_tensor(out, Tensor({rows}, std::vector<double>(layer.bias.data(), layer.bias.data() + rows)));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

MlpScoreNet load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights '" + path.string() + "'");
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("truncated weights file");
  if (std::memcmp(magic, kWeightsMagic, 4) != 0) throw FormatError("bad weights magic (expected GDW1)");
  auto get_u32 = [&in]() {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated weights manifest");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  };
  const std::uint32_t n_layers = get_u32();
  if (n_layers == 0 || n_layers > 64) throw FormatError("weights manifest: bad layer count");
  std::vector<std::size_t> widths(n_layers + 1);
  for (auto& w : widths) {
    w = get_u32();
    if (w == 0) throw FormatError("weights manifest: zero width");
  }
  const std::size_t d = widths.back();
  if (widths.front() < d + 1 || (widths.front() - d - 1) % 2 != 0) {
    throw FormatError("weights manifest: input width inconsistent with data dimension");
  }
  const std::size_t time_features = (widths.front() - d - 1) / 2;
  std::vector<MlpScoreNet::Layer> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const Tensor w = read_tensor(in);
    const Tensor b = read_tensor(in);
    const Shape want_w{widths[l + 1], widths[l]};
    const Shape want_b{widths[l + 1]};
    if (w.shape() != want_w || b.shape() != want_b) {
      throw FormatError("weights layer " + std::to_string(l) + " shape " + shape_string(w.shape()) +
                        " disagrees with manifest " + shape_string(want_w));
    }
    MlpScoreNet::Layer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(want_w[0]), static_cast<Eigen::Index>(want_w[1])),
                             Eigen::VectorXd(static_cast<Eigen::Index>(want_b[0]))};
    for (std::size_t i = 0; i < want_w[0]; ++i) {
      for (std::size_t j = 0; j < want_w[1]; ++j) {
        layer.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w[i * want_w[1] + j];
      }
      layer.bias[static_cast<Eigen::Index>(i)] = b[i];
    }
    layers.push_back(std::move(layer));
  }
  return MlpScoreNet(d, time_features, std::move(layers));
}

}  // namespace gdiff
