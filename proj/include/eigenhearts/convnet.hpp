#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eigenhearts/dataset.hpp"
#include "eigenhearts/evaluator.hpp"
#include "eigenhearts/image.hpp"

namespace eigenhearts {

/// Three 3x3 same-padded conv stages (each conv -> ReLU -> 2x2 max-pool),
/// then dense + ReLU and dense + softmax.
struct ConvNetArch {
  std::size_t height = 64;
  std::size_t width = 64;
  std::array<std::size_t, 3> conv_channels = {32, 64, 64};
  std::size_t dense_hidden = 128;
  std::size_t classes = 5;

  void validate() const;
  std::size_t flatten_size() const { return (height / 8) * (width / 8) * conv_channels[2]; }
  std::size_t parameter_count() const;

  friend bool operator==(const ConvNetArch&, const ConvNetArch&) = default;
};

/// Parses `c1,c2,c3,hidden`.
void parse_arch_channels(const std::string& text, ConvNetArch& arch);

/// Network tensors. Conv weights are (out channels) x (in channels * 9) with
/// column index in_channel * 9 + 3 * dy + dx. The same struct holds
/// gradients and optimizer state.
struct ConvNetParams {
  std::array<Eigen::MatrixXd, 3> conv_weight;
  std::array<Eigen::VectorXd, 3> conv_bias;
  Eigen::MatrixXd dense1_weight;  // hidden x flatten
  Eigen::VectorXd dense1_bias;
  Eigen::MatrixXd dense2_weight;  // classes x hidden
  Eigen::VectorXd dense2_bias;

  static ConvNetParams zeros(const ConvNetArch& arch);

  /// Visits every tensor in declaration order: conv weight/bias pairs,
  /// then the two dense layers.
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t l = 0; l < 3; ++l) {
      f(conv_weight[l]);
      f(conv_bias[l]);
    }
    f(dense1_weight);
    f(dense1_bias);
    f(dense2_weight);
    f(dense2_bias);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<ConvNetParams*>(this)->for_each([&](const auto& t) { f(t); });
  }

  std::size_t size() const;
  bool all_finite() const;
};

struct ConvNetModel {
  ConvNetArch arch;
  ConvNetParams params;
  std::uint64_t seed = 0;
};

/// Weights ~ N(0, 2 / fan_in), biases zero.
ConvNetModel init_model(const ConvNetArch& arch, std::uint64_t seed);

/// Class probabilities, one row per image.
Eigen::MatrixXd forward(const ConvNetModel& model, std::span<const Image> batch);

struct LossAndGrad {
  double loss = 0.0;
  ConvNetParams grad;
  std::size_t correct = 0;  // argmax hits in the batch
};

/// Mean categorical cross-entropy over the batch and its gradient.
LossAndGrad loss_and_grad(const ConvNetModel& model, std::span<const Image> batch,
                          std::span<const int> labels);

/// Same, with labels given one-hot (one row per image).
LossAndGrad loss_and_grad(const ConvNetModel& model, std::span<const Image> batch,
                          const Eigen::MatrixXd& one_hot);

struct TrainConfig {
  std::size_t epochs = 80;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-7;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct RmspropState {
  ConvNetParams mean_square;

  static RmspropState zeros(const ConvNetArch& arch) { return {ConvNetParams::zeros(arch)}; }
};

/// s <- rho s + (1 - rho) g^2;  theta <- theta - lr g / (sqrt(s) + eps).
void rmsprop_step(ConvNetParams& params, const ConvNetParams& grad, RmspropState& state,
                  const TrainConfig& config);

/// Scalar form of the update, for hand checks.
void rmsprop_update(Eigen::Ref<Eigen::ArrayXd> theta, Eigen::Ref<Eigen::ArrayXd> mean_square,
                    const Eigen::Ref<const Eigen::ArrayXd>& grad, const TrainConfig& config);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

using TrainHistory = std::vector<EpochMetrics>;

struct TrainResult {
  ConvNetModel model;
  TrainHistory history;
};

/// Mini-batch training with RMSprop. Training metrics are running averages
/// over the epoch's batches; validation metrics come from a full pass after
/// the epoch. Returns the last-epoch model.
TrainResult train(ConvNetModel model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> validation_set, const TrainConfig& config);

/// Mean loss and accuracy of the model over a partition.
std::pair<double, double> evaluate_loss(const ConvNetModel& model, std::span<const LabeledImage> items);

/// Argmax of the class probabilities, lowest class id on ties.
std::vector<LabelPair> predict(const ConvNetModel& model, std::span<const LabeledImage> items);

std::string history_csv(const TrainHistory& history);

/// Checkpoint: "EHCN", u32 version, arch (u64 height, width, c1, c2, c3,
/// hidden, classes), u64 seed, then every tensor in declaration order as
/// column-major float64, little-endian.
std::string encode_model(const ConvNetModel& model);
ConvNetModel decode_model(const std::string& bytes, const std::string& name = "<memory>");
void save_model(const std::filesystem::path& path, const ConvNetModel& model);
ConvNetModel load_model(const std::filesystem::path& path);

}  // namespace eigenhearts
