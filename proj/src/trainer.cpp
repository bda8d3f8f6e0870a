#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "eigenhearts/convnet.hpp"
#include "eigenhearts/error.hpp"

namespace eigenhearts {

TrainResult train(ConvNetModel model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> validation_set, const TrainConfig& config) {
  config.validate();
  model.arch.validate();
  if (train_set.empty()) fail(ErrorKind::Capacity, "training partition is empty");
  if (validation_set.empty()) fail(ErrorKind::Capacity, "validation partition is empty");

  RmspropState state = RmspropState::zeros(model.arch);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<Image> batch;
  std::vector<int> labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(train_set[order[i]].image);
        labels.push_back(train_set[order[i]].label.id);
      }
      LossAndGrad step;
      try {
        step = loss_and_grad(model, batch, labels);
      } catch (const Error& e) {
        fail(e.kind(), "epoch " + std::to_string(epoch) + ", batch starting at " + std::to_string(start) +
                           ": " + e.what());
      }
      loss_sum += step.loss * static_cast<double>(stop - start);
      correct += step.correct;
      rmsprop_step(model.params, step.grad, state, config);
      if (!model.params.all_finite()) {
        fail(ErrorKind::Numeric, "epoch " + std::to_string(epoch) + ": parameters became non-finite");
      }
    }
    const auto [val_loss, val_acc] = evaluate_loss(model, validation_set);
    const double n = static_cast<double>(train_set.size());
    result.history.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n, val_loss, val_acc});
  }
  result.model = std::move(model);
  return result;
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[160];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.train_accuracy,
                  e.validation_loss, e.validation_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace eigenhearts
