#include <cmath>
#include <random>

#include "eigenhearts/conv_ops.hpp"
#include "eigenhearts/convnet.hpp"
#include "eigenhearts/error.hpp"

namespace eigenhearts {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void ConvNetArch::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorKind::Config, "network architecture: " + why); };
  if (height == 0 || width == 0 || height % 8 != 0 || width % 8 != 0) {
    bad("input " + std::to_string(height) + "x" + std::to_string(width) + " must be divisible by 8");
  }
  for (std::size_t c : conv_channels) {
    if (c == 0) bad("conv channels must be positive");
  }
  if (dense_hidden == 0) bad("dense hidden units must be positive");
  if (classes < 2) bad("need at least two classes");
}

std::size_t ConvNetArch::parameter_count() const {
  std::size_t count = 0;
  std::size_t in = 1;
  for (std::size_t out : conv_channels) {
    count += out * in * 9 + out;
    in = out;
  }
  count += dense_hidden * flatten_size() + dense_hidden;
  count += classes * dense_hidden + classes;
  return count;
}

void parse_arch_channels(const std::string& text, ConvNetArch& arch) {
  std::vector<std::size_t> values;
  std::size_t start = 0;
  try {
    while (start <= text.size()) {
      const std::size_t comma = text.find(',', start);
      const std::string field = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      std::size_t used = 0;
      values.push_back(std::stoul(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error&) {
    fail(ErrorKind::Config, "bad --arch '" + text + "', expected c1,c2,c3,hidden");
  }
  if (values.size() != 4) fail(ErrorKind::Config, "bad --arch '" + text + "', expected c1,c2,c3,hidden");
  arch.conv_channels = {values[0], values[1], values[2]};
  arch.dense_hidden = values[3];
}

ConvNetParams ConvNetParams::zeros(const ConvNetArch& arch) {
  ConvNetParams p;
  Index in = 1;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto out = static_cast<Index>(arch.conv_channels[l]);
    p.conv_weight[l] = MatrixXd::Zero(out, in * 9);
    p.conv_bias[l] = VectorXd::Zero(out);
    in = out;
  }
  const auto hidden = static_cast<Index>(arch.dense_hidden);
  const auto classes = static_cast<Index>(arch.classes);
  p.dense1_weight = MatrixXd::Zero(hidden, static_cast<Index>(arch.flatten_size()));
  p.dense1_bias = VectorXd::Zero(hidden);
  p.dense2_weight = MatrixXd::Zero(classes, hidden);
  p.dense2_bias = VectorXd::Zero(classes);
  return p;
}

std::size_t ConvNetParams::size() const {
  std::size_t n = 0;
  for_each([&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool ConvNetParams::all_finite() const {
  bool ok = true;
  for_each([&](const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

ConvNetModel init_model(const ConvNetArch& arch, std::uint64_t seed) {
  arch.validate();
  ConvNetModel model{arch, ConvNetParams::zeros(arch), seed};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](MatrixXd& w) {
    const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Index c = 0; c < w.cols(); ++c) {
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = scale * normal(rng);
    }
  };
  for (auto& w : model.params.conv_weight) fill(w);
  fill(model.params.dense1_weight);
  fill(model.params.dense2_weight);
  return model;
}

namespace ops {

MatrixXd im2col(const MatrixXd& input, Index h, Index w) {
  MatrixXd cols = MatrixXd::Zero(h * w, input.cols() * 9);
  for (Index c = 0; c < input.cols(); ++c) {
    const double* src = input.col(c).data();
    for (Index dy = 0; dy < 3; ++dy) {
      for (Index dx = 0; dx < 3; ++dx) {
        double* dst = cols.col(c * 9 + dy * 3 + dx).data();
        for (Index y = 0; y < h; ++y) {
          const Index sy = y + dy - 1;
          if (sy < 0 || sy >= h) continue;
          const Index x0 = dx == 0 ? 1 : 0;
          const Index x1 = dx == 2 ? w - 1 : w;
          for (Index x = x0; x < x1; ++x) dst[y * w + x] = src[sy * w + x + dx - 1];
        }
      }
    }
  }
  return cols;
}

MatrixXd col2im(const MatrixXd& cols, Index channels, Index h, Index w) {
  MatrixXd input = MatrixXd::Zero(h * w, channels);
  for (Index c = 0; c < channels; ++c) {
    double* dst = input.col(c).data();
    for (Index dy = 0; dy < 3; ++dy) {
      for (Index dx = 0; dx < 3; ++dx) {
        const double* src = cols.col(c * 9 + dy * 3 + dx).data();
        for (Index y = 0; y < h; ++y) {
          const Index sy = y + dy - 1;
          if (sy < 0 || sy >= h) continue;
          const Index x0 = dx == 0 ? 1 : 0;
          const Index x1 = dx == 2 ? w - 1 : w;
          for (Index x = x0; x < x1; ++x) dst[sy * w + x + dx - 1] += src[y * w + x];
        }
      }
    }
  }
  return input;
}

PoolResult max_pool(const MatrixXd& input, Index h, Index w) {
  const Index oh = h / 2;
  const Index ow = w / 2;
  PoolResult r{MatrixXd(oh * ow, input.cols()), IndexMatrix(oh * ow, input.cols())};
  for (Index c = 0; c < input.cols(); ++c) {
    const double* z = input.col(c).data();
    for (Index y = 0; y < oh; ++y) {
      for (Index x = 0; x < ow; ++x) {
        Index best = (2 * y) * w + 2 * x;
        const Index candidates[3] = {best + 1, best + w, best + w + 1};
        for (Index at : candidates) {
          if (z[at] > z[best]) best = at;
        }
        r.pooled(y * ow + x, c) = z[best];
        r.argmax(y * ow + x, c) = best;
      }
    }
  }
  return r;
}

MatrixXd unpool(const MatrixXd& grad_pooled, const IndexMatrix& argmax, Index input_pixels) {
  MatrixXd grad = MatrixXd::Zero(input_pixels, grad_pooled.cols());
  for (Index c = 0; c < grad_pooled.cols(); ++c) {
    for (Index o = 0; o < grad_pooled.rows(); ++o) grad(argmax(o, c), c) += grad_pooled(o, c);
  }
  return grad;
}

}  // namespace ops

namespace {

struct Stage {
  MatrixXd columns;
  MatrixXd pre;  // conv output before ReLU
  ops::IndexMatrix argmax;
  MatrixXd pooled;
  Index h = 0;
  Index w = 0;
};

struct Trace {
  std::array<Stage, 3> stages;
  VectorXd flat;
  VectorXd hidden_pre;
  VectorXd hidden;
  VectorXd logits;
  VectorXd probabilities;
  double log_normalizer = 0.0;  // max + log sum exp(logits - max)
};

void check_layer(const MatrixXd& m, int layer) {
  if (!m.allFinite()) fail(ErrorKind::Numeric, "non-finite activation at layer " + std::to_string(layer));
}

Trace run_forward(const ConvNetModel& model, const Image& image) {
  const ConvNetArch& arch = model.arch;
  if (image.height != arch.height || image.width != arch.width) {
    fail(ErrorKind::Format, "image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                                ", network expects " + std::to_string(arch.height) + "x" +
                                std::to_string(arch.width));
  }
  const ConvNetParams& p = model.params;
  Trace t;
  MatrixXd input = image.pixels;  // one channel
  Index h = static_cast<Index>(arch.height);
  Index w = static_cast<Index>(arch.width);
  for (std::size_t l = 0; l < 3; ++l) {
    Stage& s = t.stages[l];
    s.h = h;
    s.w = w;
    s.columns = ops::im2col(input, h, w);
    s.pre.noalias() = s.columns * p.conv_weight[l].transpose();
    s.pre.rowwise() += p.conv_bias[l].transpose();
    check_layer(s.pre, static_cast<int>(l) + 1);
    auto pool = ops::max_pool(s.pre.cwiseMax(0.0), h, w);
    s.pooled = std::move(pool.pooled);
    s.argmax = std::move(pool.argmax);
    input = s.pooled;
    h /= 2;
    w /= 2;
  }
  const MatrixXd& last = t.stages[2].pooled;
  t.flat = Eigen::Map<const VectorXd>(last.data(), last.size());
  t.hidden_pre.noalias() = p.dense1_weight * t.flat;
  t.hidden_pre += p.dense1_bias;
  check_layer(t.hidden_pre, 4);
  t.hidden = t.hidden_pre.cwiseMax(0.0);
  t.logits.noalias() = p.dense2_weight * t.hidden;
  t.logits += p.dense2_bias;
  check_layer(t.logits, 5);
  const double top = t.logits.maxCoeff();
  const VectorXd shifted = (t.logits.array() - top).exp().matrix();
  const double sum = shifted.sum();
  t.probabilities = shifted / sum;
  t.log_normalizer = top + std::log(sum);
  return t;
}

void check_batch(const ConvNetModel& model, std::span<const Image> batch) {
  if (batch.empty()) fail(ErrorKind::Capacity, "empty batch");
  model.arch.validate();
}

Index argmax_lowest(const VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

Eigen::MatrixXd forward(const ConvNetModel& model, std::span<const Image> batch) {
  check_batch(model, batch);
  MatrixXd probabilities(static_cast<Index>(batch.size()), static_cast<Index>(model.arch.classes));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    probabilities.row(static_cast<Index>(i)) = run_forward(model, batch[i]).probabilities.transpose();
  }
  return probabilities;
}

LossAndGrad loss_and_grad(const ConvNetModel& model, std::span<const Image> batch,
                          std::span<const int> labels) {
  check_batch(model, batch);
  if (labels.size() != batch.size()) fail(ErrorKind::Format, "labels do not align with batch");
  const ConvNetParams& p = model.params;
  LossAndGrad out{0.0, ConvNetParams::zeros(model.arch), 0};
  ConvNetParams& g = out.grad;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= model.arch.classes) {
      fail(ErrorKind::Roster, "label " + std::to_string(label) + " outside the network's classes");
    }
    const Trace t = run_forward(model, batch[i]);
    out.loss += (t.log_normalizer - t.logits[label]) * inv_batch;
    if (argmax_lowest(t.probabilities) == label) ++out.correct;

    // softmax + cross-entropy
    VectorXd d_logits = t.probabilities;
    d_logits[label] -= 1.0;
    d_logits *= inv_batch;
    g.dense2_weight.noalias() += d_logits * t.hidden.transpose();
    g.dense2_bias += d_logits;

    VectorXd d_hidden = p.dense2_weight.transpose() * d_logits;
    for (Index k = 0; k < d_hidden.size(); ++k) {
      if (!(t.hidden_pre[k] > 0.0)) d_hidden[k] = 0.0;
    }
    g.dense1_weight.noalias() += d_hidden * t.flat.transpose();
    g.dense1_bias += d_hidden;

    const VectorXd d_flat = p.dense1_weight.transpose() * d_hidden;
    const Stage& last = t.stages[2];
    MatrixXd d_pooled = Eigen::Map<const MatrixXd>(d_flat.data(), last.pooled.rows(), last.pooled.cols());

    for (int l = 2; l >= 0; --l) {
      const Stage& s = t.stages[static_cast<std::size_t>(l)];
      MatrixXd d_pre = ops::unpool(d_pooled, s.argmax, s.pre.rows());
      d_pre = (s.pre.array() > 0.0).select(d_pre, 0.0);
      g.conv_weight[static_cast<std::size_t>(l)].noalias() += d_pre.transpose() * s.columns;
      g.conv_bias[static_cast<std::size_t>(l)] += d_pre.colwise().sum().transpose();
      if (l > 0) {
        const MatrixXd d_columns = d_pre * p.conv_weight[static_cast<std::size_t>(l)];
        d_pooled = ops::col2im(d_columns, p.conv_weight[static_cast<std::size_t>(l)].cols() / 9, s.h, s.w);
      }
    }
  }
  if (!std::isfinite(out.loss)) fail(ErrorKind::Numeric, "non-finite loss");
  return out;
}

LossAndGrad loss_and_grad(const ConvNetModel& model, std::span<const Image> batch,
                          const Eigen::MatrixXd& one_hot) {
  if (one_hot.rows() != static_cast<Index>(batch.size()) ||
      one_hot.cols() != static_cast<Index>(model.arch.classes)) {
    fail(ErrorKind::Format, "one-hot labels do not match batch and class count");
  }
  std::vector<int> labels(batch.size());
  for (Index i = 0; i < one_hot.rows(); ++i) {
    Index hot = 0;
    if (one_hot.row(i).maxCoeff(&hot) != 1.0 || one_hot.row(i).sum() != 1.0) {
      fail(ErrorKind::Format, "row " + std::to_string(i) + " is not one-hot");
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(hot);
  }
  return loss_and_grad(model, batch, labels);
}

std::vector<LabelPair> predict(const ConvNetModel& model, std::span<const LabeledImage> items) {
  std::vector<LabelPair> pairs;
  pairs.reserve(items.size());
  for (const auto& item : items) {
    const Trace t = run_forward(model, item.image);
    pairs.push_back({item.label.id, static_cast<int>(argmax_lowest(t.probabilities))});
  }
  return pairs;
}

std::pair<double, double> evaluate_loss(const ConvNetModel& model, std::span<const LabeledImage> items) {
  if (items.empty()) fail(ErrorKind::Capacity, "cannot evaluate an empty partition");
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& item : items) {
    const Trace t = run_forward(model, item.image);
    loss += t.log_normalizer - t.logits[item.label.id];
    if (argmax_lowest(t.probabilities) == item.label.id) ++correct;
  }
  const double n = static_cast<double>(items.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace eigenhearts
