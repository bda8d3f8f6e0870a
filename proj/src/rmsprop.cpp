#include <cmath>

#include "eigenhearts/convnet.hpp"
#include "eigenhearts/error.hpp"

namespace eigenhearts {

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::Config, "batch size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorKind::Config, "learning rate must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) fail(ErrorKind::Config, "RMSprop decay must lie in [0,1)");
  if (!(epsilon > 0.0)) fail(ErrorKind::Config, "RMSprop epsilon must be > 0");
}

void rmsprop_update(Eigen::Ref<Eigen::ArrayXd> theta, Eigen::Ref<Eigen::ArrayXd> mean_square,
                    const Eigen::Ref<const Eigen::ArrayXd>& grad, const TrainConfig& config) {
  mean_square = config.rho * mean_square + (1.0 - config.rho) * grad.square();
  theta -= config.learning_rate * grad / (mean_square.sqrt() + config.epsilon);
}

void rmsprop_step(ConvNetParams& params, const ConvNetParams& grad, RmspropState& state,
                  const TrainConfig& config) {
  std::vector<Eigen::Map<Eigen::ArrayXd>> theta;
  std::vector<Eigen::Map<Eigen::ArrayXd>> square;
  std::vector<Eigen::Map<const Eigen::ArrayXd>> g;
  params.for_each([&](auto& t) { theta.emplace_back(t.data(), t.size()); });
  state.mean_square.for_each([&](auto& t) { square.emplace_back(t.data(), t.size()); });
  grad.for_each([&](const auto& t) { g.emplace_back(t.data(), t.size()); });
  if (theta.size() != g.size() || square.size() != g.size()) {
    fail(ErrorKind::Format, "optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (theta[i].size() != g[i].size() || square[i].size() != g[i].size()) {
      fail(ErrorKind::Format, "optimizer state tensor " + std::to_string(i) + " has the wrong size");
    }
    rmsprop_update(theta[i], square[i], g[i], config);
  }
}

}  // namespace eigenhearts
