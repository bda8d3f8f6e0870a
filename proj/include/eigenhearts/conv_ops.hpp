#pragma once

#include <Eigen/Dense>

// Building blocks of the network. Feature maps are (pixels x channels) with
// pixels row-major inside each channel column.
namespace eigenhearts::ops {

using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

/// Same-padded 3x3 patches: row = output pixel, column = channel*9 + 3*dy + dx.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& input, Eigen::Index height, Eigen::Index width);

/// Adjoint of im2col: scatters patch gradients back onto the input grid.
Eigen::MatrixXd col2im(const Eigen::MatrixXd& columns, Eigen::Index channels, Eigen::Index height,
                       Eigen::Index width);

struct PoolResult {
  Eigen::MatrixXd pooled;
  IndexMatrix argmax;  // input pixel chosen for each output cell
};

/// 2x2 stride-2 max pool. The window is scanned row-major and the first
/// maximum wins.
PoolResult max_pool(const Eigen::MatrixXd& input, Eigen::Index height, Eigen::Index width);

/// Routes each pooled gradient to its window's argmax.
Eigen::MatrixXd unpool(const Eigen::MatrixXd& grad_pooled, const IndexMatrix& argmax, Eigen::Index input_pixels);

}  // namespace eigenhearts::ops
