#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eigenhearts {

/// One grayscale frame. Pixels are stored row-major; loaded frames hold
/// intensities in [0, 1], projected frames are only required to be finite.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  Eigen::VectorXd pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w)
      : height(h), width(w), pixels(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h * w))) {}

  std::size_t size() const { return height * width; }

  double& operator()(std::size_t row, std::size_t col) {
    return pixels[static_cast<Eigen::Index>(row * width + col)];
  }
  double operator()(std::size_t row, std::size_t col) const {
    return pixels[static_cast<Eigen::Index>(row * width + col)];
  }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && a.pixels == b.pixels;
  }
};

/// Throws a format error unless the image is well formed with every pixel
/// finite and inside [0, 1].
void check_unit_image(const Image& image);

/// Throws a numeric error unless every pixel is finite.
void check_finite_image(const Image& image);

Eigen::VectorXd flatten_image(const Image& image);

Image unflatten_image(const Eigen::Ref<const Eigen::VectorXd>& column, std::size_t height,
                      std::size_t width);

/// Column-stacks flattened frames into a J x K matrix, column k = frame k.
Eigen::MatrixXd assemble_snapshot_matrix(std::span<const Image> frames);

struct ClassLabel {
  int id = 0;
  std::string code;

  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

/// The classes used by the echocardiography configuration, in roster order.
std::vector<ClassLabel> cardiac_roster();

}  // namespace eigenhearts
