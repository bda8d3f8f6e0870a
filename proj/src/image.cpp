#include "eigenhearts/image.hpp"

#include <cmath>

#include "eigenhearts/error.hpp"

namespace eigenhearts {

namespace {

void check_shape(const Image& image) {
  if (image.height == 0 || image.width == 0 ||
      static_cast<std::size_t>(image.pixels.size()) != image.height * image.width) {
    fail(ErrorKind::Format, "image shape " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " does not match " +
                                std::to_string(image.pixels.size()) + " pixels");
  }
}

}  // namespace

void check_unit_image(const Image& image) {
  check_shape(image);
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
    const double v = image.pixels[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      fail(ErrorKind::Format, "pixel " + std::to_string(i) + " outside [0,1]: " + std::to_string(v));
    }
  }
}

void check_finite_image(const Image& image) {
  check_shape(image);
  if (!image.pixels.allFinite()) fail(ErrorKind::Numeric, "image contains non-finite pixels");
}

Eigen::VectorXd flatten_image(const Image& image) { return image.pixels; }

Image unflatten_image(const Eigen::Ref<const Eigen::VectorXd>& column, std::size_t height,
                      std::size_t width) {
  if (static_cast<std::size_t>(column.size()) != height * width) {
    fail(ErrorKind::Format, "cannot reshape " + std::to_string(column.size()) + " values into " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  Image out;
  out.height = height;
  out.width = width;
  out.pixels = column;
  return out;
}

Eigen::MatrixXd assemble_snapshot_matrix(std::span<const Image> frames) {
  if (frames.empty()) fail(ErrorKind::Capacity, "snapshot matrix needs at least one frame");
  const Image& first = frames.front();
  Eigen::MatrixXd snapshots(static_cast<Eigen::Index>(first.size()),
                            static_cast<Eigen::Index>(frames.size()));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (!frames[k].same_shape(first)) {
      fail(ErrorKind::Format, "frame " + std::to_string(k) + " is " +
                                  std::to_string(frames[k].height) + "x" +
                                  std::to_string(frames[k].width) + ", expected " +
                                  std::to_string(first.height) + "x" + std::to_string(first.width));
    }
    snapshots.col(static_cast<Eigen::Index>(k)) = frames[k].pixels;
  }
  return snapshots;
}

std::vector<ClassLabel> cardiac_roster() {
  return {{0, "H"}, {1, "DC"}, {2, "MI"}, {3, "Ob"}, {4, "HT"}};
}

}  // namespace eigenhearts
