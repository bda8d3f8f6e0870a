#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eigenhearts/dataset.hpp"
#include "eigenhearts/image.hpp"
#include "eigenhearts/svd.hpp"

namespace eigenhearts {

/// Mean-centered POD basis of one class ("eigenhearts").
template <typename Scalar>
struct EigenBasis {
  ClassLabel label;
  Vector<Scalar> mean;
  Matrix<Scalar> basis;  // J x r', orthonormal columns
  Vector<Scalar> singular_values;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t training_frames = 0;
  // Set when the centered ensemble was zero and the basis is a placeholder.
  bool degenerate = false;

  Eigen::Index rank() const { return basis.cols(); }
  Eigen::Index pixels() const { return mean.size(); }

  /// W W^T x for a centered column.
  template <typename Derived>
  Vector<Scalar> project_centered(const Eigen::MatrixBase<Derived>& centered) const {
    return basis * (basis.transpose() * centered);
  }
};

struct LibraryProvenance {
  std::string source;
  std::string rule;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  friend bool operator==(const LibraryProvenance&, const LibraryProvenance&) = default;
};

template <typename Scalar>
struct EigenBasisLibrary {
  std::vector<EigenBasis<Scalar>> bases;  // ordered by class id
  std::size_t height = 0;
  std::size_t width = 0;
  LibraryProvenance provenance;

  const EigenBasis<Scalar>* find(int class_id) const {
    for (const auto& b : bases) {
      if (b.label.id == class_id) return &b;
    }
    return nullptr;
  }

  const EigenBasis<Scalar>& at(const ClassLabel& label) const {
    if (const auto* b = find(label.id)) return *b;
    fail(ErrorKind::Config, "library has no basis for class " + label.code + " (id " +
                                std::to_string(label.id) + ")");
  }
};

namespace detail {

template <typename Scalar>
Vector<Scalar> image_column(const Image& image) {
  return image.pixels.template cast<Scalar>();
}

inline void check_frame_shape(const Image& image, std::size_t height, std::size_t width) {
  if (image.height != height || image.width != width) {
    fail(ErrorKind::Format, "image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                                ", basis expects " + std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace detail

/// Mean-subtracts the class snapshot matrix, decomposes it and keeps the
/// leading vectors selected by `rule`.
///
/// An ensemble of identical frames has a zero centered matrix; the basis then
/// falls back to the first canonical direction with `degenerate` set.
template <typename Scalar>
EigenBasis<Scalar> build_class_basis(std::span<const Image> frames, const ClassLabel& label,
                                     const TruncationRule& rule) {
  if (frames.empty()) fail(ErrorKind::Capacity, "class " + label.code + " has no frames to build a basis");
  const Matrix<Scalar> snapshots = assemble_snapshot_matrix(frames).template cast<Scalar>();

  EigenBasis<Scalar> out;
  out.label = label;
  out.height = frames.front().height;
  out.width = frames.front().width;
  out.training_frames = frames.size();
  out.mean = snapshots.rowwise().mean();
  const Matrix<Scalar> centered = snapshots.colwise() - out.mean;

  const SvdFactors<Scalar> full = svd<Scalar>(centered);
  // Centering identical frames leaves only round-off of the mean.
  constexpr double kZeroEnsemble = 1e-12;
  if (full.rank() == 0 || full.singular_values[0] <= Scalar(kZeroEnsemble) * snapshots.norm()) {
    out.basis = Matrix<Scalar>::Zero(snapshots.rows(), 1);
    out.basis(0, 0) = Scalar(1);
    out.singular_values = Vector<Scalar>::Zero(1);
    out.degenerate = true;
    return out;
  }
  const SvdFactors<Scalar> kept = truncate(full, rule);
  out.basis = kept.left;
  out.singular_values = kept.singular_values;
  return out;
}

/// Builds one basis per class from the given (training) images.
template <typename Scalar>
EigenBasisLibrary<Scalar> build_library(std::span<const LabeledImage> images,
                                        const std::vector<ClassLabel>& roster, const TruncationRule& rule,
                                        LibraryProvenance provenance = {}) {
  EigenBasisLibrary<Scalar> library;
  provenance.rule = describe(rule);
  for (const ClassLabel& label : roster) {
    std::vector<Image> frames;
    for (const auto& item : images) {
      if (item.label.id == label.id) frames.push_back(item.image);
    }
    if (frames.empty()) fail(ErrorKind::Capacity, "no training frames for class " + label.code);
    auto basis = build_class_basis<Scalar>(frames, label, rule);
    if (library.bases.empty()) {
      library.height = basis.height;
      library.width = basis.width;
    } else if (basis.height != library.height || basis.width != library.width) {
      fail(ErrorKind::Format, "class " + label.code + " frames differ in size from other classes");
    }
    if (basis.degenerate) {
      provenance.warnings.push_back("class " + label.code +
                                    ": identical frames, basis replaced by the first canonical direction");
    }
    library.bases.push_back(std::move(basis));
  }
  library.provenance = std::move(provenance);
  return library;
}

/// mean + W W^T (x - mean), reshaped to the frame. The result is not clamped.
template <typename Scalar>
Image project_image(const EigenBasis<Scalar>& basis, const Image& image) {
  detail::check_frame_shape(image, basis.height, basis.width);
  const Vector<Scalar> centered = detail::image_column<Scalar>(image) - basis.mean;
  const Vector<Scalar> projected = basis.mean + basis.project_centered(centered);
  return unflatten_image(projected.template cast<double>(), basis.height, basis.width);
}

/// Replaces every image by its projection onto the basis of its own label.
template <typename Scalar>
DatasetSplit project_dataset(const EigenBasisLibrary<Scalar>& library, const DatasetSplit& split) {
  DatasetSplit out = split;
  for (Partition p : kAllPartitions) {
    for (auto& item : out[p]) item.image = project_image(library.at(item.label), item.image);
  }
  return out;
}

/// Library file: "EIGH", u32 version 2, u64 class count, u64 height,
/// u64 width, provenance (source, rule, u64 seed, warnings), then per class:
/// u64 id, code, u64 J, u64 K (training frames), u64 r, u32 degenerate flag,
/// r singular values, J mean values, r basis vectors of J values.
inline constexpr std::uint32_t kLibraryVersion = 2;

std::string encode_library(const EigenBasisLibrary<double>& library);
EigenBasisLibrary<double> decode_library(const std::string& bytes, const std::string& name = "<memory>");
void save_library(const std::filesystem::path& path, const EigenBasisLibrary<double>& library);
EigenBasisLibrary<double> load_library(const std::filesystem::path& path);

/// Exact encoded size, from the layout above.
std::size_t library_file_size(const EigenBasisLibrary<double>& library);

bool bit_equal(const EigenBasisLibrary<double>& a, const EigenBasisLibrary<double>& b);

}  // namespace eigenhearts
