#pragma once

#include <span>
#include <string>
#include <vector>

#include "eigenhearts/eigenbasis.hpp"
#include "eigenhearts/evaluator.hpp"

namespace eigenhearts {

/// Nearest-subspace decision for one image. Residuals are listed in library
/// order (class id order).
struct ResidualReport {
  std::vector<double> residuals;
  ClassLabel predicted;
};

/// residual_c = || (x - mean_c) - W_c W_c^T (x - mean_c) ||_2 for every class;
/// the smallest residual wins, lowest class id on ties.
template <typename Scalar>
ResidualReport classify_residual(const EigenBasisLibrary<Scalar>& library, const Image& image) {
  if (library.bases.empty()) fail(ErrorKind::Config, "empty basis library");
  ResidualReport report;
  report.residuals.reserve(library.bases.size());
  double best = 0.0;
  for (const auto& basis : library.bases) {
    detail::check_frame_shape(image, basis.height, basis.width);
    const Vector<Scalar> centered = detail::image_column<Scalar>(image) - basis.mean;
    const Vector<Scalar> residual = centered - basis.project_centered(centered);
    const double norm = static_cast<double>(residual.norm());
    if (report.residuals.empty() || norm < best) {
      best = norm;
      report.predicted = basis.label;
    }
    report.residuals.push_back(norm);
  }
  return report;
}

template <typename Scalar>
std::vector<LabelPair> classify_split(const EigenBasisLibrary<Scalar>& library,
                                      std::span<const LabeledImage> partition) {
  std::vector<LabelPair> pairs;
  pairs.reserve(partition.size());
  for (const auto& item : partition) {
    pairs.push_back({item.label.id, classify_residual(library, item.image).predicted.id});
  }
  return pairs;
}

/// CSV `sample,true,predicted,res_<code>...` with %.17g residuals; the sample
/// column reads `<sample_id>/<frame_index>`.
template <typename Scalar>
std::string residual_csv(const EigenBasisLibrary<Scalar>& library, std::span<const LabeledImage> partition) {
  std::string out = "sample,true,predicted";
  for (const auto& b : library.bases) out += ",res_" + b.label.code;
  out += '\n';
  char buf[64];
  for (const auto& item : partition) {
    const ResidualReport report = classify_residual(library, item.image);
    out += item.sample_id + "/" + format_frame_index(item.frame_index) + "," + item.label.code + "," +
           report.predicted.code;
    for (double r : report.residuals) {
      std::snprintf(buf, sizeof buf, ",%.17g", r);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace eigenhearts
