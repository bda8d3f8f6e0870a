#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "eigenhearts/error.hpp"

namespace eigenhearts {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thin SVD V = W diag(sigma) T^T of a J x K source.
///
/// Singular values are nonincreasing and nonnegative. Each left vector is
/// signed so that its entry of largest magnitude is nonnegative (first index
/// on ties); the matching right vector carries the same sign.
template <typename Scalar>
struct SvdFactors {
  Matrix<Scalar> left;
  Vector<Scalar> singular_values;
  Matrix<Scalar> right;
  Eigen::Index source_rows = 0;
  Eigen::Index source_cols = 0;

  Eigen::Index rank() const { return singular_values.size(); }

  Matrix<Scalar> reconstruct() const {
    return left * singular_values.asDiagonal() * right.transpose();
  }
};

/// Throws a format error when the factors break the ordering or shape
/// invariants.
template <typename Scalar>
void check_factors(const SvdFactors<Scalar>& f) {
  const Eigen::Index r = f.rank();
  if (f.left.rows() != f.source_rows || f.right.rows() != f.source_cols || f.left.cols() != r ||
      f.right.cols() != r) {
    fail(ErrorKind::Format, "SVD factor shapes are inconsistent");
  }
  for (Eigen::Index j = 0; j < r; ++j) {
    const Scalar s = f.singular_values[j];
    if (!std::isfinite(static_cast<double>(s)) || s < Scalar(0)) {
      fail(ErrorKind::Format, "singular value " + std::to_string(j) + " is negative or non-finite");
    }
    if (j > 0 && s > f.singular_values[j - 1]) {
      fail(ErrorKind::Format, "singular values are not sorted in nonincreasing order");
    }
  }
}

namespace detail {

template <typename Scalar>
void check_finite_matrix(const Matrix<Scalar>& m) {
  if (m.rows() < 1 || m.cols() < 1) fail(ErrorKind::Format, "SVD of an empty matrix");
  if (!m.allFinite()) fail(ErrorKind::Numeric, "SVD input contains non-finite entries");
}

template <typename Scalar>
void apply_sign_convention(SvdFactors<Scalar>& f) {
  for (Eigen::Index j = 0; j < f.rank(); ++j) {
    Eigen::Index at = 0;
    f.left.col(j).cwiseAbs().maxCoeff(&at);  // first index among equal maxima
    if (f.left(at, j) < Scalar(0)) {
      f.left.col(j) = -f.left.col(j);
      f.right.col(j) = -f.right.col(j);
    }
  }
}

// Replaces the columns of `m` by an orthonormal basis of the same nested
// spans, with the sign chosen to stay close to the original columns.
template <typename Scalar>
void reorthonormalize(Matrix<Scalar>& m) {
  if (m.cols() == 0) return;
  Eigen::HouseholderQR<Matrix<Scalar>> qr(m);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(m.rows(), m.cols());
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  }
  m = std::move(q);
}

}  // namespace detail

/// Thin SVD through Eigen's divide-and-conquer solver; r = min(J, K).
template <typename Scalar>
SvdFactors<Scalar> svd_thin(const Matrix<Scalar>& matrix) {
  detail::check_finite_matrix(matrix);
  Eigen::BDCSVD<Matrix<Scalar>> solver(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Decomposition, "SVD did not converge");
  SvdFactors<Scalar> f{solver.matrixU(), solver.singularValues(), solver.matrixV(), matrix.rows(),
                       matrix.cols()};
  detail::apply_sign_convention(f);
  return f;
}

/// Relative cutoff on Gram eigenvalues (lambda_j <= lambda_1 * 1e-12, i.e.
/// sigma_j <= sigma_1 * 1e-6) below which the method of snapshots treats a
/// factor as zero. Round-off in V^T V alone produces sigma ~ 1e-8 sigma_1.
inline constexpr double kGramRankCutoff = 1e-12;

/// Method of snapshots: eigendecomposition of the K x K Gram matrix V^T V.
/// Only J x K and K x K storage is used. Factors under the Gram cutoff are
/// dropped together with their vectors. A wide input (J < K) is handled
/// through its transpose.
template <typename Scalar>
SvdFactors<Scalar> svd_gram(const Matrix<Scalar>& matrix) {
  detail::check_finite_matrix(matrix);
  if (matrix.rows() < matrix.cols()) {
    SvdFactors<Scalar> t = svd_gram<Scalar>(matrix.transpose());
    SvdFactors<Scalar> f{std::move(t.right), std::move(t.singular_values), std::move(t.left),
                         matrix.rows(), matrix.cols()};
    detail::apply_sign_convention(f);
    return f;
  }

  Matrix<Scalar> gram = Matrix<Scalar>::Zero(matrix.cols(), matrix.cols());
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
  if (eig.info() != Eigen::Success) fail(ErrorKind::Decomposition, "Gram eigensolver did not converge");

  const Eigen::Index k = matrix.cols();
  // Eigen returns ascending eigenvalues.
  Vector<Scalar> sigma = eig.eigenvalues().reverse().cwiseMax(Scalar(0)).cwiseSqrt();
  Matrix<Scalar> right = eig.eigenvectors().rowwise().reverse();

  Eigen::Index kept = 0;
  const Scalar cutoff = sigma.size() > 0 ? sigma[0] * sigma[0] * Scalar(kGramRankCutoff) : Scalar(0);
  while (kept < k && sigma[kept] * sigma[kept] > cutoff) ++kept;

  SvdFactors<Scalar> f;
  f.source_rows = matrix.rows();
  f.source_cols = matrix.cols();
  f.singular_values = sigma.head(kept);
  f.right = right.leftCols(kept);
  f.left = matrix * f.right;
  for (Eigen::Index j = 0; j < kept; ++j) f.left.col(j) /= f.singular_values[j];
  detail::reorthonormalize(f.left);
  detail::apply_sign_convention(f);
  return f;
}

/// Dispatches tall matrices (J > 4K) to the method of snapshots and
/// everything else to the thin SVD.
template <typename Scalar>
SvdFactors<Scalar> svd(const Matrix<Scalar>& matrix) {
  return matrix.rows() > 4 * matrix.cols() ? svd_gram(matrix) : svd_thin(matrix);
}

struct FixedRank {
  Eigen::Index rank = 1;
};
struct EnergyTolerance {
  double tolerance = 0.01;
};
struct GavishDonoho {};

using TruncationRule = std::variant<FixedRank, EnergyTolerance, GavishDonoho>;

/// Short tag used in file names and reports: `r200`, `tol0.05`, `gavish`.
std::string describe(const TruncationRule& rule);

/// Parses the forms produced by describe().
TruncationRule parse_truncation_rule(const std::string& text);

/// omega(beta) ~ 0.56 b^3 - 0.95 b^2 + 1.82 b + 1.43: the unknown-noise
/// hard threshold coefficient applied to the median singular value.
inline double gavish_donoho_omega(double beta) {
  return ((0.56 * beta - 0.95) * beta + 1.82) * beta + 1.43;
}

template <typename Scalar>
double median_singular_value(const SvdFactors<Scalar>& f) {
  // Factors dropped by the method of snapshots are numerically zero.
  const Eigen::Index full = std::min(f.source_rows, f.source_cols);
  std::vector<double> values(static_cast<std::size_t>(std::max(full, f.rank())), 0.0);
  for (Eigen::Index j = 0; j < f.rank(); ++j) values[static_cast<std::size_t>(j)] = f.singular_values[j];
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

template <typename Scalar>
double gavish_donoho_threshold(const SvdFactors<Scalar>& f) {
  const double lo = static_cast<double>(std::min(f.source_rows, f.source_cols));
  const double hi = static_cast<double>(std::max(f.source_rows, f.source_cols));
  return gavish_donoho_omega(lo / hi) * median_singular_value(f);
}

/// Number of singular values above the threshold, at least 1.
template <typename Scalar>
Eigen::Index gavish_donoho_rank(const SvdFactors<Scalar>& f) {
  if (f.rank() < 1) fail(ErrorKind::Capacity, "Gavish-Donoho rank of empty factors");
  const double tau = gavish_donoho_threshold(f);
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < f.rank(); ++j) {
    if (static_cast<double>(f.singular_values[j]) > tau) ++count;
  }
  return std::max<Eigen::Index>(count, 1);
}

/// Smallest r' whose relative Frobenius residual
/// sqrt(sum_{j>r'} s_j^2 / sum_j s_j^2) is at most `tolerance`.
template <typename Scalar>
Eigen::Index energy_rank(const SvdFactors<Scalar>& f, double tolerance) {
  if (!(tolerance > 0.0 && tolerance < 1.0)) {
    fail(ErrorKind::Config, "energy tolerance must lie in (0,1), got " + std::to_string(tolerance));
  }
  const Eigen::Index r = f.rank();
  if (r < 1) fail(ErrorKind::Capacity, "energy rank of empty factors");
  // tail[j] = sum_{i >= j} s_i^2, summed from the small end.
  std::vector<double> tail(static_cast<std::size_t>(r) + 1, 0.0);
  for (Eigen::Index j = r - 1; j >= 0; --j) {
    const double s = f.singular_values[j];
    tail[static_cast<std::size_t>(j)] = tail[static_cast<std::size_t>(j) + 1] + s * s;
  }
  const double total = tail[0];
  if (total == 0.0) return 1;
  for (Eigen::Index keep = 1; keep <= r; ++keep) {
    if (std::sqrt(tail[static_cast<std::size_t>(keep)] / total) <= tolerance) return keep;
  }
  return r;
}

template <typename Scalar>
Eigen::Index truncation_rank(const SvdFactors<Scalar>& f, const TruncationRule& rule) {
  return std::visit(
      [&](const auto& r) -> Eigen::Index {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, FixedRank>) {
          if (r.rank < 1 || r.rank > f.rank()) {
            fail(ErrorKind::Bounds, "truncation rank " + std::to_string(r.rank) + " outside [1, " +
                                        std::to_string(f.rank()) + "]");
          }
          return r.rank;
        } else if constexpr (std::is_same_v<R, EnergyTolerance>) {
          return energy_rank(f, r.tolerance);
        } else {
          return gavish_donoho_rank(f);
        }
      },
      rule);
}

/// Keeps the leading singular triplets selected by `rule`.
template <typename Scalar>
SvdFactors<Scalar> truncate(const SvdFactors<Scalar>& f, const TruncationRule& rule) {
  const Eigen::Index keep = truncation_rank(f, rule);
  return SvdFactors<Scalar>{f.left.leftCols(keep), f.singular_values.head(keep),
                            f.right.leftCols(keep), f.source_rows, f.source_cols};
}

/// Frobenius norm of the discarded tail, sqrt(sum_{j>keep} s_j^2).
template <typename Scalar>
double tail_energy(const SvdFactors<Scalar>& f, Eigen::Index keep) {
  double sum = 0.0;
  for (Eigen::Index j = f.rank() - 1; j >= keep; --j) {
    const double s = f.singular_values[j];
    sum += s * s;
  }
  return std::sqrt(sum);
}

struct SpectrumPoint {
  Eigen::Index index = 0;  // 1-based
  double sigma = 0.0;
  double cumulative_energy = 0.0;
};

/// Singular values with their cumulative energy fraction; the last fraction
/// is exactly 1.
template <typename Scalar>
std::vector<SpectrumPoint> singular_spectrum(const SvdFactors<Scalar>& f) {
  check_factors(f);
  if (f.rank() < 1) fail(ErrorKind::Capacity, "spectrum of empty factors");
  std::vector<double> running(static_cast<std::size_t>(f.rank()));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < f.rank(); ++j) {
    const double s = f.singular_values[j];
    sum += s * s;
    running[static_cast<std::size_t>(j)] = sum;
  }
  const double total = running.back();
  std::vector<SpectrumPoint> series;
  for (Eigen::Index j = 0; j < f.rank(); ++j) {
    const double fraction = total > 0.0 ? running[static_cast<std::size_t>(j)] / total
                                        : static_cast<double>(j + 1) / static_cast<double>(f.rank());
    series.push_back({j + 1, static_cast<double>(f.singular_values[j]), fraction});
  }
  return series;
}

/// CSV with header `j,sigma,cumulative_energy` and %.17g values.
std::string spectrum_csv(const std::vector<SpectrumPoint>& series);

}  // namespace eigenhearts
