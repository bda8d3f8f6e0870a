#include <cmath>
#include <random>

#include "doctest.h"
#include "eigenhearts/factors_io.hpp"
#include "eigenhearts/svd.hpp"
#include "oracles.hpp"

using namespace eigenhearts;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double max_sigma_gap(const SvdFactors<double>& f, const std::vector<double>& reference) {
  double gap = 0.0;
  for (Eigen::Index j = 0; j < f.rank(); ++j) {
    gap = std::max(gap, std::abs(f.singular_values[j] - reference[static_cast<std::size_t>(j)]));
  }
  return gap;
}

}  // namespace

TEST_CASE("identity has unit singular values") {
  const auto f = svd_thin<double>(MatrixXd::Identity(3, 3));
  CHECK(f.rank() == 3);
  for (int j = 0; j < 3; ++j) CHECK(f.singular_values[j] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("diag(3,-2) absorbs the sign into the vectors") {
  MatrixXd m(2, 2);
  m << 3, 0, 0, -2;
  const auto f = svd_thin<double>(m);
  CHECK(f.singular_values[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(f.singular_values[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK((f.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-14);
  // Largest-magnitude entry of every left vector is nonnegative.
  CHECK(f.left(0, 0) > 0.0);
  CHECK(f.left(1, 1) > 0.0);
  CHECK(f.right(1, 1) < 0.0);
}

TEST_CASE("random 12x7 matches the Jacobi Gram oracle") {
  std::mt19937_64 rng(12);
  const MatrixXd m = oracle::gaussian(12, 7, rng);
  const auto f = svd_thin<double>(m);
  CHECK(f.rank() == 7);
  CHECK((f.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(max_sigma_gap(f, oracle::singular_values(m)) < 1e-9 * f.singular_values[0]);
  CHECK(oracle::orthonormality_error(f.left) < 1e-10);
  CHECK(oracle::orthonormality_error(f.right) < 1e-10);
}

TEST_CASE("sign convention picks the first of tied maxima") {
  SvdFactors<double> f{MatrixXd(2, 1), VectorXd::Ones(1), MatrixXd::Ones(1, 1), 2, 1};
  f.left << -0.5, 0.5;
  detail::apply_sign_convention(f);
  CHECK(f.left(0, 0) == 0.5);
  CHECK(f.left(1, 0) == -0.5);
  CHECK(f.right(0, 0) == -1.0);
}

TEST_CASE("non-finite input is a numeric error") {
  MatrixXd m = MatrixXd::Ones(3, 2);
  m(1, 1) = std::nan("");
  CHECK_THROWS_AS(svd_thin<double>(m), Error);
  try {
    svd_gram<double>(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("method of snapshots on a rank-1 matrix keeps one factor") {
  std::mt19937_64 rng(1);
  const VectorXd u = oracle::gaussian(100, 1, rng);
  const VectorXd v = oracle::gaussian(10, 1, rng);
  const auto f = svd_gram<double>(u * v.transpose());
  REQUIRE(f.rank() == 1);
  CHECK(f.singular_values[0] == doctest::Approx(u.norm() * v.norm()).epsilon(1e-12));
  CHECK(f.left.rows() == 100);
  CHECK(f.right.rows() == 10);
}

TEST_CASE("method of snapshots agrees with the thin SVD on random 50x8") {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd m = oracle::gaussian(50, 8, rng);
    const auto a = svd_thin<double>(m);
    const auto b = svd_gram<double>(m);
    REQUIRE(b.rank() == 8);
    CHECK((a.singular_values - b.singular_values).cwiseAbs().maxCoeff() < 1e-9 * a.singular_values[0]);
    for (Eigen::Index j = 1; j <= 8; ++j) {
      CHECK(oracle::projector_distance(a.left.leftCols(j), b.left.leftCols(j)) < 1e-8);
    }
    // Same sign convention, so the vectors themselves agree.
    CHECK((a.left - b.left).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(oracle::orthonormality_error(b.left) < 1e-10);
    CHECK(oracle::orthonormality_error(b.right) < 1e-10);
  }
}

TEST_CASE("method of snapshots on a wide matrix goes through the transpose") {
  std::mt19937_64 rng(3);
  const MatrixXd m = oracle::gaussian(6, 20, rng);
  const auto f = svd_gram<double>(m);
  CHECK(f.source_rows == 6);
  CHECK(f.source_cols == 20);
  CHECK(f.left.rows() == 6);
  CHECK(f.right.rows() == 20);
  CHECK((f.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("tall snapshot matrices only use J x K and K x K storage") {
  // J >> K: the result holds J x r and K x r factors, never J x J.
  std::mt19937_64 rng(4);
  const MatrixXd m = oracle::gaussian(65536, 40, rng);
  const auto f = svd<double>(m);
  CHECK(f.left.rows() == 65536);
  CHECK(f.left.cols() == 40);
  CHECK(f.right.rows() == 40);
  CHECK((f.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("float instantiation") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXf m = oracle::gaussian(20, 6, rng).cast<float>();
  const auto a = svd_thin<float>(m);
  const auto b = svd_gram<float>(m);
  CHECK((a.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-4f);
  CHECK((a.singular_values - b.singular_values).cwiseAbs().maxCoeff() < 1e-3f * a.singular_values[0]);
}

TEST_CASE("fixed truncation at full rank is the identity") {
  std::mt19937_64 rng(6);
  const auto f = svd_thin<double>(oracle::gaussian(9, 5, rng));
  const auto t = truncate(f, FixedRank{5});
  CHECK(t.left == f.left);
  CHECK(t.singular_values == f.singular_values);
  CHECK(t.right == f.right);
  CHECK_THROWS_AS(truncate(f, FixedRank{6}), Error);
  CHECK_THROWS_AS(truncate(f, FixedRank{0}), Error);
}

TEST_CASE("energy tolerance picks the smallest passing rank") {
  SvdFactors<double> f{MatrixXd::Identity(3, 3), VectorXd::Zero(3), MatrixXd::Identity(3, 3), 3, 3};
  f.singular_values << 2, 1, 1;
  // tail energy at r'=1: sqrt(2)/sqrt(6) = 0.577 <= 0.6
  CHECK(truncation_rank(f, EnergyTolerance{0.6}) == 1);
  CHECK(truncation_rank(f, EnergyTolerance{0.5}) == 2);
  CHECK_THROWS_AS(truncation_rank(f, EnergyTolerance{1.0}), Error);
  CHECK_THROWS_AS(truncation_rank(f, EnergyTolerance{0.0}), Error);
}

TEST_CASE("energy rank is nonincreasing in the tolerance and error in the rank") {
  std::mt19937_64 rng(7);
  const MatrixXd m = oracle::gaussian(30, 12, rng);
  const auto f = svd_thin<double>(m);
  Eigen::Index previous = f.rank();
  for (double tol = 0.01; tol < 1.0; tol += 0.01) {
    const Eigen::Index r = truncation_rank(f, EnergyTolerance{tol});
    CHECK(r <= previous);
    previous = r;
  }
  double previous_error = INFINITY;
  for (Eigen::Index r = 1; r <= f.rank(); ++r) {
    const double error = (m - truncate(f, FixedRank{r}).reconstruct()).norm();
    CHECK(error <= previous_error + 1e-12);
    CHECK(error == doctest::Approx(tail_energy(f, r)).epsilon(1e-9).scale(f.singular_values[0]));
    previous_error = error;
  }
}

TEST_CASE("Gavish-Donoho coefficient and threshold") {
  CHECK(gavish_donoho_omega(1.0) == doctest::Approx(2.86).epsilon(1e-15));
  SvdFactors<double> f{MatrixXd::Identity(5, 5), VectorXd::Zero(5), MatrixXd::Identity(5, 5), 5, 5};
  f.singular_values << 10, 0.1, 0.1, 0.1, 0.1;
  CHECK(median_singular_value(f) == doctest::Approx(0.1));
  CHECK(gavish_donoho_threshold(f) == doctest::Approx(0.286).epsilon(1e-12));
  CHECK(gavish_donoho_rank(f) == 1);
}

TEST_CASE("Gavish-Donoho recovers a planted rank and ignores global scale") {
  std::mt19937_64 rng(8);
  const MatrixXd m = oracle::low_rank_plus_noise(200, 200, 5, 0.01, rng);
  const auto f = svd_thin<double>(m);
  CHECK(gavish_donoho_rank(f) == 5);
  const auto scaled = svd_thin<double>(MatrixXd(m * 37.5));
  CHECK(gavish_donoho_rank(scaled) == 5);
  CHECK(truncate(f, GavishDonoho{}).rank() == 5);
}

TEST_CASE("Gavish-Donoho counts dropped snapshot factors as zeros") {
  std::mt19937_64 rng(9);
  const VectorXd u = oracle::gaussian(80, 1, rng);
  const VectorXd v = oracle::gaussian(8, 1, rng);
  const auto f = svd_gram<double>(u * v.transpose());
  REQUIRE(f.rank() == 1);
  CHECK(median_singular_value(f) == 0.0);
  CHECK(gavish_donoho_rank(f) == 1);
}

TEST_CASE("spectrum cumulative energy") {
  SvdFactors<double> f{MatrixXd::Identity(2, 2), VectorXd::Ones(2), MatrixXd::Identity(2, 2), 2, 2};
  const auto s = singular_spectrum(f);
  REQUIRE(s.size() == 2);
  CHECK(s[0].cumulative_energy == 0.5);
  CHECK(s[1].cumulative_energy == 1.0);
  CHECK(s[0].index == 1);

  f.singular_values << 3, 4;
  CHECK_THROWS_AS(singular_spectrum(f), Error);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = svd_thin<double>(oracle::gaussian(15, 9, rng));
    CHECK(singular_spectrum(g).back().cumulative_energy == 1.0);
  }
  const std::string csv = spectrum_csv(s.empty() ? s : singular_spectrum(svd_thin<double>(MatrixXd::Identity(2, 2))));
  CHECK(csv == "j,sigma,cumulative_energy\n1,1,0.5\n2,1,1\n");
}

TEST_CASE("truncation rule tags round-trip") {
  for (const std::string tag : {"r200", "gavish", "tol0.05"}) {
    CHECK(describe(parse_truncation_rule(tag)) == tag);
  }
  CHECK_THROWS_AS(parse_truncation_rule("r0"), Error);
  CHECK_THROWS_AS(parse_truncation_rule("tol1.5"), Error);
  CHECK_THROWS_AS(parse_truncation_rule("rank5"), Error);
}

TEST_CASE("factor files round-trip bit-exactly") {
  std::mt19937_64 rng(11);
  const auto f = svd_thin<double>(oracle::gaussian(17, 6, rng));
  const std::string bytes = encode_factors(f);
  CHECK(bytes.size() == 4 + 4 + 3 * 8 + 8 * (6 + 17 * 6 + 6 * 6));
  CHECK(bytes.substr(0, 4) == "EIGH");
  const auto g = decode_factors(bytes);
  CHECK(encode_factors(g) == bytes);
  CHECK(g.left == f.left);
  CHECK(g.right == f.right);
  CHECK(g.singular_values == f.singular_values);

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_factors(bad), Error);
  try {
    decode_factors(bytes.substr(0, bytes.size() - 5));
    FAIL("expected truncation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
