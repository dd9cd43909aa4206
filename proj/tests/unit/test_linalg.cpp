#include <gtest/gtest.h>

#include <cmath>

#include <gcsit/errors.hpp>
#include <gcsit/linalg.hpp>
#include <gcsit/rng.hpp>

#include "test_support.hpp"

using namespace gcsit;

TEST(QrFactor, IdentityGivesIdentity) {
  const auto qr = qr_orthonormal_factor(CMatrix::Identity(3, 3));
  EXPECT_LT(test::max_abs(qr.q.basis() - CMatrix::Identity(3, 3)), 1e-14);
  EXPECT_LT(test::max_abs(qr.r - CMatrix::Identity(3, 3)), 1e-14);
}

TEST(QrFactor, TruncatedUnitaryInputIsFixedPoint) {
  Rng rng(11);
  const auto f = haar_truncated_unitary(6, 5, rng);
  const auto qr = qr_orthonormal_factor(f.basis());
  // Positive real diagonal pins the phase, so Q equals the input.
  EXPECT_LT(test::max_abs(qr.q.basis() - f.basis()), 1e-12);
  EXPECT_LT(test::max_abs(qr.r - CMatrix::Identity(5, 5)), 1e-12);
}

TEST(QrFactor, ReconstructsRandomGaussian) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const CMatrix a = complex_gaussian(6, 5, rng);
    const auto qr = qr_orthonormal_factor(a);
    EXPECT_LT(orthonormality_error(qr.q.basis()), 1e-10);
    EXPECT_LT(test::max_abs(qr.q.basis() * qr.r - a), 1e-10);
    for (Index i = 0; i < 5; ++i) {
      EXPECT_GT(qr.r(i, i).real(), 0.0);
      EXPECT_EQ(qr.r(i, i).imag(), 0.0);
      for (Index k = 0; k < i; ++k) EXPECT_EQ(qr.r(i, k), Complex(0.0, 0.0));
    }
  }
}

TEST(QrFactor, RejectsRankDeficientAndWide) {
  CMatrix a = CMatrix::Zero(4, 2);
  a(0, 0) = 1.0;
  a(1, 0) = 2.0;
  a.col(1) = 3.0 * a.col(0);
  EXPECT_THROW(qr_orthonormal_factor(a), RankError);
  EXPECT_THROW(qr_orthonormal_factor(CMatrix::Ones(2, 3)), DimensionError);
}

TEST(GrassmannPoint, ValidatesBasis) {
  EXPECT_THROW(GrassmannPoint(CMatrix::Ones(3, 1)), DimensionError);
  EXPECT_THROW(GrassmannPoint(CMatrix::Identity(2, 3)), DimensionError);
  CMatrix nan_basis = CMatrix::Identity(3, 1);
  nan_basis(1, 0) = Complex(std::nan(""), 0.0);
  EXPECT_THROW(GrassmannPoint{nan_basis}, DimensionError);
  EXPECT_NO_THROW(GrassmannPoint(CMatrix::Identity(3, 2)));
}

TEST(ChordalDistance, SpecExamples) {
  const GrassmannPoint e1(CMatrix::Identity(2, 1));
  CMatrix e2m = CMatrix::Zero(2, 1);
  e2m(1, 0) = 1.0;
  const GrassmannPoint e2(e2m);
  CMatrix diag = CMatrix::Ones(2, 1) / std::sqrt(2.0);
  const GrassmannPoint mid(diag);

  EXPECT_NEAR(chordal_distance(e1, e1), 0.0, 1e-15);
  EXPECT_NEAR(chordal_distance(e1, e2), 1.0, 1e-15);
  EXPECT_NEAR(chordal_distance(e1, mid), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ChordalDistance, MatchesPrincipalAngleForm) {
  // Oracle: sum of sin^2 of principal angles from the SVD of X^H Y.
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto x = haar_truncated_unitary(7, 3, rng);
    const auto y = haar_truncated_unitary(7, 3, rng);
    const Eigen::JacobiSVD<CMatrix> svd(x.basis().adjoint() * y.basis());
    double sum = 0.0;
    for (Index i = 0; i < 3; ++i) {
      const double c = std::min(1.0, svd.singularValues()(i));
      sum += 1.0 - c * c;
    }
    EXPECT_NEAR(squared_chordal_distance(x, y), sum, 1e-12);
  }
}

TEST(ChordalDistance, RejectsShapeMismatch) {
  const GrassmannPoint a(CMatrix::Identity(3, 1));
  const GrassmannPoint b(CMatrix::Identity(3, 2));
  EXPECT_THROW(chordal_distance(a, b), DimensionError);
}

TEST(Haar, SquareDrawIsUnitary) {
  Rng rng(14);
  const auto u = haar_truncated_unitary(4, 4, rng);
  EXPECT_LT(test::max_abs(u.basis() * u.basis().adjoint() - CMatrix::Identity(4, 4)), 1e-10);
}

TEST(Haar, DrawsAreOrthonormal) {
  Rng rng(15);
  for (int t = 0; t < 200; ++t) {
    EXPECT_LT(orthonormality_error(haar_truncated_unitary(6, 5, rng).basis()), 1e-10);
    EXPECT_LT(orthonormality_error(haar_unitary(5, rng)), 1e-10);
  }
}

TEST(Haar, FirstEntryMarginalMoment) {
  // E|F(1,1)|^2 = 1/n for a Haar column; check within 3 standard errors.
  Rng rng(16);
  const int n = 5;
  const int draws = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int t = 0; t < draws; ++t) {
    const double v = std::norm(haar_truncated_unitary(n, 2, rng).basis()(0, 0));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
  EXPECT_NEAR(mean, 1.0 / n, 3.0 * se);
}

TEST(Haar, InvariantUnderFixedUnitary) {
  // Q * F has the same |first entry|^2 distribution as F: compare means.
  Rng rng(17);
  Rng rot_rng(18);
  const CMatrix q = haar_unitary(4, rot_rng);
  double a = 0.0;
  double b = 0.0;
  const int draws = 40000;
  for (int t = 0; t < draws; ++t) {
    const CMatrix f = haar_truncated_unitary(4, 1, rng).basis();
    a += std::norm(f(0, 0));
    b += std::norm((q * f)(0, 0));
  }
  EXPECT_NEAR(a / draws, b / draws, 0.01);
}

TEST(Complement, CoordinateSubspace) {
  Rng rng(19);
  const GrassmannPoint f(CMatrix::Identity(5, 2));
  const auto fc = orthonormal_complement(f, rng);
  ASSERT_EQ(fc.n(), 5);
  ASSERT_EQ(fc.p(), 3);
  EXPECT_LT(test::max_abs(fc.basis().topRows(2)), 1e-12);
}

TEST(Complement, CompletesUnitary) {
  Rng rng(20);
  for (int t = 0; t < 100; ++t) {
    const auto f = haar_truncated_unitary(6, 2, rng);
    const auto fc = orthonormal_complement(f, rng);
    CMatrix w(6, 6);
    w << f.basis(), fc.basis();
    EXPECT_LT(test::max_abs(w.adjoint() * w - CMatrix::Identity(6, 6)), 1e-10);
  }
}

TEST(Complement, PreservesDistance) {
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const auto x = haar_truncated_unitary(4, 2, rng);
    const auto y = haar_truncated_unitary(4, 2, rng);
    EXPECT_NEAR(chordal_distance(x, y),
                chordal_distance(orthonormal_complement(x, rng), orthonormal_complement(y, rng)),
                1e-9);
  }
}

TEST(Complement, EmptyForFullSpace) {
  Rng rng(22);
  EXPECT_THROW(orthonormal_complement(GrassmannPoint(CMatrix::Identity(3, 3)), rng),
               DimensionError);
}

TEST(BlockDiagonal, PlacesBlocks) {
  const CMatrix a = CMatrix::Constant(2, 1, Complex(1.0, 2.0));
  const CMatrix b = CMatrix::Constant(3, 2, Complex(-1.0, 0.5));
  const CMatrix blocks[] = {a, b};
  const CMatrix m = block_diagonal(blocks);
  ASSERT_EQ(m.rows(), 5);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m.block(0, 0, 2, 1), a);
  EXPECT_EQ(m.block(2, 1, 3, 2), b);
  EXPECT_EQ(m.block(0, 1, 2, 2), CMatrix::Zero(2, 2));
  EXPECT_EQ(m.block(2, 0, 3, 1), CMatrix::Zero(3, 1));
}

TEST(Rng, DerivedStreamsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(5, {1, 2}), derive_seed(5, {1, 2}));
  EXPECT_NE(derive_seed(5, {1, 2}), derive_seed(5, {2, 1}));
  EXPECT_NE(derive_seed(5, {1}), derive_seed(6, {1}));
  Rng a = make_rng(9, {3});
  Rng b = make_rng(9, {3});
  EXPECT_EQ(a(), b());
}
