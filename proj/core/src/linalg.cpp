#include "gcsit/linalg.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "gcsit/errors.hpp"

namespace gcsit {

GrassmannPoint::GrassmannPoint(CMatrix basis) : basis_(std::move(basis)) {
  if (basis_.cols() == 0 || basis_.rows() < basis_.cols()) {
    throw DimensionError("Grassmann basis must be n x p with 1 <= p <= n, got " +
                         std::to_string(basis_.rows()) + "x" + std::to_string(basis_.cols()));
  }
  if (!basis_.allFinite()) {
    throw DimensionError("Grassmann basis has non-finite entries");
  }
  const double err = orthonormality_error(basis_);
  if (err > kOrthonormalTol) {
    throw DimensionError("Grassmann basis is not truncated unitary (||B^H B - I|| = " +
                         std::to_string(err) + ")");
  }
}

GrassmannPoint GrassmannPoint::span_of(const CMatrix& a) { return qr_orthonormal_factor(a).q; }

QrFactor qr_orthonormal_factor(const CMatrix& a) {
  const Index n = a.rows();
  const Index p = a.cols();
  if (p == 0 || n < p) {
    throw DimensionError("qr_orthonormal_factor needs n >= p >= 1, got " + std::to_string(n) +
                         "x" + std::to_string(p));
  }
  if (!a.allFinite()) {
    throw DimensionError("qr_orthonormal_factor: non-finite input");
  }
  const Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(p - 1) < kRankTol * sv(0)) {
    throw RankError("qr_orthonormal_factor: input is rank deficient (sigma_min/sigma_max = " +
                    std::to_string(sv(0) > 0.0 ? sv(p - 1) / sv(0) : 0.0) + ")");
  }

  const Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, p);
  CMatrix r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

  // Rotate each column so R has a positive real diagonal.
  for (Index k = 0; k < p; ++k) {
    const Complex rkk = r(k, k);
    const Complex phase = rkk / std::abs(rkk);
    q.col(k) *= phase;
    r.row(k) *= std::conj(phase);
    r(k, k) = Complex(std::abs(rkk), 0.0);
  }
  return QrFactor{GrassmannPoint(std::move(q)), std::move(r)};
}

double squared_chordal_distance(const GrassmannPoint& x, const GrassmannPoint& y) {
  if (x.n() != y.n() || x.p() != y.p()) {
    throw DimensionError("chordal_distance: points on G(" + std::to_string(x.n()) + "," +
                         std::to_string(x.p()) + ") and G(" + std::to_string(y.n()) + "," +
                         std::to_string(y.p()) + ")");
  }
  return 0.5 * (x.projector() - y.projector()).squaredNorm();
}

double chordal_distance(const GrassmannPoint& x, const GrassmannPoint& y) {
  return std::sqrt(squared_chordal_distance(x, y));
}

CMatrix complex_gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

GrassmannPoint haar_truncated_unitary(Index n, Index p, Rng& rng) {
  if (p < 1 || p > n) {
    throw DimensionError("haar_truncated_unitary: need 1 <= p <= n, got n=" + std::to_string(n) +
                         " p=" + std::to_string(p));
  }
  return qr_orthonormal_factor(complex_gaussian(n, p, rng)).q;
}

CMatrix haar_unitary(Index n, Rng& rng) { return haar_truncated_unitary(n, n, rng).basis(); }

GrassmannPoint orthonormal_complement(const GrassmannPoint& f, Rng& rng) {
  const Index n = f.n();
  const Index p = f.p();
  if (p >= n) {
    throw DimensionError("orthonormal_complement: subspace fills the ambient space");
  }
  const CMatrix& b = f.basis();
  CMatrix g = complex_gaussian(n, n - p, rng);
  // Two projection passes keep the result orthogonal to f at machine precision.
  for (int pass = 0; pass < 2; ++pass) {
    g -= b * (b.adjoint() * g);
  }
  CMatrix q = qr_orthonormal_factor(g).q.basis();
  q -= b * (b.adjoint() * q);
  return GrassmannPoint::span_of(q);
}

double orthonormality_error(const CMatrix& m) {
  return (m.adjoint() * m - CMatrix::Identity(m.cols(), m.cols())).norm();
}

CMatrix block_diagonal(std::span<const CMatrix> blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  CMatrix out = CMatrix::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace gcsit
