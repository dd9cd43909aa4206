#pragma once

#include <complex>
#include <span>

#include <Eigen/Dense>

#include "gcsit/rng.hpp"

namespace gcsit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Tolerance on ||B^H B - I||_F for a basis to count as truncated unitary.
inline constexpr double kOrthonormalTol = 1e-10;

/// Smallest-to-largest singular value ratio below which a matrix is treated as
/// rank deficient.
inline constexpr double kRankTol = 1e-12;

/**
 * A point on the complex Grassmann manifold G(n, p): the column space of an
 * n x p truncated unitary basis. Bases B and B*O with O a p x p unitary
 * represent the same point; every geometric function here is invariant to that
 * choice.
 */
class GrassmannPoint {
 public:
  GrassmannPoint() = default;

  /// Wraps `basis`, which must be finite with orthonormal columns (p <= n).
  /// Throws DimensionError otherwise.
  explicit GrassmannPoint(CMatrix basis);

  /// Column space of an arbitrary full-column-rank matrix.
  static GrassmannPoint span_of(const CMatrix& a);

  const CMatrix& basis() const { return basis_; }
  Index n() const { return basis_.rows(); }
  Index p() const { return basis_.cols(); }

  /// Orthogonal projector B B^H onto the subspace.
  CMatrix projector() const { return basis_ * basis_.adjoint(); }

 private:
  CMatrix basis_;
};

/// Thin QR factorization A = Q R with R upper triangular and a strictly
/// positive real diagonal, which pins down a unique Q.
struct QrFactor {
  GrassmannPoint q;
  CMatrix r;
};

/// Factors an n x p matrix of full column rank. Throws RankError when the
/// singular value spread exceeds 1/kRankTol and DimensionError when n < p.
QrFactor qr_orthonormal_factor(const CMatrix& a);

/// d_c(X, Y) = ||X X^H - Y Y^H||_F / sqrt(2). Lies in [0, sqrt(p)].
double chordal_distance(const GrassmannPoint& x, const GrassmannPoint& y);

/// Square of chordal_distance, without the final square root.
double squared_chordal_distance(const GrassmannPoint& x, const GrassmannPoint& y);

/// rows x cols matrix of i.i.d. CN(0, 1) entries.
CMatrix complex_gaussian(Index rows, Index cols, Rng& rng);

/// Haar-distributed n x p truncated unitary matrix (QR of a Gaussian matrix
/// with the positive-diagonal convention).
GrassmannPoint haar_truncated_unitary(Index n, Index p, Rng& rng);

/// Haar-distributed n x n unitary matrix.
CMatrix haar_unitary(Index n, Rng& rng);

/// Random orthonormal basis of the orthogonal complement of `f`, Haar within
/// the complement. Throws DimensionError when p == n.
GrassmannPoint orthonormal_complement(const GrassmannPoint& f, Rng& rng);

/// ||M^H M - I||_F.
double orthonormality_error(const CMatrix& m);

/// Block-diagonal matrix Bdiag(blocks...).
CMatrix block_diagonal(std::span<const CMatrix> blocks);

}  // namespace gcsit
