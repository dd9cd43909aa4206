#include "gcsit/ia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "gcsit/errors.hpp"

namespace gcsit {

bool ia_feasible(const SystemDims& dims) {
  if (dims.K < 2 || dims.M < 1 || dims.N < 1 || dims.d < 1) return false;
  if (dims.d > dims.M || dims.d > dims.N) return false;
  return dims.d * (dims.K + 1) <= dims.M + dims.N;
}

namespace {

// Minor eigenvectors of a Hermitian matrix, ascending eigenvalue order.
CMatrix minor_subspace(const CMatrix& cov, Index d) {
  const CMatrix herm = 0.5 * (cov + cov.adjoint());
  const Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("solve_ia: eigen-decomposition failed");
  }
  return eig.eigenvectors().leftCols(d);
}

struct Attempt {
  std::vector<CMatrix> u;
  std::vector<CMatrix> v;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> history;
};

class AlternatingSolver {
 public:
  AlternatingSolver(std::span<const GrassmannPoint> subspaces, const SystemDims& dims)
      : dims_(dims), blocks_(static_cast<std::size_t>(dims.K * dims.K)) {
    for (int j = 0; j < dims.K; ++j) {
      const CMatrix& s = subspaces[static_cast<std::size_t>(j)].basis();
      for (int i = 0; i < dims.K; ++i) {
        if (i == j) continue;
        block(i, j) = s.middleRows(stack_block_index(i, j) * dims.N, dims.N);
      }
    }
  }

  Attempt run(const SolverOptions& options, Rng& rng) const {
    const int K = dims_.K;
    Attempt a;
    a.u.resize(static_cast<std::size_t>(K));
    a.v.resize(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
      a.v[static_cast<std::size_t>(j)] = haar_truncated_unitary(dims_.M, dims_.d, rng).basis();
    }
    CMatrix cov_rx(dims_.N, dims_.N);
    CMatrix cov_tx(dims_.M, dims_.M);
    for (int it = 1; it <= options.max_iter; ++it) {
      for (int i = 0; i < K; ++i) {
        cov_rx.setZero();
        for (int j = 0; j < K; ++j) {
          if (j == i) continue;
          const CMatrix t = block(i, j) * a.v[static_cast<std::size_t>(j)];
          cov_rx.noalias() += t * t.adjoint();
        }
        a.u[static_cast<std::size_t>(i)] = minor_subspace(cov_rx, dims_.d);
      }
      for (int j = 0; j < K; ++j) {
        cov_tx.setZero();
        for (int i = 0; i < K; ++i) {
          if (i == j) continue;
          const CMatrix t = block(i, j).adjoint() * a.u[static_cast<std::size_t>(i)];
          cov_tx.noalias() += t * t.adjoint();
        }
        a.v[static_cast<std::size_t>(j)] = minor_subspace(cov_tx, dims_.d);
      }
      a.residual = residual(a);
      a.iterations = it;
      if (options.record_history) a.history.push_back(a.residual);
      if (a.residual <= options.tol) break;
    }
    return a;
  }

 private:
  CMatrix& block(int i, int j) { return blocks_[static_cast<std::size_t>(i * dims_.K + j)]; }
  const CMatrix& block(int i, int j) const {
    return blocks_[static_cast<std::size_t>(i * dims_.K + j)];
  }

  double residual(const Attempt& a) const {
    double sum = 0.0;
    for (int i = 0; i < dims_.K; ++i) {
      for (int j = 0; j < dims_.K; ++j) {
        if (i == j) continue;
        sum += (a.u[static_cast<std::size_t>(i)].adjoint() * block(i, j) *
                a.v[static_cast<std::size_t>(j)])
                   .squaredNorm();
      }
    }
    return sum;
  }

  SystemDims dims_;
  std::vector<CMatrix> blocks_;
};

std::vector<GrassmannPoint> to_points(std::vector<CMatrix>& bases) {
  std::vector<GrassmannPoint> out;
  out.reserve(bases.size());
  for (auto& b : bases) out.emplace_back(std::move(b));
  return out;
}

}  // namespace

IaSolution solve_ia(std::span<const GrassmannPoint> subspaces, const SystemDims& dims,
                    const SolverOptions& options, Rng& rng) {
  dims.validate();
  if (!ia_feasible(dims)) {
    throw InfeasibleError("solve_ia: d (K+1) > M + N, alignment is not proper");
  }
  if (!dims.stack_is_tall()) {
    throw InfeasibleError("solve_ia: requires (K-1) N > M");
  }
  if (subspaces.size() != static_cast<std::size_t>(dims.K)) {
    throw DimensionError("solve_ia: expected one stacked subspace per BS");
  }
  for (const auto& s : subspaces) {
    if (s.n() != dims.stack_rows() || s.p() != dims.M) {
      throw DimensionError("solve_ia: stacked subspaces must be (K-1)N x M");
    }
  }
  if (options.max_iter < 1 || options.restarts < 0 || !(options.tol >= 0.0)) {
    throw DimensionError("solve_ia: invalid solver options");
  }

  const AlternatingSolver solver(subspaces, dims);
  Attempt best;
  int attempts = 0;
  for (int r = 0; r <= options.restarts; ++r) {
    Attempt a = solver.run(options, rng);
    ++attempts;
    const bool better = a.residual < best.residual;
    if (better) best = std::move(a);
    if (best.residual <= options.tol) break;
  }

  IaSolution sol;
  sol.residual = best.residual;
  sol.iterations = best.iterations;
  sol.attempts = attempts;
  sol.converged = best.residual <= options.tol;
  sol.history = std::move(best.history);
  sol.filters = to_points(best.u);
  sol.precoders = to_points(best.v);
  return sol;
}

CMatrix stacked_filters(std::span<const GrassmannPoint> filters, int bs) {
  const int K = static_cast<int>(filters.size());
  if (bs < 0 || bs >= K) throw DimensionError("stacked_filters: BS index out of range");
  std::vector<CMatrix> blocks;
  blocks.reserve(static_cast<std::size_t>(K - 1));
  for (int i = 0; i < K; ++i) {
    if (i != bs) blocks.push_back(filters[static_cast<std::size_t>(i)].basis());
  }
  return block_diagonal(blocks);
}

double alignment_residual(std::span<const GrassmannPoint> subspaces,
                          std::span<const GrassmannPoint> filters,
                          std::span<const GrassmannPoint> precoders) {
  if (subspaces.size() != filters.size() || subspaces.size() != precoders.size()) {
    throw DimensionError("alignment_residual: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < subspaces.size(); ++j) {
    const CMatrix u = stacked_filters(filters, static_cast<int>(j));
    const CMatrix& s = subspaces[j].basis();
    const CMatrix& v = precoders[j].basis();
    if (u.rows() != s.rows() || s.cols() != v.rows()) {
      throw DimensionError("alignment_residual: shape mismatch");
    }
    sum += (u.adjoint() * s * v).squaredNorm();
  }
  return sum;
}

CMatrix total_precoder(const CMatrix& c, const GrassmannPoint& f, const GrassmannPoint& f_hat,
                       const CMatrix& v_hat, bool normalize) {
  if (c.rows() != c.cols() || f.p() != c.rows() || f.n() != f_hat.n() || f.p() != f_hat.p() ||
      v_hat.rows() != f_hat.p()) {
    throw DimensionError("total_precoder: shape mismatch");
  }
  const Eigen::FullPivLU<CMatrix> lu(c);
  if (!lu.isInvertible()) {
    throw RankError("total_precoder: C_j is singular");
  }
  CMatrix v = lu.solve(f.basis().adjoint() * f_hat.basis() * v_hat);
  if (normalize) {
    v = qr_orthonormal_factor(v).q.basis();
  }
  return v;
}

LeakageReport leakage_power(const ChannelSet& cs, std::span<const GrassmannPoint> filters,
                            std::span<const CMatrix> precoders, double power) {
  const auto& dims = cs.dims();
  const auto K = static_cast<std::size_t>(dims.K);
  if (filters.size() != K || precoders.size() != K) {
    throw DimensionError("leakage_power: need K filters and K precoders");
  }
  const Index d = filters[0].p();
  for (std::size_t k = 0; k < K; ++k) {
    if (filters[k].n() != dims.N || filters[k].p() != d || precoders[k].rows() != dims.M ||
        precoders[k].cols() != d) {
      throw DimensionError("leakage_power: filter/precoder shape mismatch");
    }
  }
  const double scale = power / static_cast<double>(d);

  LeakageReport rep;
  rep.per_user.assign(K, 0.0);
  double reference = 0.0;
  for (int i = 0; i < dims.K; ++i) {
    const CMatrix& u = filters[static_cast<std::size_t>(i)].basis();
    CMatrix q = CMatrix::Zero(d, d);
    for (int j = 0; j < dims.K; ++j) {
      if (j == i) continue;
      const CMatrix hv = cs.at(i, j) * precoders[static_cast<std::size_t>(j)];
      const CMatrix t = u.adjoint() * hv;
      q.noalias() += t * t.adjoint();
      reference += hv.squaredNorm();
    }
    rep.per_user[static_cast<std::size_t>(i)] = scale * q.trace().real();
  }
  for (double l : rep.per_user) rep.total += l;
  rep.bound_constant = *std::max_element(rep.per_user.begin(), rep.per_user.end());

  for (int j = 0; j < dims.K; ++j) {
    const CMatrix u = stacked_filters(filters, j);
    rep.total_by_transmitter +=
        scale * (u.adjoint() * stacked_interference_matrix(cs, j) *
                 precoders[static_cast<std::size_t>(j)])
                    .squaredNorm();
  }

  const double gap = std::abs(rep.total - rep.total_by_transmitter);
  const double allowed =
      1e-8 * std::max(rep.total, rep.total_by_transmitter) + 1e-20 * scale * reference;
  if (gap > allowed) {
    throw NumericalError("leakage_power: per-user and per-transmitter totals disagree");
  }
  return rep;
}

LeakageDecomposition leakage_decomposition(const GrassmannPoint& f, const GrassmannPoint& f_hat,
                                           const GrassmannPoint& v_tilde,
                                           const GrassmannPoint& v_hat,
                                           const CMatrix& filters_stack, double alignment_tol) {
  if (f.n() != f_hat.n() || f.p() != f_hat.p() || v_tilde.n() != f.p() ||
      v_hat.n() != v_tilde.n() || v_hat.p() != v_tilde.p() || filters_stack.rows() != f.n()) {
    throw DimensionError("leakage_decomposition: shape mismatch");
  }
  const CMatrix& F = f.basis();
  const CMatrix& Fh = f_hat.basis();
  const CMatrix& Vt = v_tilde.basis();
  const CMatrix& Vh = v_hat.basis();
  const CMatrix uh = filters_stack.adjoint();

  const double misalignment = (uh * Fh * Vt).norm();
  if (misalignment > alignment_tol) {
    throw PreconditionError("leakage_decomposition: filters are not aligned with F_hat (" +
                            std::to_string(misalignment) + ")");
  }

  LeakageDecomposition out;
  out.x_b = uh * (f.projector() - f_hat.projector()) * Fh * Vh;
  out.x_c = uh * Fh * (v_hat.projector() - v_tilde.projector()) * Vh;
  out.leakage_norm = (uh * F * (F.adjoint() * Fh * Vh)).norm();
  out.decomposition_norm = (out.x_b + out.x_c).norm();

  const double root = std::sqrt(2.0 * static_cast<double>(v_hat.p()));
  out.x_b_bound = root * chordal_distance(f, f_hat);
  out.x_c_bound = root * chordal_distance(v_tilde, v_hat);
  constexpr double slack = 1e-12;
  out.x_b_within_bound = out.x_b.norm() <= out.x_b_bound + slack;
  out.x_c_within_bound = out.x_c.norm() <= out.x_c_bound + slack;
  return out;
}

EquivalenceCheck rotation_equivalence_check(const ChannelSet& cs, const SolverOptions& options,
                                            Rng& rng, bool rotate) {
  const auto& dims = cs.dims();
  const auto K = static_cast<std::size_t>(dims.K);
  std::vector<QrFactor> factors;
  std::vector<CMatrix> rotations;
  std::vector<GrassmannPoint> rotated;
  factors.reserve(K);
  for (int j = 0; j < dims.K; ++j) {
    factors.push_back(qr_orthonormal_factor(stacked_interference_matrix(cs, j)));
    rotations.push_back(rotate ? haar_unitary(dims.M, rng) : CMatrix::Identity(dims.M, dims.M));
    rotated.emplace_back(factors.back().q.basis() * rotations.back());
  }

  const IaSolution sol = solve_ia(rotated, dims, options, rng);
  if (!sol.converged) {
    throw NumericalError("rotation_equivalence_check: IA solver did not converge (residual " +
                         std::to_string(sol.residual) + ")");
  }

  std::vector<CMatrix> precoders;
  precoders.reserve(K);
  for (std::size_t j = 0; j < K; ++j) {
    const Eigen::FullPivLU<CMatrix> lu(factors[j].r);
    precoders.push_back(lu.solve(rotations[j] * sol.precoders[j].basis()));
  }
  EquivalenceCheck out;
  out.solver_converged = true;
  out.leakage = leakage_power(cs, sol.filters, precoders, 1.0).total;
  out.passed = out.leakage < 1e-8;
  return out;
}

}  // namespace gcsit
