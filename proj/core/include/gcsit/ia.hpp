#pragma once

#include <span>
#include <vector>

#include "gcsit/channel.hpp"
#include "gcsit/linalg.hpp"
#include "gcsit/rng.hpp"

namespace gcsit {

struct SolverOptions {
  /// Stop once sum_j ||U_{-j}^H F_j V_j||_F^2 drops to this value.
  double tol = 1e-8;
  int max_iter = 5000;
  /// Extra attempts from fresh random precoders after a non-converged run.
  int restarts = 5;
  /// Keep the residual after every sweep in IaSolution::history.
  bool record_history = false;
};

struct IaSolution {
  std::vector<GrassmannPoint> filters;     // U_i, N x d
  std::vector<GrassmannPoint> precoders;   // V_j, M x d
  double residual = 0.0;                   // alignment residual on the solver inputs
  int iterations = 0;                      // sweeps in the returned attempt
  int attempts = 0;
  bool converged = false;
  std::vector<double> history;             // residual after each sweep (if recorded)
};

/// Symmetric properness test d (K + 1) <= M + N.
bool ia_feasible(const SystemDims& dims);

/**
 * Designs receive filters and precoders that align interference on the
 * given stacked subspaces: subspaces[j] is a (K-1)N x M basis playing the role
 * of BS j's stacked interference channel.
 *
 * Alternating leakage minimization: each filter (resp. precoder) becomes the
 * d minor eigenvectors of the interference covariance it sees, which makes the
 * residual non-increasing across sweeps. Non-converged attempts are retried
 * up to `restarts` times; the best attempt is returned with `converged` set
 * accordingly.
 *
 * Throws InfeasibleError for improper dims or a stack that is not tall, and
 * DimensionError for mis-shaped inputs.
 */
IaSolution solve_ia(std::span<const GrassmannPoint> subspaces, const SystemDims& dims,
                    const SolverOptions& options, Rng& rng);

/// U_{-j} = Bdiag(U_i, i != j), with blocks in stack order.
CMatrix stacked_filters(std::span<const GrassmannPoint> filters, int bs);

/// sum_j ||U_{-j}^H S_j V_j||_F^2, built from the block-diagonal stacks.
double alignment_residual(std::span<const GrassmannPoint> subspaces,
                          std::span<const GrassmannPoint> filters,
                          std::span<const GrassmannPoint> precoders);

/**
 * Precoder applied at BS j: C_j^{-1} F_j^H F_hat_j V_hat_j. With `normalize`
 * the columns are re-orthonormalized so the BS transmits a truncated unitary
 * precoder with the same column space.
 * Throws RankError if C_j is singular.
 */
CMatrix total_precoder(const CMatrix& c, const GrassmannPoint& f, const GrassmannPoint& f_hat,
                       const CMatrix& v_hat, bool normalize);

struct LeakageReport {
  std::vector<double> per_user;        // L_i = tr((P/d) Q_I^i)
  double total = 0.0;                  // sum of per_user
  double total_by_transmitter = 0.0;   // sum_j (P/d) ||U_{-j}^H H_j V_j||_F^2
  /// Smallest c0 with L_i <= c0 for every user of this realization.
  double bound_constant = 0.0;
};

/// Interference leakage power after the receive filters. Both forms of the
/// total are evaluated and must agree to 1e-8 relative (NumericalError
/// otherwise).
LeakageReport leakage_power(const ChannelSet& cs, std::span<const GrassmannPoint> filters,
                            std::span<const CMatrix> precoders, double power);

struct LeakageDecomposition {
  CMatrix x_b;  // U_{-j}^H (F F^H - F_hat F_hat^H) F_hat V_hat
  CMatrix x_c;  // U_{-j}^H F_hat (V_hat V_hat^H - V_tilde V_tilde^H) V_hat
  double leakage_norm = 0.0;        // ||U_{-j}^H F F^H F_hat V_hat||_F
  double decomposition_norm = 0.0;  // ||X_b + X_c||_F
  double x_b_bound = 0.0;           // sqrt(2d) d_c(F, F_hat)
  double x_c_bound = 0.0;           // sqrt(2d) d_c(V_tilde, V_hat)
  bool x_b_within_bound = false;
  bool x_c_within_bound = false;
};

/**
 * Splits BS j's quantization leakage into the CSI part X_b and the precoder
 * part X_c. `filters_stack` is U_{-j} from a solve against f_hat; if
 * ||U_{-j}^H F_hat V_tilde||_F exceeds `alignment_tol` a PreconditionError is
 * thrown, since the split is exact only for aligned inputs.
 */
LeakageDecomposition leakage_decomposition(const GrassmannPoint& f, const GrassmannPoint& f_hat,
                                           const GrassmannPoint& v_tilde,
                                           const GrassmannPoint& v_hat,
                                           const CMatrix& filters_stack,
                                           double alignment_tol = 1e-9);

/// Outcome of a subspace-only alignment check on one channel realization.
struct EquivalenceCheck {
  bool passed = false;
  double leakage = 0.0;  // on the true channels, unit power
  bool solver_converged = false;
};

/**
 * Solves IA on rotated bases F_j O_j (O_j Haar unitary, or identity when
 * `rotate` is false), maps the precoders back through C_j^{-1} O_j and checks
 * that the leakage on the true channels is below 1e-8 P.
 */
EquivalenceCheck rotation_equivalence_check(const ChannelSet& cs, const SolverOptions& options,
                                          Rng& rng, bool rotate = true);

}  // namespace gcsit
