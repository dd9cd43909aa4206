#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gcsit/linalg.hpp"
#include "gcsit/rng.hpp"

namespace gcsit {

// Random-codebook quantization error model. For a codebook of J i.i.d.
// uniform points on a manifold of real dimension G with ball-volume
// coefficient c, the k-th moment D(k) of the chordal quantization error obeys
//
//   G / ((G + k) (cJ)^(k/G))  <=  D(k)  <=  Gamma(k/G) / ((G/k) (cJ)^(k/G)).
//
// The upper bound is used as the moment estimate. The squared error r is then
// modelled as a Gaussian with mean D(2) and variance D(4) - D(2)^2, truncated
// to r >= 0.

struct MomentBounds {
  double lower = 0.0;
  double upper = 0.0;
};

MomentBounds moment_bounds(double k, int real_dimension, double c, double codebook_size);

struct PerturbationParams {
  int G = 0;          // real manifold dimension
  double c = 0.0;     // ball-volume coefficient
  double J = 1.0;     // codebook size 2^bits
  double r_bar = 0.0;     // mean squared chordal error
  double sigma2_r = 0.0;  // its variance, clamped at zero
};

PerturbationParams perturbation_params(int real_dimension, double c, int bits);

/// Draws r ~ N(r_bar, sigma2_r), redrawing until 0 <= r <= r_max. A zero
/// variance returns r_bar. Throws NumericalError after 10^6 rejections.
double sample_squared_error(const PerturbationParams& params, Rng& rng,
                            double r_max = std::numeric_limits<double>::infinity());

/// Principal angles theta_i = asin(s_i sqrt(r) / ||s||). Empty when some
/// argument exceeds one or s is zero.
std::optional<std::vector<double>> angles_from_weights(double r, std::span<const double> weights);

struct PerturbationDraw {
  double r = 0.0;
  std::vector<double> angles;
  GrassmannPoint result;
};

/// Point at principal angles `angles` from f: W [C; S; 0] with W = [F F^c]
/// and a random complement basis F^c. Requires n >= 2p.
GrassmannPoint rotate_by_angles(const GrassmannPoint& f, std::span<const double> angles, Rng& rng);

/**
 * Random point at squared chordal distance r from f (n >= 2p, 0 <= r <= p).
 * The weights s_i ~ U[0, 1] are redrawn up to 100 times if an asin argument
 * falls outside [0, 1]; NumericalError after that.
 */
PerturbationDraw perturb(const GrassmannPoint& f, double r, Rng& rng);

/// Same as perturb for n < 2p: perturbs the (n, n-p) complement by r and
/// returns the complement of the result. Requires 0 <= r <= n - p.
PerturbationDraw perturb_via_complement(const GrassmannPoint& f, double r, Rng& rng);

/// Picks perturb or perturb_via_complement from the shape of f. A point with
/// p == n is returned unchanged (r must be 0).
PerturbationDraw perturb_subspace(const GrassmannPoint& f, double r, Rng& rng);

/// Largest squared chordal distance on G(n, p): min(p, n - p).
double max_squared_distance(Index n, Index p);

/// Closed-form ball-volume coefficient of the complex Grassmannian G(n, p)
/// under the chordal metric:
///   c = prod_{i=1..p} Gamma(n - i + 1) / Gamma(p - i + 1) / Gamma(p (n - p) + 1).
double grassmann_ball_coefficient(Index n, Index p);

struct Calibration {
  Index n = 0;
  Index p = 0;
  int bits = 0;
  std::uint64_t seed = 0;
  int queries = 0;
  double mean_squared_error = 0.0;
  double stderr_squared_error = 0.0;
  double c = 0.0;
};

/// Estimates c by quantizing `queries` Haar points with an RVQ codebook of
/// 2^bits entries and inverting the mean-squared-error model for c.
Calibration calibrate_ball_coefficient(Index n, Index p, int bits, int queries,
                                       std::uint64_t seed);

/// Calibration results keyed by (n, p, bits, seed), persisted as JSON.
class CalibrationCache {
 public:
  static CalibrationCache load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<Calibration> find(Index n, Index p, int bits, std::uint64_t seed) const;
  void insert(const Calibration& cal);
  const std::vector<Calibration>& entries() const { return entries_; }

 private:
  std::vector<Calibration> entries_;
};

}  // namespace gcsit
