#include "gcsit/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gcsit/errors.hpp"
#include "gcsit/quantizer.hpp"

namespace gcsit {

MomentBounds moment_bounds(double k, int real_dimension, double c, double codebook_size) {
  if (real_dimension < 1 || !(c > 0.0) || !(codebook_size >= 1.0) || !(k > 0.0)) {
    throw DimensionError("moment_bounds: need G >= 1, c > 0, J >= 1, k > 0");
  }
  const double G = real_dimension;
  const double scale = std::pow(c * codebook_size, k / G);
  return MomentBounds{G / ((G + k) * scale), std::tgamma(k / G) / ((G / k) * scale)};
}

PerturbationParams perturbation_params(int real_dimension, double c, int bits) {
  if (bits < 0) throw DimensionError("perturbation_params: negative bits");
  PerturbationParams pp;
  pp.G = real_dimension;
  pp.c = c;
  pp.J = std::ldexp(1.0, bits);
  pp.r_bar = moment_bounds(2.0, real_dimension, c, pp.J).upper;
  const double fourth = moment_bounds(4.0, real_dimension, c, pp.J).upper;
  pp.sigma2_r = std::max(0.0, fourth - pp.r_bar * pp.r_bar);
  return pp;
}

double sample_squared_error(const PerturbationParams& params, Rng& rng, double r_max) {
  if (params.sigma2_r <= 0.0) {
    if (params.r_bar < 0.0 || params.r_bar > r_max) {
      throw NumericalError("sample_squared_error: deterministic r_bar outside [0, r_max]");
    }
    return params.r_bar;
  }
  std::normal_distribution<double> normal(params.r_bar, std::sqrt(params.sigma2_r));
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const double r = normal(rng);
    if (r >= 0.0 && r <= r_max) return r;
  }
  throw NumericalError("sample_squared_error: degenerate parameters, no admissible draw");
}

std::optional<std::vector<double>> angles_from_weights(double r, std::span<const double> weights) {
  double norm2 = 0.0;
  for (double s : weights) norm2 += s * s;
  if (!(norm2 > 0.0)) return std::nullopt;
  const double scale = std::sqrt(r / norm2);
  std::vector<double> angles;
  angles.reserve(weights.size());
  for (double s : weights) {
    double arg = s * scale;
    if (arg > 1.0) {
      if (arg > 1.0 + 1e-12) return std::nullopt;
      arg = 1.0;
    }
    angles.push_back(std::asin(arg));
  }
  return angles;
}

double max_squared_distance(Index n, Index p) {
  return static_cast<double>(std::min(p, n - p));
}

GrassmannPoint rotate_by_angles(const GrassmannPoint& f, std::span<const double> angles,
                                Rng& rng) {
  const Index n = f.n();
  const Index p = f.p();
  if (n < 2 * p) throw DimensionError("rotate_by_angles: requires n >= 2p");
  if (static_cast<Index>(angles.size()) != p) {
    throw DimensionError("rotate_by_angles: need one angle per column");
  }
  const GrassmannPoint fc = orthonormal_complement(f, rng);
  CMatrix out(n, p);
  for (Index i = 0; i < p; ++i) {
    const double th = angles[static_cast<std::size_t>(i)];
    out.col(i) = std::cos(th) * f.basis().col(i) + std::sin(th) * fc.basis().col(i);
  }
  return GrassmannPoint(std::move(out));
}

PerturbationDraw perturb(const GrassmannPoint& f, double r, Rng& rng) {
  const Index p = f.p();
  if (f.n() < 2 * p) throw DimensionError("perturb: requires n >= 2p");
  if (!(r >= 0.0) || r > static_cast<double>(p)) {
    throw DimensionError("perturb: squared distance must lie in [0, p]");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> weights(static_cast<std::size_t>(p));
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (double& s : weights) s = unit(rng);
    if (auto angles = angles_from_weights(r, weights)) {
      PerturbationDraw draw;
      draw.r = r;
      draw.result = rotate_by_angles(f, *angles, rng);
      draw.angles = std::move(*angles);
      return draw;
    }
  }
  throw NumericalError("perturb: no admissible angle weights after 100 draws");
}

PerturbationDraw perturb_via_complement(const GrassmannPoint& f, double r, Rng& rng) {
  const Index n = f.n();
  const Index p = f.p();
  if (p >= n) throw DimensionError("perturb_via_complement: empty complement");
  if (n > 2 * p) throw DimensionError("perturb_via_complement: requires n <= 2p");
  if (!(r >= 0.0) || r > static_cast<double>(n - p)) {
    throw DimensionError("perturb_via_complement: squared distance must lie in [0, n - p]");
  }
  const GrassmannPoint fc = orthonormal_complement(f, rng);
  PerturbationDraw inner = perturb(fc, r, rng);
  inner.result = orthonormal_complement(inner.result, rng);
  return inner;
}

PerturbationDraw perturb_subspace(const GrassmannPoint& f, double r, Rng& rng) {
  if (f.p() == f.n()) {
    if (r != 0.0) throw DimensionError("perturb_subspace: G(n, n) is a single point");
    return PerturbationDraw{0.0, {}, f};
  }
  return f.n() >= 2 * f.p() ? perturb(f, r, rng) : perturb_via_complement(f, r, rng);
}

double grassmann_ball_coefficient(Index n, Index p) {
  if (p < 1 || p >= n) throw DimensionError("grassmann_ball_coefficient: need 1 <= p < n");
  double log_c = -std::lgamma(static_cast<double>(p * (n - p)) + 1.0);
  for (Index i = 1; i <= p; ++i) {
    log_c += std::lgamma(static_cast<double>(n - i + 1)) - std::lgamma(static_cast<double>(p - i + 1));
  }
  return std::exp(log_c);
}

Calibration calibrate_ball_coefficient(Index n, Index p, int bits, int queries,
                                       std::uint64_t seed) {
  if (queries < 2) throw DimensionError("calibrate_ball_coefficient: need at least 2 queries");
  const int G = grassmann_real_dimension(static_cast<int>(n), static_cast<int>(p));
  if (G < 1) throw DimensionError("calibrate_ball_coefficient: manifold is a point");
  const Codebook cb = build_rvq_codebook(n, p, bits, derive_seed(seed, {0xCA1, 1}));
  Rng rng = make_rng(seed, {0xCA1, 2});

  double sum = 0.0;
  double sum_sq = 0.0;
  for (int q = 0; q < queries; ++q) {
    const double d = quantize(haar_truncated_unitary(n, p, rng), cb).distance;
    sum += d * d;
    sum_sq += d * d * d * d;
  }
  Calibration cal;
  cal.n = n;
  cal.p = p;
  cal.bits = bits;
  cal.seed = seed;
  cal.queries = queries;
  cal.mean_squared_error = sum / queries;
  const double var = std::max(0.0, (sum_sq - sum * sum / queries) / (queries - 1));
  cal.stderr_squared_error = std::sqrt(var / queries);

  // mean = Gamma(2/G) / ((G/2) (cJ)^(2/G))  =>  cJ = (Gamma(2/G) / ((G/2) mean))^(G/2)
  const double g = G;
  const double cj = std::pow(std::tgamma(2.0 / g) / ((g / 2.0) * cal.mean_squared_error), g / 2.0);
  cal.c = cj / std::ldexp(1.0, bits);
  return cal;
}

CalibrationCache CalibrationCache::load(const std::filesystem::path& path) {
  CalibrationCache cache;
  std::ifstream in(path);
  if (!in) return cache;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& e : doc.at("entries")) {
      Calibration cal;
      cal.n = e.at("n").get<Index>();
      cal.p = e.at("p").get<Index>();
      cal.bits = e.at("bits").get<int>();
      cal.seed = e.at("seed").get<std::uint64_t>();
      cal.queries = e.at("queries").get<int>();
      cal.mean_squared_error = e.at("mean_squared_error").get<double>();
      cal.stderr_squared_error = e.value("stderr_squared_error", 0.0);
      cal.c = e.at("c").get<double>();
      cache.entries_.push_back(cal);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("calibration cache " + path.string() + ": " + e.what());
  }
  return cache;
}

void CalibrationCache::save(const std::filesystem::path& path) const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& cal : entries_) {
    entries.push_back({{"n", cal.n},
                       {"p", cal.p},
                       {"bits", cal.bits},
                       {"seed", cal.seed},
                       {"queries", cal.queries},
                       {"mean_squared_error", cal.mean_squared_error},
                       {"stderr_squared_error", cal.stderr_squared_error},
                       {"c", cal.c}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << nlohmann::json{{"entries", entries}}.dump(2) << '\n';
}

std::optional<Calibration> CalibrationCache::find(Index n, Index p, int bits,
                                                  std::uint64_t seed) const {
  for (const auto& cal : entries_) {
    if (cal.n == n && cal.p == p && cal.bits == bits && cal.seed == seed) return cal;
  }
  return std::nullopt;
}

void CalibrationCache::insert(const Calibration& cal) {
  for (auto& e : entries_) {
    if (e.n == cal.n && e.p == cal.p && e.bits == cal.bits && e.seed == cal.seed) {
      e = cal;
      return;
    }
  }
  entries_.push_back(cal);
}

}  // namespace gcsit
