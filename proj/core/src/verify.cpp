#include "gcsit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gcsit/channel.hpp"
#include "gcsit/errors.hpp"
#include "gcsit/ia.hpp"
#include "gcsit/perturbation.hpp"
#include "gcsit/rng.hpp"

namespace gcsit {

namespace {

const SystemDims kDims{3, 5, 3, 2};

constexpr std::uint64_t kDualStream = 0x5E1;
constexpr std::uint64_t kSplitStream = 0x5E2;
constexpr std::uint64_t kRotationStream = 0x5E3;
constexpr std::uint64_t kPerturbStream = 0x5E4;
constexpr std::uint64_t kMetricStream = 0x5E5;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Rebuilds a channel set whose BS-j stacks are f[j] * c[j].
ChannelSet channels_from_stacks(const std::vector<GrassmannPoint>& f, const std::vector<CMatrix>& c,
                                Rng& rng) {
  const int K = kDims.K;
  std::vector<CMatrix> blocks(static_cast<std::size_t>(K * K));
  for (int j = 0; j < K; ++j) {
    const CMatrix stack = f[static_cast<std::size_t>(j)].basis() * c[static_cast<std::size_t>(j)];
    for (int i = 0; i < K; ++i) {
      auto& blk = blocks[static_cast<std::size_t>(i * K + j)];
      blk = i == j ? complex_gaussian(kDims.N, kDims.M, rng)
                   : CMatrix(stack.middleRows(stack_block_index(i, j) * kDims.N, kDims.N));
    }
  }
  return ChannelSet(kDims, std::move(blocks));
}

}  // namespace

CheckResult check_dual_form_leakage(const PropertySuiteOptions& opt) {
  CheckResult res{"leakage dual-form agreement", true, 0, 0.0, {}};
  Rng rng = make_rng(opt.seed, {kDualStream});
  for (int t = 0; t < opt.leakage_draws; ++t) {
    const ChannelSet cs = generate_channel_set(kDims, rng);
    std::vector<GrassmannPoint> filters;
    std::vector<CMatrix> precoders;
    for (int k = 0; k < kDims.K; ++k) {
      filters.push_back(haar_truncated_unitary(kDims.N, kDims.d, rng));
      precoders.push_back(complex_gaussian(kDims.M, kDims.d, rng));
    }
    const double power = std::pow(10.0, uniform(rng, 0.0, 4.0));
    try {
      const LeakageReport rep = leakage_power(cs, filters, precoders, power);
      const double rel = std::abs(rep.total - rep.total_by_transmitter) / rep.total;
      res.worst = std::max(res.worst, rel);
    } catch (const NumericalError&) {
      res.worst = std::max(res.worst, 1.0);
    }
    ++res.draws;
  }
  res.passed = res.worst <= 1e-8;
  res.detail = fmt::format("max relative gap {:.3e} over {} draws", res.worst, res.draws);
  return res;
}

std::vector<CheckResult> check_leakage_decomposition(const PropertySuiteOptions& opt) {
  CheckResult identity{"leakage split identity", true, 0, 0.0, {}};
  CheckResult bound_b{"CSI term bound", true, 0, -HUGE_VAL, {}};
  CheckResult bound_c{"precoder term bound", true, 0, -HUGE_VAL, {}};
  Rng rng = make_rng(opt.seed, {kSplitStream});
  SolverOptions solver;
  solver.tol = 1e-20;
  solver.max_iter = 20000;

  const auto K = static_cast<std::size_t>(kDims.K);
  int skipped = 0;
  while (identity.draws < opt.decomposition_draws) {
    const ChannelSet base = generate_channel_set(kDims, rng);
    std::vector<GrassmannPoint> f_hat;
    std::vector<CMatrix> c;
    for (int j = 0; j < kDims.K; ++j) {
      QrFactor qr = qr_orthonormal_factor(stacked_interference_matrix(base, j));
      f_hat.push_back(std::move(qr.q));
      c.push_back(std::move(qr.r));
    }
    const IaSolution sol = solve_ia(f_hat, kDims, solver, rng);
    if (!sol.converged) {
      if (++skipped > 100) throw NumericalError("leakage split check: solver keeps failing");
      continue;
    }
    for (int s = 0; s < opt.draws_per_solve && identity.draws < opt.decomposition_draws; ++s) {
      std::vector<GrassmannPoint> f;
      std::vector<GrassmannPoint> v_hat;
      std::vector<CMatrix> precoders;
      for (std::size_t j = 0; j < K; ++j) {
        f.push_back(perturb_subspace(f_hat[j], uniform(rng, 0.01, 0.5), rng).result);
        v_hat.push_back(perturb_subspace(sol.precoders[j], uniform(rng, 0.01, 1.0), rng).result);
        precoders.push_back(total_precoder(c[j], f[j], f_hat[j], v_hat[j].basis(), false));
      }
      const ChannelSet cs = channels_from_stacks(f, c, rng);
      double split_total = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        const LeakageDecomposition dec =
            leakage_decomposition(f[j], f_hat[j], sol.precoders[j], v_hat[j],
                                  stacked_filters(sol.filters, static_cast<int>(j)));
        split_total += dec.decomposition_norm * dec.decomposition_norm;
        bound_b.worst = std::max(bound_b.worst, dec.x_b.norm() - dec.x_b_bound);
        bound_c.worst = std::max(bound_c.worst, dec.x_c.norm() - dec.x_c_bound);
        bound_b.passed = bound_b.passed && dec.x_b_within_bound;
        bound_c.passed = bound_c.passed && dec.x_c_within_bound;
        ++bound_b.draws;
        ++bound_c.draws;
      }
      // P = d makes the P/d weighting unity.
      const double direct = leakage_power(cs, sol.filters, precoders, kDims.d).total;
      identity.worst = std::max(identity.worst, std::abs(direct - split_total) / direct);
      ++identity.draws;
    }
  }
  identity.passed = identity.worst <= 1e-8;
  identity.detail = fmt::format("max relative gap {:.3e} over {} draws", identity.worst,
                                identity.draws);
  bound_b.detail = fmt::format("max norm minus bound {:.3e} over {} terms", bound_b.worst, bound_b.draws);
  bound_c.detail = fmt::format("max norm minus bound {:.3e} over {} terms", bound_c.worst, bound_c.draws);
  return {identity, bound_b, bound_c};
}

CheckResult check_rotation_equivalence(const PropertySuiteOptions& opt) {
  CheckResult res{"rotation equivalence", true, 0, 0.0, {}};
  Rng rng = make_rng(opt.seed, {kRotationStream});
  SolverOptions solver;
  solver.tol = 1e-12;
  solver.max_iter = 20000;
  int failures = 0;
  for (int t = 0; t < opt.rotation_draws; ++t) {
    const ChannelSet cs = generate_channel_set(kDims, rng);
    try {
      const EquivalenceCheck eq = rotation_equivalence_check(cs, solver, rng, true);
      res.worst = std::max(res.worst, eq.leakage);
      if (!eq.passed) ++failures;
    } catch (const NumericalError&) {
      ++failures;
    }
    ++res.draws;
  }
  res.passed = failures == 0;
  res.detail = fmt::format("{} failures, max leakage {:.3e} over {} rotations", failures,
                           res.worst, res.draws);
  return res;
}

CheckResult check_perturbation_distance(const PropertySuiteOptions& opt) {
  CheckResult res{"perturbation distance control", true, 0, 0.0, {}};
  Rng rng = make_rng(opt.seed, {kPerturbStream});
  const std::pair<Index, Index> shapes[] = {{6, 5}, {5, 2}, {10, 1}, {4, 2}};
  for (int t = 0; t < opt.perturbation_draws; ++t) {
    const auto [n, p] = shapes[static_cast<std::size_t>(t) % std::size(shapes)];
    const GrassmannPoint f = haar_truncated_unitary(n, p, rng);
    // Any r <= 1 is reachable whatever the angle weights.
    const double r = uniform(rng, 0.0, std::min(1.0, max_squared_distance(n, p)));
    const PerturbationDraw draw = perturb_subspace(f, r, rng);
    const double err = std::abs(squared_chordal_distance(f, draw.result) - r);
    res.worst = std::max(res.worst, std::max(err, orthonormality_error(draw.result.basis())));
    ++res.draws;
  }
  res.passed = res.worst <= 1e-10;
  res.detail = fmt::format("max |d^2 - r| {:.3e} over {} draws", res.worst, res.draws);
  return res;
}

CheckResult check_chordal_metric(const PropertySuiteOptions& opt) {
  CheckResult res{"chordal metric axioms", true, 0, 0.0, {}};
  Rng rng = make_rng(opt.seed, {kMetricStream});
  const std::pair<Index, Index> shapes[] = {{6, 5}, {5, 2}, {10, 1}, {8, 3}};
  constexpr double tol = 1e-12;
  for (int t = 0; t < opt.metric_triples; ++t) {
    const auto [n, p] = shapes[static_cast<std::size_t>(t) % std::size(shapes)];
    const GrassmannPoint x = haar_truncated_unitary(n, p, rng);
    const GrassmannPoint y = haar_truncated_unitary(n, p, rng);
    const GrassmannPoint z = haar_truncated_unitary(n, p, rng);
    const GrassmannPoint x_rot(x.basis() * haar_unitary(p, rng));
    const double xy = chordal_distance(x, y);
    const double yx = chordal_distance(y, x);
    const double xz = chordal_distance(x, z);
    const double zy = chordal_distance(z, y);
    const double violations[] = {
        chordal_distance(x, x),                                  // identity
        chordal_distance(x, x_rot),                              // basis invariance
        std::abs(xy - yx),                                       // symmetry
        xy - (xz + zy),                                          // triangle
        -xy,                                                     // non-negativity
        xy * xy - max_squared_distance(n, p),                    // diameter
        std::abs(chordal_distance(x_rot, y) - xy),               // invariance in distance
    };
    for (double v : violations) res.worst = std::max(res.worst, v);
    ++res.draws;
  }
  res.passed = res.worst <= tol;
  res.detail = fmt::format("max violation {:.3e} over {} triples", res.worst, res.draws);
  return res;
}

std::vector<CheckResult> run_property_suite(const PropertySuiteOptions& opt) {
  std::vector<CheckResult> out;
  out.push_back(check_dual_form_leakage(opt));
  for (auto& r : check_leakage_decomposition(opt)) out.push_back(std::move(r));
  out.push_back(check_rotation_equivalence(opt));
  out.push_back(check_perturbation_distance(opt));
  out.push_back(check_chordal_metric(opt));
  return out;
}

}  // namespace gcsit
