#include "gcsit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "gcsit/errors.hpp"
#include "gcsit/perturbation.hpp"
#include "gcsit/quantizer.hpp"
#include "gcsit/rng.hpp"

namespace gcsit {

double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kChannelStream = 0xC4A1;
constexpr std::uint64_t kDesignStream = 0xDE51;
constexpr std::uint64_t kCodebookStream = 0xCB00;
constexpr std::uint64_t kCalibrationStream = 0xCA1B;
constexpr std::uint64_t kCsiRole = 1;
constexpr std::uint64_t kPrecoderRole = 2;
constexpr std::uint64_t kCompositeRole = 3;

double log2_det_hpd(const CMatrix& a) {
  const Eigen::LLT<CMatrix> llt(a);
  if (llt.info() == Eigen::Success) {
    double sum = 0.0;
    for (Index k = 0; k < a.rows(); ++k) sum += std::log2(llt.matrixL()(k, k).real());
    return 2.0 * sum;
  }
  const CMatrix herm = 0.5 * (a + a.adjoint());
  const Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw NumericalError("log-determinant of a non positive definite covariance");
  }
  return eig.eigenvalues().array().log2().sum();
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct BitPair {
  int n_b = 0;
  int n_c = 0;
  auto operator<=>(const BitPair&) const = default;
};

// Everything a trial needs that is shared across trials: codebooks and
// perturbation models, built once per run.
class SharedState {
 public:
  explicit SharedState(const SimConfig& cfg) : cfg_(cfg) {
    const auto& dims = cfg.dims;
    csi_n_ = dims.stack_rows();
    csi_p_ = dims.M;
    if (cfg.precoder_mode == PrecoderMode::subspace) {
      pre_n_ = dims.M;
      pre_p_ = dims.d;
    } else {
      pre_n_ = dims.M * dims.d;
      pre_p_ = 1;
    }
    for (double db : cfg.snr_grid) bits_.push_back(bits_for(db_to_power(db)));
    prepare();
  }

  BitPair bits_at(std::size_t s) const { return bits_[s]; }

  const Codebook& csi_codebook(int bits) const { return csi_cb_.at(bits); }
  const Codebook& precoder_codebook(int bits) const { return pre_cb_.at(bits); }
  const CompositeCodebook& composite_codebook(int bits) const { return comp_cb_.at(bits); }
  const PerturbationParams& csi_params(int bits) const { return csi_pp_.at(bits); }
  const PerturbationParams& precoder_params(int bits) const { return pre_pp_.at(bits); }

  Index precoder_n() const { return pre_n_; }
  Index precoder_p() const { return pre_p_; }

 private:
  BitPair bits_for(double power) const {
    switch (cfg_.csit_mode) {
      case CsitMode::perfect: return {0, 0};
      default: break;
    }
    if (cfg_.bits_mode == BitsMode::fixed) return {cfg_.n_b, cfg_.n_c};
    return {bit_scaling(power, grassmann_real_dimension(static_cast<int>(csi_n_),
                                                        static_cast<int>(csi_p_))),
            bit_scaling(power, grassmann_real_dimension(static_cast<int>(pre_n_),
                                                        static_cast<int>(pre_p_)))};
  }

  std::uint64_t codebook_seed(std::uint64_t role, int bits) const {
    return derive_seed(cfg_.seed, {kCodebookStream, role, static_cast<std::uint64_t>(bits)});
  }

  Codebook cached_codebook(Index n, Index p, int bits, std::uint64_t seed) const {
    if (cfg_.codebook_cache_dir.empty()) return build_rvq_codebook(n, p, bits, seed);
    const auto path = std::filesystem::path(cfg_.codebook_cache_dir) /
                      codebook_cache_name(n, p, bits, seed);
    if (std::filesystem::exists(path)) {
      Codebook cb = load_codebook(path);
      if (cb.n() == n && cb.p() == p && cb.bits() == bits && cb.seed() == seed) return cb;
    }
    Codebook cb = build_rvq_codebook(n, p, bits, seed);
    std::filesystem::create_directories(cfg_.codebook_cache_dir);
    save_codebook(cb, path);
    return cb;
  }

  double ball_coefficient(Index n, Index p, std::uint64_t role) const {
    const auto& pt = cfg_.perturbation;
    switch (pt.source) {
      case BallCoefficientSource::fixed:
        return role == kCsiRole ? pt.c_csi : pt.c_precoder;
      case BallCoefficientSource::closed_form:
        return grassmann_ball_coefficient(n, p);
      case BallCoefficientSource::calibrate: break;
    }
    const std::uint64_t seed = derive_seed(cfg_.seed, {kCalibrationStream, role});
    std::lock_guard lock(calibration_mutex());
    CalibrationCache cache;
    if (!pt.cache_path.empty()) {
      cache = CalibrationCache::load(pt.cache_path);
      if (auto hit = cache.find(n, p, pt.calibration_bits, seed);
          hit && hit->queries == pt.calibration_queries) {
        return hit->c;
      }
    }
    const Calibration cal =
        calibrate_ball_coefficient(n, p, pt.calibration_bits, pt.calibration_queries, seed);
    if (!pt.cache_path.empty()) {
      cache.insert(cal);
      cache.save(pt.cache_path);
    }
    return cal.c;
  }

  static std::mutex& calibration_mutex() {
    static std::mutex m;
    return m;
  }

  void prepare() {
    for (const BitPair& b : bits_) {
      switch (cfg_.csit_mode) {
        case CsitMode::perfect: break;
        case CsitMode::rvq:
          guard(b);
          if (!csi_cb_.contains(b.n_b)) {
            csi_cb_.emplace(b.n_b, cached_codebook(csi_n_, csi_p_, b.n_b,
                                                   codebook_seed(kCsiRole, b.n_b)));
          }
          add_precoder_codebook(b.n_c);
          break;
        case CsitMode::nc_cgq:
          guard(b);
          if (!comp_cb_.contains(b.n_b)) {
            comp_cb_.emplace(b.n_b, build_composite_codebook(
                                        cfg_.dims.K - 1, cfg_.dims.N * cfg_.dims.M, b.n_b,
                                        codebook_seed(kCompositeRole, b.n_b)));
          }
          add_precoder_codebook(b.n_c);
          break;
        case CsitMode::perturbation:
          if (!c_csi_) c_csi_ = ball_coefficient(csi_n_, csi_p_, kCsiRole);
          if (!c_pre_) c_pre_ = ball_coefficient(pre_n_, pre_p_, kPrecoderRole);
          csi_pp_.try_emplace(b.n_b, perturbation_params(grassmann_real_dimension(
                                                             static_cast<int>(csi_n_),
                                                             static_cast<int>(csi_p_)),
                                                         *c_csi_, b.n_b));
          pre_pp_.try_emplace(b.n_c, perturbation_params(grassmann_real_dimension(
                                                             static_cast<int>(pre_n_),
                                                             static_cast<int>(pre_p_)),
                                                         *c_pre_, b.n_c));
          break;
      }
    }
  }

  void guard(const BitPair& b) const {
    if (b.n_b > kMaxCodebookBits || b.n_c > kMaxCodebookBits) {
      throw ResourceError(fmt::format(
          "codebook of {} bits exceeds the {}-bit guard; use csit_mode 'perturbation'",
          std::max(b.n_b, b.n_c), kMaxCodebookBits));
    }
  }

  void add_precoder_codebook(int bits) {
    if (!pre_cb_.contains(bits)) {
      pre_cb_.emplace(bits, cached_codebook(pre_n_, pre_p_, bits,
                                            codebook_seed(kPrecoderRole, bits)));
    }
  }

  const SimConfig& cfg_;
  Index csi_n_ = 0, csi_p_ = 0, pre_n_ = 0, pre_p_ = 0;
  std::vector<BitPair> bits_;
  std::map<int, Codebook> csi_cb_;
  std::map<int, Codebook> pre_cb_;
  std::map<int, CompositeCodebook> comp_cb_;
  std::optional<double> c_csi_;
  std::optional<double> c_pre_;
  std::map<int, PerturbationParams> csi_pp_;
  std::map<int, PerturbationParams> pre_pp_;
};

// Precoders and filters produced for one channel realization and bit pair.
struct Design {
  bool converged = false;
  std::vector<GrassmannPoint> filters;
  std::vector<CMatrix> transmitted;  // truncated unitary
  std::vector<CMatrix> analytic;     // C^-1 F^H F_hat V_hat, unnormalized
};

class TrialRunner {
 public:
  TrialRunner(const SimConfig& cfg, const SharedState& shared) : cfg_(cfg), shared_(shared) {}

  std::vector<TrialRecord> run(int trial) const {
    const auto& dims = cfg_.dims;
    Rng channel_rng = make_rng(cfg_.seed, {kChannelStream, static_cast<std::uint64_t>(trial)});
    const ChannelSet cs = generate_channel_set(dims, channel_rng);
    std::vector<QrFactor> factors;
    factors.reserve(static_cast<std::size_t>(dims.K));
    for (int j = 0; j < dims.K; ++j) {
      factors.push_back(qr_orthonormal_factor(stacked_interference_matrix(cs, j)));
    }

    std::map<BitPair, Design> designs;
    std::vector<TrialRecord> out;
    out.reserve(cfg_.snr_grid.size());
    for (std::size_t s = 0; s < cfg_.snr_grid.size(); ++s) {
      const BitPair bits = shared_.bits_at(s);
      auto it = designs.find(bits);
      if (it == designs.end()) {
        Rng rng = make_rng(cfg_.seed, {kDesignStream, static_cast<std::uint64_t>(trial),
                                       static_cast<std::uint64_t>(bits.n_b),
                                       static_cast<std::uint64_t>(bits.n_c)});
        it = designs.emplace(bits, design(cs, factors, bits, rng)).first;
      }
      const Design& dz = it->second;
      TrialRecord rec;
      rec.trial = trial;
      rec.snr_db = cfg_.snr_grid[s];
      rec.converged = dz.converged;
      if (dz.converged) {
        const double power = db_to_power(rec.snr_db);
        for (int i = 0; i < dims.K; ++i) {
          rec.sum_rate += cfg_.receiver == Receiver::projection
                              ? per_user_rate(cs, i, dz.filters[static_cast<std::size_t>(i)],
                                              dz.transmitted, power)
                              : mmse_sic_rate(cs, i, dz.transmitted, power);
        }
        rec.leakage = leakage_power(cs, dz.filters, dz.analytic, power).total;
        rec.leakage_transmitted = leakage_power(cs, dz.filters, dz.transmitted, power).total;
      }
      out.push_back(rec);
    }
    return out;
  }

 private:
  Design design(const ChannelSet& cs, const std::vector<QrFactor>& factors, BitPair bits,
                Rng& rng) const {
    const auto& dims = cfg_.dims;
    const auto K = static_cast<std::size_t>(dims.K);

    std::vector<GrassmannPoint> shared_csi;
    std::vector<CMatrix> central_c;  // only for nc_cgq: C of the reconstructed stack
    shared_csi.reserve(K);
    for (std::size_t j = 0; j < K; ++j) {
      const GrassmannPoint& f = factors[j].q;
      switch (cfg_.csit_mode) {
        case CsitMode::perfect:
          shared_csi.push_back(f);
          break;
        case CsitMode::rvq:
          shared_csi.push_back(quantize(f, shared_.csi_codebook(bits.n_b)).point);
          break;
        case CsitMode::perturbation: {
          const double r = sample_squared_error(shared_.csi_params(bits.n_b), rng,
                                                max_squared_distance(f.n(), f.p()));
          shared_csi.push_back(perturb_subspace(f, r, rng).result);
          break;
        }
        case CsitMode::nc_cgq: {
          std::vector<CMatrix> cross;
          for (int i = 0; i < dims.K; ++i) {
            if (i != static_cast<int>(j)) cross.push_back(cs.at(i, static_cast<int>(j)));
          }
          const CompositeQuantization q =
              nc_cgq_quantize(cross, shared_.composite_codebook(bits.n_b));
          CMatrix stack(dims.stack_rows(), dims.M);
          for (std::size_t b = 0; b < q.channels.size(); ++b) {
            stack.middleRows(static_cast<Index>(b) * dims.N, dims.N) = q.channels[b];
          }
          QrFactor qr = qr_orthonormal_factor(stack);
          shared_csi.push_back(std::move(qr.q));
          central_c.push_back(std::move(qr.r));
          break;
        }
      }
    }

    IaSolution sol = solve_ia(shared_csi, dims, cfg_.solver, rng);
    Design dz;
    dz.converged = sol.converged;
    if (!dz.converged) return dz;
    dz.filters = std::move(sol.filters);

    for (std::size_t j = 0; j < K; ++j) {
      const CMatrix& v_tilde = sol.precoders[j].basis();
      if (cfg_.csit_mode == CsitMode::nc_cgq) {
        // The central node designs for its reconstructed channel and feeds
        // back that precoder directly.
        const Eigen::FullPivLU<CMatrix> lu(central_c[j]);
        const CMatrix central = qr_orthonormal_factor(lu.solve(v_tilde)).q.basis();
        const CMatrix fed_back =
            quantize_precoder_vectorized(central, shared_.precoder_codebook(bits.n_c)).direction;
        dz.transmitted.push_back(qr_orthonormal_factor(fed_back).q.basis());
        dz.analytic.push_back(dz.transmitted.back());
        continue;
      }
      const CMatrix v_hat = feedback_precoder(sol.precoders[j], bits.n_c, rng);
      const QrFactor& fj = factors[j];
      dz.analytic.push_back(total_precoder(fj.r, fj.q, shared_csi[j], v_hat, false));
      dz.transmitted.push_back(qr_orthonormal_factor(dz.analytic.back()).q.basis());
    }
    return dz;
  }

  CMatrix feedback_precoder(const GrassmannPoint& v_tilde, int bits, Rng& rng) const {
    const bool vectorized = cfg_.precoder_mode == PrecoderMode::vectorized;
    switch (cfg_.csit_mode) {
      case CsitMode::perfect:
        return v_tilde.basis();
      case CsitMode::rvq:
        if (vectorized) {
          return quantize_precoder_vectorized(v_tilde.basis(), shared_.precoder_codebook(bits))
              .direction;
        }
        return quantize(v_tilde, shared_.precoder_codebook(bits)).point.basis();
      case CsitMode::perturbation: {
        const GrassmannPoint point = vectorized ? vectorize_direction(v_tilde.basis()) : v_tilde;
        const double r = sample_squared_error(shared_.precoder_params(bits), rng,
                                              max_squared_distance(point.n(), point.p()));
        const GrassmannPoint moved = perturb_subspace(point, r, rng).result;
        if (!vectorized) return moved.basis();
        return Eigen::Map<const CMatrix>(moved.basis().data(), v_tilde.n(), v_tilde.p());
      }
      case CsitMode::nc_cgq: break;
    }
    throw ConfigError("feedback_precoder: unsupported mode");
  }

  const SimConfig& cfg_;
  const SharedState& shared_;
};

}  // namespace

double per_user_rate(const ChannelSet& cs, int user, const GrassmannPoint& filter,
                     std::span<const CMatrix> precoders, double power) {
  const auto& dims = cs.dims();
  if (precoders.size() != static_cast<std::size_t>(dims.K) || filter.n() != dims.N) {
    throw DimensionError("per_user_rate: shape mismatch");
  }
  const Index d = filter.p();
  const double scale = power / static_cast<double>(d);
  const CMatrix& u = filter.basis();
  const CMatrix sig = u.adjoint() * cs.at(user, user) * precoders[static_cast<std::size_t>(user)];
  CMatrix q_i = CMatrix::Zero(d, d);
  for (int j = 0; j < dims.K; ++j) {
    if (j == user) continue;
    const CMatrix t = u.adjoint() * cs.at(user, j) * precoders[static_cast<std::size_t>(j)];
    q_i.noalias() += t * t.adjoint();
  }
  const CMatrix eye = CMatrix::Identity(d, d);
  const CMatrix interference = eye + scale * q_i;
  const CMatrix total = interference + scale * (sig * sig.adjoint());
  return std::max(0.0, log2_det_hpd(total) - log2_det_hpd(interference));
}

double mmse_sic_rate(const ChannelSet& cs, int user, std::span<const CMatrix> precoders,
                     double power) {
  const auto& dims = cs.dims();
  if (precoders.size() != static_cast<std::size_t>(dims.K)) {
    throw DimensionError("mmse_sic_rate: need K precoders");
  }
  const double scale = power / static_cast<double>(precoders[0].cols());
  CMatrix cov = CMatrix::Identity(dims.N, dims.N);
  for (int j = 0; j < dims.K; ++j) {
    if (j == user) continue;
    const CMatrix t = cs.at(user, j) * precoders[static_cast<std::size_t>(j)];
    cov.noalias() += scale * (t * t.adjoint());
  }
  const CMatrix sig = cs.at(user, user) * precoders[static_cast<std::size_t>(user)];
  const CMatrix total = cov + scale * (sig * sig.adjoint());
  return std::max(0.0, log2_det_hpd(total) - log2_det_hpd(cov));
}

long long bits_exchanged(Scenario scenario, int K, int n_b, int n_c) {
  const long long k = K;
  switch (scenario) {
    case Scenario::I: return k * (n_b + n_c);
    case Scenario::II: return (k - 1) * (n_b + n_c);
    case Scenario::III: return k * (k - 1) * n_b;
  }
  return 0;
}

ExperimentResult run_experiment(const SimConfig& cfg, const RunOptions& options) {
  cfg.validate();
  if (!ia_feasible(cfg.dims)) {
    throw InfeasibleError(fmt::format("dims K={} M={} N={} d={} are not IA-proper", cfg.dims.K,
                                      cfg.dims.M, cfg.dims.N, cfg.dims.d));
  }
  if (!cfg.dims.stack_is_tall()) {
    throw InfeasibleError("subspace sharing requires (K-1) N > M");
  }

  const SharedState shared(cfg);
  const TrialRunner runner(cfg, shared);

  std::vector<std::vector<TrialRecord>> per_trial(static_cast<std::size_t>(cfg.trials));
  const int threads = std::clamp(options.threads, 1, cfg.trials);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int t = next++; t < cfg.trials; t = next++) {
      try {
        per_trial[static_cast<std::size_t>(t)] = runner.run(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.trials;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  result.curve.csit_mode = cfg.csit_mode;
  result.curve.precoder_mode = cfg.precoder_mode;
  result.curve.scenario = cfg.scenario;
  for (std::size_t s = 0; s < cfg.snr_grid.size(); ++s) {
    SumRatePoint pt;
    pt.snr_db = cfg.snr_grid[s];
    const BitPair bits = shared.bits_at(s);
    pt.n_b = bits.n_b;
    pt.n_c = bits.n_c;
    pt.backhaul_bits = bits_exchanged(cfg.scenario, cfg.dims.K, bits.n_b, bits.n_c);

    CompensatedSum sum;
    CompensatedSum sum_sq;
    std::vector<double> leak;
    std::vector<double> leak_tx;
    for (const auto& trial : per_trial) {
      const TrialRecord& rec = trial[s];
      result.log.push_back(rec);
      if (!rec.converged) {
        ++pt.excluded;
        continue;
      }
      ++pt.trials;
      sum.add(rec.sum_rate);
      sum_sq.add(rec.sum_rate * rec.sum_rate);
      leak.push_back(rec.leakage);
      leak_tx.push_back(rec.leakage_transmitted);
    }
    if (pt.trials > 0) {
      const double n = pt.trials;
      pt.mean = sum.value() / n;
      if (pt.trials > 1) {
        const double var = std::max(0.0, (sum_sq.value() - n * pt.mean * pt.mean) / (n - 1.0));
        pt.std_error = std::sqrt(var / n);
      }
    }
    pt.median_leakage = median(std::move(leak));
    pt.median_leakage_transmitted = median(std::move(leak_tx));
    if (pt.excluded > cfg.max_exclusion_rate * cfg.trials) result.curve.valid = false;
    result.curve.points.push_back(pt);
  }
  return result;
}

double dof_slope(const SumRateCurve& curve, double lo_db, double hi_db) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& pt : curve.points) {
    if (pt.snr_db >= lo_db - 1e-9 && pt.snr_db <= hi_db + 1e-9) {
      xy.emplace_back(pt.snr_db / 10.0 * std::log2(10.0), pt.mean);
    }
  }
  if (xy.size() < 2) throw DimensionError("dof_slope: window covers fewer than two grid points");
  double mx = 0.0;
  double my = 0.0;
  for (auto [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (auto [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw DimensionError("dof_slope: window has a single distinct SNR");
  return sxy / sxx;
}

std::string format_csv(const SumRateCurve& curve) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& pt : curve.points) {
    out += fmt::format("{},{:.6f},{:.6f},{},{},{},{},{},{},{},{}\n", pt.snr_db, pt.mean,
                       pt.std_error, pt.trials, pt.excluded, pt.n_b, pt.n_c, pt.backhaul_bits,
                       to_string(curve.csit_mode), to_string(curve.precoder_mode),
                       to_string(curve.scenario));
  }
  return out;
}

std::string format_trial_log(std::span<const TrialRecord> log) {
  std::string out = "snr_db,trial,converged,sum_rate,leakage,leakage_transmitted\n";
  for (const auto& rec : log) {
    out += fmt::format("{},{},{},{:.9g},{:.9g},{:.9g}\n", rec.snr_db, rec.trial,
                       rec.converged ? 1 : 0, rec.sum_rate, rec.leakage,
                       rec.leakage_transmitted);
  }
  return out;
}

}  // namespace gcsit
