#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcsit/channel.hpp"
#include "gcsit/ia.hpp"
#include "gcsit/linalg.hpp"

namespace gcsit {

/// How the central node learns each BS's stacked interference subspace.
enum class CsitMode { perfect, rvq, perturbation, nc_cgq };
/// How the designed precoder is fed back to the BS.
enum class PrecoderMode { subspace, vectorized };
enum class BitsMode { fixed, scaled };
/// I: separate central node. II: one BS is the central node. III: every BS
/// receives all CSI and solves locally.
enum class Scenario { I, II, III };
/// projection: rate after the designed receive filter U_i.
/// mmse_sic: mutual information of the full N-antenna receiver on the true
/// channels (what an MMSE-SIC receiver achieves).
enum class Receiver { projection, mmse_sic };
/// Where the perturbation engine takes its ball-volume coefficients from.
enum class BallCoefficientSource { calibrate, closed_form, fixed };

std::string_view to_string(CsitMode m);
std::string_view to_string(PrecoderMode m);
std::string_view to_string(BitsMode m);
std::string_view to_string(Scenario s);
std::string_view to_string(Receiver r);
std::string_view to_string(BallCoefficientSource s);
CsitMode parse_csit_mode(std::string_view s);

struct PerturbationSettings {
  BallCoefficientSource source = BallCoefficientSource::calibrate;
  double c_csi = 0.0;        // used when source == fixed
  double c_precoder = 0.0;   // used when source == fixed
  int calibration_bits = 8;
  int calibration_queries = 1000;
  std::string cache_path;    // optional calibration cache file
};

struct SimConfig {
  SystemDims dims{3, 5, 3, 2};
  std::vector<double> snr_grid;  // dB; P = 10^(dB/10) with unit noise
  int trials = 500;
  std::uint64_t seed = 1;
  CsitMode csit_mode = CsitMode::perfect;
  PrecoderMode precoder_mode = PrecoderMode::subspace;
  BitsMode bits_mode = BitsMode::fixed;
  int n_b = 0;
  int n_c = 0;
  Scenario scenario = Scenario::I;
  Receiver receiver = Receiver::projection;
  SolverOptions solver;
  PerturbationSettings perturbation;
  double max_exclusion_rate = 0.02;
  std::string codebook_cache_dir;  // optional on-disk codebook cache

  /// Throws ConfigError on inconsistent fields.
  void validate() const;
};

/// Parses the JSON config format (see configs/ for examples). Throws
/// ConfigError for malformed input.
SimConfig parse_config(std::string_view json_text);
SimConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const SimConfig& cfg);

struct SumRatePoint {
  double snr_db = 0.0;
  double mean = 0.0;        // bits/s/channel use
  double std_error = 0.0;
  int trials = 0;           // trials that entered the mean
  int excluded = 0;         // trials dropped for solver non-convergence
  int n_b = 0;
  int n_c = 0;
  long long backhaul_bits = 0;
  double median_leakage = 0.0;              // analytic (unnormalized) precoders
  double median_leakage_transmitted = 0.0;  // normalized precoders
};

struct SumRateCurve {
  std::vector<SumRatePoint> points;
  CsitMode csit_mode = CsitMode::perfect;
  PrecoderMode precoder_mode = PrecoderMode::subspace;
  Scenario scenario = Scenario::I;
  bool valid = true;  // exclusion rate within the configured limit everywhere
};

struct TrialRecord {
  int trial = 0;
  double snr_db = 0.0;
  bool converged = false;
  double sum_rate = 0.0;
  double leakage = 0.0;
  double leakage_transmitted = 0.0;
};

struct ExperimentResult {
  SumRateCurve curve;
  std::vector<TrialRecord> log;  // ordered by (snr index, trial)
};

struct RunOptions {
  int threads = 1;
};

/**
 * Monte Carlo sum-rate experiment. Each trial draws one channel realization
 * (shared by all SNR points), shares CSI according to csit_mode, solves IA at
 * the central node, feeds back the precoders and evaluates the sum rate.
 * Results depend only on (config, seed), not on the thread count.
 *
 * Throws InfeasibleError for improper dims and ResourceError when an RVQ
 * codebook would exceed kMaxCodebookBits.
 */
ExperimentResult run_experiment(const SimConfig& cfg, const RunOptions& options = {});

/// R_i = log2|I + (P/d)(Q_S + Q_I)| - log2|I + (P/d) Q_I| after filter U_i.
double per_user_rate(const ChannelSet& cs, int user, const GrassmannPoint& filter,
                     std::span<const CMatrix> precoders, double power);

/// log2|R_i + (P/d) H_ii V_i V_i^H H_ii^H| - log2|R_i|, with R_i the
/// interference-plus-noise covariance at user i's N antennas.
double mmse_sic_rate(const ChannelSet& cs, int user, std::span<const CMatrix> precoders,
                     double power);

/// Total backhaul payload per channel realization.
long long bits_exchanged(Scenario scenario, int K, int n_b, int n_c);

/// Least-squares slope of mean sum-rate against log2 P over the grid points
/// with lo_db <= snr <= hi_db, i.e. bits per 3.01 dB.
double dof_slope(const SumRateCurve& curve, double lo_db, double hi_db);

inline constexpr std::string_view kCsvHeader =
    "snr_db,sum_rate_mean,sum_rate_stderr,trials,excluded,n_b,n_c,backhaul_bits,csit_mode,"
    "precoder_mode,scenario";

std::string format_csv(const SumRateCurve& curve);
std::string format_trial_log(std::span<const TrialRecord> log);

/// Linear power for an SNR in dB.
double db_to_power(double db);

}  // namespace gcsit
