#include <gtest/gtest.h>

#include <cmath>

#include <gcsit/errors.hpp>
#include <gcsit/harness.hpp>

using namespace gcsit;

namespace {

const SystemDims kBase{3, 5, 3, 2};

SimConfig small_config(CsitMode mode, int trials = 20) {
  SimConfig cfg;
  cfg.dims = kBase;
  cfg.snr_grid = {0.0, 20.0};
  cfg.trials = trials;
  cfg.seed = 5;
  cfg.csit_mode = mode;
  return cfg;
}

double log2_det(const CMatrix& a) {
  return std::log2(std::abs(a.determinant()));
}

}  // namespace

TEST(BitsExchanged, Scenarios) {
  EXPECT_EQ(bits_exchanged(Scenario::I, 3, 10, 12), 66);
  EXPECT_EQ(bits_exchanged(Scenario::II, 3, 10, 12), 44);
  EXPECT_EQ(bits_exchanged(Scenario::III, 3, 10, 12), 60);
}

TEST(PerUserRate, ScalarShannonCase) {
  const SystemDims dims{2, 1, 1, 1};
  const Complex h(0.6, -0.8);
  std::vector<CMatrix> blocks(4, CMatrix::Zero(1, 1));
  blocks[0](0, 0) = h;
  blocks[3](0, 0) = 2.0;
  const ChannelSet cs(dims, blocks);
  const GrassmannPoint u(CMatrix::Identity(1, 1));
  const std::vector<CMatrix> v(2, CMatrix::Identity(1, 1));
  for (double p : {0.5, 1.0, 100.0}) {
    EXPECT_NEAR(per_user_rate(cs, 0, u, v, p), std::log2(1.0 + p * std::norm(h)), 1e-12);
    EXPECT_NEAR(mmse_sic_rate(cs, 0, v, p), std::log2(1.0 + p * std::norm(h)), 1e-12);
  }
}

TEST(PerUserRate, InterferenceFreeCollapse) {
  Rng rng(1);
  const ChannelSet cs = generate_channel_set(kBase, rng);
  const GrassmannPoint u = haar_truncated_unitary(3, 2, rng);
  std::vector<CMatrix> v(3, CMatrix::Zero(5, 2));
  v[1] = haar_truncated_unitary(5, 2, rng).basis();
  const double p = 50.0;
  const CMatrix qs = u.basis().adjoint() * cs.at(1, 1) * v[1];
  const double expected = log2_det(CMatrix::Identity(2, 2) + (p / 2.0) * qs * qs.adjoint());
  EXPECT_NEAR(per_user_rate(cs, 1, u, v, p), expected, 1e-10);
}

TEST(PerUserRate, LowerBoundAndLeakageConsistency) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const ChannelSet cs = generate_channel_set(kBase, rng);
    std::vector<GrassmannPoint> u;
    std::vector<CMatrix> v;
    for (int k = 0; k < 3; ++k) {
      u.push_back(haar_truncated_unitary(3, 2, rng));
      v.push_back(haar_truncated_unitary(5, 2, rng).basis());
    }
    const double p = std::pow(10.0, t % 5);
    const auto leak = leakage_power(cs, u, v, p);
    for (int i = 0; i < 3; ++i) {
      const CMatrix& ui = u[i].basis();
      const CMatrix qs = ui.adjoint() * cs.at(i, i) * v[i];
      CMatrix qi = CMatrix::Zero(2, 2);
      for (int j = 0; j < 3; ++j) {
        if (j == i) continue;
        const CMatrix t2 = ui.adjoint() * cs.at(i, j) * v[j];
        qi += t2 * t2.adjoint();
      }
      const CMatrix eye = CMatrix::Identity(2, 2);
      const double c0 = leak.per_user[i];  // trace bounds the top eigenvalue
      const double signal_only = log2_det(eye + (p / 2.0) * qs * qs.adjoint());
      const double rate = per_user_rate(cs, i, u[i], v, p);
      EXPECT_GE(rate, signal_only - 2.0 * std::log2(1.0 + c0) - 1e-9);
      EXPECT_LE(log2_det(eye + (p / 2.0) * qi), 2.0 * std::log2(1.0 + c0) + 1e-9);
      EXPECT_GE(rate, 0.0);
      // Full-antenna mutual information dominates any projection receiver.
      EXPECT_GE(mmse_sic_rate(cs, i, v, p), rate - 1e-9);
    }
  }
}

TEST(Config, ParsesAndRoundTrips) {
  const SimConfig cfg = parse_config(R"({
    "dims": {"K": 3, "M": 5, "N": 3, "d": 2},
    "snr_grid": [0, 10],
    "trials": 7,
    "seed": 99,
    "csit_mode": "rvq",
    "precoder_mode": "vectorized",
    "bits_mode": {"kind": "fixed", "n_b": 4, "n_c": 5},
    "scenario": "II",
    "receiver": "mmse_sic",
    "solver": {"tol": 1e-9, "max_iter": 100, "restarts": 1}
  })");
  EXPECT_EQ(cfg.trials, 7);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.csit_mode, CsitMode::rvq);
  EXPECT_EQ(cfg.precoder_mode, PrecoderMode::vectorized);
  EXPECT_EQ(cfg.n_b, 4);
  EXPECT_EQ(cfg.n_c, 5);
  EXPECT_EQ(cfg.scenario, Scenario::II);
  EXPECT_EQ(cfg.receiver, Receiver::mmse_sic);
  EXPECT_EQ(cfg.solver.max_iter, 100);
  const SimConfig back = parse_config(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Config, RejectsInvalid) {
  const std::string head = R"({"dims": {"K": 3, "M": 5, "N": 3, "d": 2}, "seed": 1, )";
  EXPECT_THROW(parse_config(head + R"("snr_grid": [], "trials": 1, "csit_mode": "perfect"})"),
               ConfigError);
  EXPECT_THROW(parse_config(head + R"("snr_grid": [0], "trials": 0, "csit_mode": "perfect"})"),
               ConfigError);
  EXPECT_THROW(parse_config(head + R"("snr_grid": [0], "trials": 1, "csit_mode": "magic"})"),
               ConfigError);
  EXPECT_THROW(parse_config(head + R"("snr_grid": [0], "trials": 1, "csit_mode": "nc_cgq"})"),
               ConfigError);
  EXPECT_THROW(parse_config(head + R"("snr_grid": [0], "trials": 1, "csit_mode": "perfect",
                                       "typo": 1})"),
               ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
}

TEST(RunExperiment, PerfectCsiIncreasesWithSnr) {
  SimConfig cfg = small_config(CsitMode::perfect, 50);
  cfg.snr_grid = {0.0, 10.0, 20.0, 30.0};
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.curve.points.size(), 4u);
  for (std::size_t k = 1; k < 4; ++k) {
    EXPECT_GT(res.curve.points[k].mean, res.curve.points[k - 1].mean);
  }
  for (const auto& rec : res.log) EXPECT_GT(rec.sum_rate, 0.0);
  EXPECT_TRUE(res.curve.valid);
  EXPECT_EQ(res.log.size(), 200u);
}

TEST(RunExperiment, PerfectCsiSlopeNearFullDof) {
  SimConfig cfg = small_config(CsitMode::perfect, 100);
  cfg.snr_grid = {30.0, 35.0, 40.0};
  const double slope = dof_slope(run_experiment(cfg).curve, 30.0, 40.0);
  EXPECT_NEAR(slope, 6.0, 0.9);
}

TEST(RunExperiment, ZeroBitFeedbackLosesToPerfect) {
  SimConfig rvq = small_config(CsitMode::rvq, 500);
  rvq.snr_grid = {20.0};
  rvq.n_b = 0;
  rvq.n_c = 0;
  SimConfig perfect = rvq;
  perfect.csit_mode = CsitMode::perfect;
  EXPECT_LT(run_experiment(rvq).curve.points[0].mean,
            run_experiment(perfect).curve.points[0].mean);
}

TEST(RunExperiment, DeterministicAcrossRunsAndThreads) {
  for (CsitMode mode : {CsitMode::perfect, CsitMode::rvq, CsitMode::perturbation}) {
    SimConfig cfg = small_config(mode, 8);
    cfg.n_b = 4;
    cfg.n_c = 4;
    cfg.perturbation.source = BallCoefficientSource::closed_form;
    const std::string a = format_csv(run_experiment(cfg).curve);
    const std::string b = format_csv(run_experiment(cfg).curve);
    const std::string c = format_csv(run_experiment(cfg, RunOptions{3}).curve);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
  }
  SimConfig one = small_config(CsitMode::perfect, 1);
  EXPECT_EQ(format_trial_log(run_experiment(one).log), format_trial_log(run_experiment(one).log));
}

TEST(RunExperiment, NcCgqRuns) {
  SimConfig cfg = small_config(CsitMode::nc_cgq, 10);
  cfg.precoder_mode = PrecoderMode::vectorized;
  cfg.n_b = 4;
  cfg.n_c = 4;
  const auto res = run_experiment(cfg);
  for (const auto& pt : res.curve.points) {
    EXPECT_GT(pt.mean, 0.0);
    EXPECT_EQ(pt.backhaul_bits, 24);
  }
}

TEST(RunExperiment, ScaledBitsFollowPower) {
  SimConfig cfg = small_config(CsitMode::perturbation, 4);
  cfg.bits_mode = BitsMode::scaled;
  cfg.snr_grid = {0.0, 30.0};
  cfg.perturbation.source = BallCoefficientSource::closed_form;
  const auto res = run_experiment(cfg);
  EXPECT_EQ(res.curve.points[0].n_b, 0);
  EXPECT_EQ(res.curve.points[0].n_c, 0);
  EXPECT_EQ(res.curve.points[1].n_b, 50);  // ceil(5 * log2 1000)
  EXPECT_EQ(res.curve.points[1].n_c, 60);
}

TEST(RunExperiment, Guards) {
  SimConfig big = small_config(CsitMode::rvq, 1);
  big.n_b = 23;
  EXPECT_THROW(run_experiment(big), ResourceError);
  SimConfig bad = small_config(CsitMode::perfect, 1);
  bad.dims = SystemDims{3, 2, 2, 2};
  EXPECT_THROW(run_experiment(bad), InfeasibleError);
}

TEST(RunExperiment, ExclusionsFlagCurve) {
  SimConfig cfg = small_config(CsitMode::perfect, 10);
  cfg.solver.max_iter = 1;
  cfg.solver.restarts = 0;
  cfg.solver.tol = 1e-30;
  const auto res = run_experiment(cfg);
  EXPECT_FALSE(res.curve.valid);
  EXPECT_EQ(res.curve.points[0].excluded, 10);
  EXPECT_EQ(res.curve.points[0].trials, 0);
}

TEST(DofSlope, LeastSquaresAndWindowChecks) {
  SumRateCurve curve;
  for (double db : {0.0, 10.0, 20.0, 30.0}) {
    SumRatePoint pt;
    pt.snr_db = db;
    pt.mean = 2.0 * db / 10.0 * std::log2(10.0) + 1.0;
    curve.points.push_back(pt);
  }
  EXPECT_NEAR(dof_slope(curve, 0.0, 30.0), 2.0, 1e-12);
  EXPECT_NEAR(dof_slope(curve, 10.0, 20.0), 2.0, 1e-12);
  EXPECT_THROW(dof_slope(curve, 5.0, 15.0), DimensionError);
}

TEST(Csv, HeaderAndRows) {
  SimConfig cfg = small_config(CsitMode::perfect, 2);
  cfg.snr_grid = {10.0};
  const std::string csv = format_csv(run_experiment(cfg).curve);
  EXPECT_EQ(csv.rfind(std::string(kCsvHeader) + "\n", 0), 0u);
  EXPECT_NE(csv.find("\n10,"), std::string::npos);
  EXPECT_NE(csv.find(",perfect,subspace,I\n"), std::string::npos);
  EXPECT_DOUBLE_EQ(db_to_power(30.0), 1000.0);
}
