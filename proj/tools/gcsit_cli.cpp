// Command line front end: run experiments, calibrate ball coefficients,
// run the property suite.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gcsit/errors.hpp"
#include "gcsit/harness.hpp"
#include "gcsit/perturbation.hpp"
#include "gcsit/verify.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kInfeasible = 3, kResource = 4, kExclusion = 5 };

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gcsit::Error("cannot write " + path);
  out << text;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string trial_log;
  int threads = 1;
  std::optional<std::string> mode;
};

int do_run(const RunArgs& args) {
  gcsit::SimConfig cfg = gcsit::load_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (args.mode) cfg.csit_mode = gcsit::parse_csit_mode(*args.mode);
  cfg.validate();

  const auto result = gcsit::run_experiment(cfg, gcsit::RunOptions{args.threads});
  write_text(args.out, gcsit::format_csv(result.curve));
  if (!args.trial_log.empty()) write_text(args.trial_log, gcsit::format_trial_log(result.log));
  if (!result.curve.valid) {
    std::cerr << "solver exclusions exceed max_exclusion_rate; curve flagged invalid\n";
    return kExclusion;
  }
  return kOk;
}

struct CalibrateArgs {
  long n = 6;
  long p = 5;
  int bits = 8;
  int queries = 1000;
  std::uint64_t seed = 1;
  std::string cache;
};

int do_calibrate(const CalibrateArgs& a) {
  const auto cal = gcsit::calibrate_ball_coefficient(a.n, a.p, a.bits, a.queries, a.seed);
  fmt::print("n={} p={} bits={} queries={} mean_d2={:.6f} stderr={:.6f} c={:.6f} "
             "closed_form_c={:.6f}\n",
             cal.n, cal.p, cal.bits, cal.queries, cal.mean_squared_error,
             cal.stderr_squared_error, cal.c, gcsit::grassmann_ball_coefficient(a.n, a.p));
  if (!a.cache.empty()) {
    auto cache = gcsit::CalibrationCache::load(a.cache);
    cache.insert(cal);
    cache.save(a.cache);
  }
  return kOk;
}

int do_verify(std::uint64_t seed) {
  gcsit::PropertySuiteOptions opt;
  opt.seed = seed;
  bool all = true;
  for (const auto& r : gcsit::run_property_suite(opt)) {
    fmt::print("{} {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
    all = all && r.passed;
  }
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grassmannian CSI sharing for interference alignment: Monte Carlo driver"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a sum-rate experiment from a JSON config");
  run_cmd->add_option("--config", run.config, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "override the config seed");
  run_cmd->add_option("--out", run.out, "CSV output path (stdout if omitted)");
  run_cmd->add_option("--trial-log", run.trial_log, "per-trial CSV log path");
  run_cmd->add_option("--threads", run.threads, "worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--mode", run.mode, "override csit_mode");

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "estimate a ball-volume coefficient c");
  cal_cmd->add_option("--n", cal.n, "ambient dimension");
  cal_cmd->add_option("--p", cal.p, "subspace dimension");
  cal_cmd->add_option("--bits", cal.bits, "codebook bits");
  cal_cmd->add_option("--queries", cal.queries, "Monte Carlo queries");
  cal_cmd->add_option("--seed", cal.seed, "seed");
  cal_cmd->add_option("--cache", cal.cache, "calibration cache file to update");

  std::uint64_t verify_seed = 1;
  auto* verify_cmd = app.add_subcommand("verify", "run the exact-identity property suite");
  verify_cmd->add_option("--seed", verify_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return do_run(run);
    if (*cal_cmd) return do_calibrate(cal);
    if (*verify_cmd) return do_verify(verify_seed);
  } catch (const gcsit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const gcsit::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const gcsit::ResourceError& e) {
    std::cerr << "resource guard: " << e.what() << '\n';
    return kResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
