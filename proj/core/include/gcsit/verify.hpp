#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gcsit {

struct CheckResult {
  std::string name;
  bool passed = false;
  int draws = 0;
  double worst = 0.0;  // largest violation metric seen; meaning depends on the check
  std::string detail;
};

struct PropertySuiteOptions {
  std::uint64_t seed = 1;
  int leakage_draws = 1000;
  int decomposition_draws = 1000;   // split over independently solved IA instances
  int draws_per_solve = 20;
  int rotation_draws = 100;
  int perturbation_draws = 1000;
  int metric_triples = 1000;
};

CheckResult check_dual_form_leakage(const PropertySuiteOptions& opt);
/// Identity ||U^H F F^H F_hat V_hat|| = ||X_b + X_c|| against the leakage on
/// the true channels, plus the X_b / X_c bounds, on the same draws.
std::vector<CheckResult> check_leakage_decomposition(const PropertySuiteOptions& opt);
CheckResult check_rotation_equivalence(const PropertySuiteOptions& opt);
CheckResult check_perturbation_distance(const PropertySuiteOptions& opt);
CheckResult check_chordal_metric(const PropertySuiteOptions& opt);

/// Runs every check above, in order.
std::vector<CheckResult> run_property_suite(const PropertySuiteOptions& opt = {});

}  // namespace gcsit
