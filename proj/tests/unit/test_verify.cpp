#include <gtest/gtest.h>

#include <gcsit/verify.hpp>

using namespace gcsit;

TEST(PropertySuite, AllChecksPassOnSmallBudget) {
  PropertySuiteOptions opt;
  opt.seed = 9;
  opt.leakage_draws = 100;
  opt.decomposition_draws = 100;
  opt.rotation_draws = 10;
  opt.perturbation_draws = 100;
  opt.metric_triples = 100;
  const auto results = run_property_suite(opt);
  ASSERT_EQ(results.size(), 7u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
    EXPECT_GT(r.draws, 0) << r.name;
  }
}
