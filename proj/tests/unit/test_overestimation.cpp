#include <gtest/gtest.h>

#include "codql/overestimation.hpp"

using namespace codql::agents;

TEST(Estimators, HandComputed) {
  const std::vector<std::vector<double>> a{{1.0, 3.0}, {0.0, 1.0}};
  const std::vector<std::vector<double>> b{{-1.0, -1.0}, {5.0, 5.0}};
  EXPECT_DOUBLE_EQ(single_estimator(a), 2.0);
  EXPECT_DOUBLE_EQ(double_estimator(a, b), -1.0);
  EXPECT_DOUBLE_EQ(double_estimator(b, a), 0.5);
}

TEST(Estimators, SingleIsBiasedUpDoubleIsNot) {
  const auto s = estimator_study(10, 20, 200, 42);
  ASSERT_EQ(s.single_runs.size(), 200u);
  EXPECT_GT(s.single_mean, 0.1);
  EXPECT_GT(s.single_mean, s.double_mean);
  EXPECT_LT(std::abs(s.double_mean), 0.05);
  double m = 0;
  for (double v : s.double_runs) m += v;
  EXPECT_NEAR(m / 200.0, s.double_mean, 1e-12);
}

TEST(Estimators, SingleArmHasNoBias) {
  const auto s = estimator_study(1, 20, 500, 1);
  EXPECT_LT(std::abs(s.single_mean), 0.05);
}
