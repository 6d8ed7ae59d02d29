#include <cmath>

#include <gtest/gtest.h>

#include "fracstab/regimes.hpp"

using namespace fracstab;

namespace {
// Solving n = 2(s + 2 + t) with t = √(2(s+1)) gives t = √(n-1) - 1.
double radial_root(int n) {
  const double t = std::sqrt(n - 1.0) - 1.0;
  return 0.5 * t * t - 1.0;
}
}  // namespace

TEST(Regimes, RadialCrossingsInDimensionsSevenToNine) {
  EXPECT_NEAR(critical_s_radial(7).s, 0.050510, 1e-6);
  EXPECT_NEAR(critical_s_radial(8).s, 0.354249, 1e-6);
  EXPECT_NEAR(critical_s_radial(9).s, 0.671573, 1e-6);
  for (int n = 7; n <= 9; ++n) {
    EXPECT_EQ(critical_s_radial(n).kind, Threshold::Kind::Crossing);
    EXPECT_NEAR(critical_s_radial(n).s, radial_root(n), 1e-10);
  }
}

TEST(Regimes, RadialLabelsOutsideTheCrossingRange) {
  for (int n = 2; n <= 6; ++n) EXPECT_EQ(critical_s_radial(n).label(), "all") << n;
  for (int n = 10; n <= 30; ++n) EXPECT_EQ(critical_s_radial(n).label(), "none") << n;
  EXPECT_THROW(critical_s_radial(1), DomainError);
}

TEST(Regimes, RadialWindow) {
  double prev = radial_upper(0.0);
  for (int k = 1; k < 100; ++k) {
    const double s = 0.01 * k;
    EXPECT_GT(radial_upper(s), prev);
    prev = radial_upper(s);
    EXPECT_LT(radial_lower(s), 2.0);
    EXPECT_LT(radial_lower(s), radial_upper(s));
  }
}

TEST(Regimes, GelfandCrossings) {
  EXPECT_NEAR(critical_s_gelfand(9).s, 0.63237, 1e-4);
  EXPECT_NEAR(critical_s_gelfand(8).s, 0.28207, 1e-4);
  for (int n = 2; n <= 7; ++n) EXPECT_EQ(critical_s_gelfand(n).label(), "all") << n;
  for (int n = 10; n <= 20; ++n) EXPECT_EQ(critical_s_gelfand(n).label(), "none") << n;
  // The margin changes sign at the reported crossing.
  const double s9 = critical_s_gelfand(9).s;
  EXPECT_LT(gelfand_log_margin(9, s9 - 1e-6), 0.0);
  EXPECT_GT(gelfand_log_margin(9, s9 + 1e-6), 0.0);
}

TEST(Regimes, GelfandMarginRejectsSmallDimensions) {
  EXPECT_THROW(gelfand_log_margin(1, 0.5), DomainError);
  EXPECT_THROW(gelfand_log_margin(1, 0.75), DomainError);
  EXPECT_NO_THROW(gelfand_log_margin(1, 0.25));
}

TEST(Regimes, ClassifyExamples) {
  const auto r = classify(make_params(3, 0.5));
  EXPECT_TRUE(r.radial_condition_holds);
  EXPECT_TRUE(r.gelfand_condition_holds);
  EXPECT_TRUE(r.exp_10s_holds);
  EXPECT_FALSE(r.convex_4s_holds);
  EXPECT_NEAR(r.mu_floor, 1.5 - 0.5 - 1.0 - std::sqrt(2.0), 1e-15);

  const auto big = classify(make_params(12, 0.5));
  EXPECT_FALSE(big.radial_condition_holds);
  EXPECT_FALSE(big.gelfand_condition_holds);
  EXPECT_FALSE(big.exp_10s_holds);

  const auto mid = classify(make_params(9, 0.9));
  EXPECT_TRUE(mid.radial_condition_holds);
  EXPECT_TRUE(mid.gelfand_condition_holds);
  EXPECT_FALSE(mid.convex_4s_holds);

  EXPECT_THROW(classify(make_params(1, 0.5)), DomainError);
}

TEST(Regimes, DecayFloorRequiresDimensionTwo) {
  EXPECT_THROW(decay_exponent_floor(make_params(1, 0.5)), DomainError);
  EXPECT_NEAR(decay_exponent_floor(make_params(10, 0.5)), 5.0 - 1.5 - 3.0, 1e-15);
}
