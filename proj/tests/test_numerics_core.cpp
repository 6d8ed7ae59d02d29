#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fracstab/extension.hpp"
#include "fracstab/params.hpp"

using namespace fracstab;

TEST(LogGamma, KnownValues) {
  EXPECT_NEAR(log_gamma(1.0), 0.0, 1e-15);
  EXPECT_NEAR(log_gamma(0.5), 0.5723649429247001, 1e-13);
  EXPECT_NEAR(log_gamma(5.0), std::log(24.0), 1e-13);
}

TEST(LogGamma, RejectsNonPositive) {
  EXPECT_THROW(log_gamma(0.0), DomainError);
  EXPECT_THROW(log_gamma(-1.5), DomainError);
}

TEST(LogGamma, RecurrenceOnRandomArguments) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(1e3));
  for (int i = 0; i < 1000; ++i) {
    const double x = std::exp(logx(rng));
    const double lhs = log_gamma(x + 1.0);
    const double rhs = log_gamma(x) + std::log(x);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs))) << "x = " << x;
  }
}

TEST(Params, Validation) {
  EXPECT_THROW(make_params(0, 0.5), DomainError);
  EXPECT_THROW(make_params(2, 0.0), DomainError);
  EXPECT_THROW(make_params(2, 1.0), DomainError);
  EXPECT_NO_THROW(make_params(1, 0.5));
  EXPECT_THROW(make_solver_params(1, 0.5), DomainError);
  EXPECT_DOUBLE_EQ(make_params(3, 0.25).a(), 0.5);
}

TEST(Normalizations, HalfLineCase) {
  const auto c = normalizations(make_params(1, 0.5));
  EXPECT_NEAR(c.p_ns, 1.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(c.d_s, 1.0, 1e-15);
}

TEST(Normalizations, AllPositiveAndRieszDefinedWhenAllowed) {
  for (int n = 1; n <= 10; ++n)
    for (int k = 1; k <= 9; ++k) {
      const auto p = make_params(n, 0.1 * k);
      const auto c = normalizations(p);
      EXPECT_GT(c.c_ns, 0.0);
      EXPECT_GT(c.d_s, 0.0);
      EXPECT_GT(c.p_ns, 0.0);
      EXPECT_GT(c.gamma_ns, 0.0);
      if (n > 2 * p.s) EXPECT_GT(c.riesz_c, 0.0);
      else EXPECT_FALSE(c.riesz_defined());
    }
}

TEST(Normalizations, PoissonMassTwoDimensionalQuarterOrder) {
  EXPECT_NEAR(poisson_mass(make_params(2, 0.25), 1.0), 1.0, 1e-9);
}

TEST(Normalizations, DsRelation) {
  // 1/d_s = 2s P_{n,s} / c_{n,s}, independent of n.
  for (int n = 1; n <= 10; ++n)
    for (int k = 1; k <= 9; ++k) {
      const auto p = make_params(n, 0.1 * k);
      const auto c = normalizations(p);
      EXPECT_NEAR(c.d_s * 2.0 * p.s * c.p_ns / c.c_ns, 1.0, 1e-12);
    }
}
