#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "fracstab/flux_identity.hpp"

using namespace fracstab;

namespace {
double closed_form(int n, double s, double beta) { return (2.0 - 2.0 * s) / (n + 2.0 - 2.0 * s - beta); }

struct ThreadsGuard {
  explicit ThreadsGuard(const char* v) { setenv("FRACSTAB_THREADS", v, 1); }
  ~ThreadsGuard() { unsetenv("FRACSTAB_THREADS"); }
};
}  // namespace

TEST(FluxConstant, AgreesWithClosedForm) {
  for (int n : {2, 3, 5, 10})
    for (double s : {0.1, 0.5, 0.9})
      for (double frac : {0.25, 0.5, 0.75}) {
        const double beta = frac * (n + 2.0 - 2.0 * s);
        const auto m = magic_constant_detailed(FluxConstantQuery{make_params(n, s), beta});
        EXPECT_NEAR(m.value / closed_form(n, s, beta), 1.0, 1e-8) << n << " " << s << " " << beta;
        EXPECT_LT(m.error, 1e-4 * m.value);
      }
}

TEST(FluxConstant, BelowOneExactlyWhenBetaBelowDimension) {
  for (int n : {2, 4, 7})
    for (double s : {0.2, 0.7}) {
      const double top = n + 2.0 - 2.0 * s;
      for (double frac : {0.1, 0.4, 0.7, 0.95}) {
        const double beta = frac * top;
        const double A = magic_constant(FluxConstantQuery{make_params(n, s), beta});
        EXPECT_GT(A, 0.0);
        EXPECT_EQ(A < 1.0, beta < n) << n << " " << s << " " << beta;
      }
    }
}

TEST(FluxConstant, MonteCarloAgrees) {
  struct Case {
    int n;
    double s, beta;
  };
  for (Case c : {Case{2, 0.5, 1.0}, Case{3, 0.25, 2.0}, Case{10, 0.9, 3.0}, Case{2, 0.1, 3.0}}) {
    const FluxConstantQuery q{make_params(c.n, c.s), c.beta};
    const double A = magic_constant(q);
    const auto mc = magic_constant_mc(q, 42, 2'000'000);
    EXPECT_EQ(mc.samples, 2'000'000u);
    EXPECT_LE(std::abs(mc.mean - A), std::max(0.01 * A, 3.0 * mc.stderr_)) << c.n << " " << c.s << " " << c.beta;
  }
}

TEST(FluxConstant, MonteCarloIndependentOfThreadCount) {
  const FluxConstantQuery q{make_params(3, 0.5), 1.5};
  McEstimate one, many;
  {
    ThreadsGuard g("1");
    one = magic_constant_mc(q, 7, 300'000);
  }
  {
    ThreadsGuard g("3");
    many = magic_constant_mc(q, 7, 300'000);
  }
  EXPECT_EQ(one.mean, many.mean);
  EXPECT_EQ(one.stderr_, many.stderr_);
  const auto other = magic_constant_mc(q, 8, 300'000);
  EXPECT_NE(one.mean, other.mean);
}

TEST(FluxConstant, RejectsInvalidQueries) {
  EXPECT_THROW(magic_constant(FluxConstantQuery{make_params(2, 0.5), 0.0}), DomainError);
  EXPECT_THROW(magic_constant(FluxConstantQuery{make_params(2, 0.5), 3.0}), DomainError);
  EXPECT_THROW(magic_constant(FluxConstantQuery{make_params(1, 0.25), 0.5}), DomainError);
  EXPECT_THROW(magic_constant_mc(FluxConstantQuery{make_params(2, 0.5), -1.0}, 1, 10), DomainError);
}

TEST(FluxIdentity, GaussianIntegrationByParts) {
  const auto p = make_params(2, 0.5);
  const auto m = flux_moments(gaussian_trace(), p, 1.0);
  // Closed forms for the Gaussian in the plane with s = 1/2, β = 1.
  EXPECT_NEAR(m.horizontal, -M_PI, 1e-6);
  EXPECT_NEAR(m.vertical, -M_PI, 1e-6);
  EXPECT_NEAR(m.trace, 2.0 * M_PI, 1e-6);
  EXPECT_LT(ibp_residual(gaussian_trace(), p, 1.0), 1e-3);
  const auto c = flux_moment_check(gaussian_trace(), p, 1.0);
  EXPECT_NEAR(c.lhs, c.rhs, 1e-3 * std::abs(c.rhs));
  EXPECT_GT(c.horizontal, 0.0);
}

TEST(FluxIdentity, OtherOrders) {
  for (auto [s, beta] : {std::pair{0.25, 2.0}, {0.75, 1.0}}) {
    const auto p = make_params(3, s);
    EXPECT_LT(ibp_residual(gaussian_trace(), p, beta), 1e-3) << s;
    const auto c = flux_moment_check(gaussian_trace(), p, beta);
    EXPECT_NEAR(c.lhs, c.rhs, 1e-3 * std::abs(c.rhs)) << s;
    EXPECT_GT(c.horizontal, 0.0);
  }
}

TEST(FluxIdentity, ZeroTraceAndScaling) {
  const auto p = make_params(2, 0.5);
  const auto z = flux_moments(zero_trace(), p, 1.0);
  EXPECT_EQ(z.horizontal, 0.0);
  EXPECT_EQ(z.vertical, 0.0);
  EXPECT_EQ(z.trace, 0.0);
  EXPECT_EQ(ibp_residual(zero_trace(), p, 1.0), 0.0);
  const auto a = flux_moments(bump_trace(), p, 1.0);
  const auto b = flux_moments(bump_trace().scaled(3.0), p, 1.0);
  EXPECT_NEAR(b.vertical, 3.0 * a.vertical, 1e-10 * std::abs(a.vertical));
  EXPECT_NEAR(b.trace, 3.0 * a.trace, 1e-10 * std::abs(a.trace));
}

TEST(FluxIdentity, RejectsBetaAtOrAboveDimension) {
  EXPECT_THROW(flux_moments(gaussian_trace(), make_params(2, 0.5), 2.0), DomainError);
  EXPECT_THROW(flux_moments(gaussian_trace(), make_params(1, 0.25), 0.5), DomainError);
}
