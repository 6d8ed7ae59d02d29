#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "fracstab/angular.hpp"

using namespace fracstab;

namespace {
double closed_form_n3(double d2, double q, double p) {
  return 4.0 * std::numbers::pi / (q * (p - 1.0)) *
         (std::pow(d2, 1.0 - p) - std::pow(d2 + q, 1.0 - p));
}

double adaptive_oracle(int n, double d2, double q, double p) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double th) {
    const double sh = std::sin(0.5 * th);
    return std::pow(d2 + q * sh * sh, -p) * std::pow(std::sin(th), n - 2);
  };
  // Split near the peak width so the adaptive rule sees it.
  const double w = std::min(1.0, 2.0 * std::sqrt(d2 / q));
  double total = 0.0;
  double a = 0.0;
  for (double b : {w * 1e-2, w * 1e-1, w, 3.0 * w, std::numbers::pi}) {
    if (b <= a) continue;
    total += ts.integrate(f, a, b, 1e-13);
    a = b;
  }
  return sphere_slice_weight(n) * total;
}
}  // namespace

TEST(Angular, ThreeDimensionalClosedForm) {
  AngularCore core(3);
  for (double d2 : {1e-10, 1e-6, 1e-3, 0.1, 1.0, 10.0})
    for (double q : {1e-4, 0.5, 4.0})
      for (double p : {1.2, 1.75, 2.5}) {
        const double ref = closed_form_n3(d2, q, p);
        EXPECT_NEAR(core.power(d2, q, p) / ref, 1.0, 1e-10) << d2 << " " << q << " " << p;
      }
}

TEST(Angular, AdaptiveOracleOtherDimensions) {
  for (int n : {2, 4, 7, 10}) {
    AngularCore core(n);
    for (double d2 : {1e-8, 1e-4, 0.05, 2.0})
      for (double q : {0.3, 4.0}) {
        const double p = 0.5 * (n + 1.0);
        const double ref = adaptive_oracle(n, d2, q, p);
        EXPECT_NEAR(core.power(d2, q, p) / ref, 1.0, 1e-9) << n << " " << d2 << " " << q;
      }
  }
}

TEST(Angular, ConstantIntegrandGivesSphereArea) {
  for (int n = 1; n <= 10; ++n) {
    AngularCore core(n);
    const double v = core.integrate(0.3, 1.0, [](double, double) { return 1.0; });
    EXPECT_NEAR(v, sphere_area(n), 1e-12 * sphere_area(n));
  }
}

TEST(Angular, RejectsSingularEvaluation) {
  AngularCore core(2);
  EXPECT_THROW(core.power(0.0, 1.0, 1.5), DomainError);
}
