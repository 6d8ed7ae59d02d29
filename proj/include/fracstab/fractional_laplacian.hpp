#pragma once

// Direct principal-value evaluation of (-Δ)^s for radial traces, written as
// the second difference
//   (-Δ)^s u(x) = (c/2) ∫ (2u(x) - u(x+z) - u(x-z)) |z|^{-n-2s} dz,
// reduced to an integral in t = |z| and the angle φ between z and x.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracstab/angular.hpp"
#include "fracstab/params.hpp"
#include "fracstab/radial.hpp"

namespace fracstab {

namespace detail {
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_engine() {
  thread_local boost::math::quadrature::tanh_sinh<double> engine(12);
  return engine;
}

// Integrates f over [a, b] split at the given interior points.
template <class F>
double split_tanh_sinh(F&& f, double a, double b, std::vector<double> splits, double tol) {
  splits.push_back(a);
  splits.push_back(b);
  std::sort(splits.begin(), splits.end());
  auto& ts = tanh_sinh_engine();
  double total = 0.0;
  double lo = a;
  for (double c : splits) {
    if (c <= lo || c > b) continue;
    // Slivers are handled by the midpoint rule; tanh-sinh cannot place
    // abscissae strictly inside them.
    if (c - lo > 1e-9 * (b - a)) total += ts.integrate(f, lo, c, tol);
    else total += (c - lo) * f(0.5 * (lo + c));
    lo = c;
  }
  return total;
}
}  // namespace detail

struct PvOptions {
  double t0_max = 2e-3;  ///< upper bound for the analytically treated ball |z| < t0
  double tol = 1e-11;    ///< tanh-sinh relative tolerance
};

/// (-Δ)^s u at radius ρ for a radial trace u, by direct quadrature.
template <RadialTrace Trace>
double fractional_laplacian(const Trace& u, const Params& p, double rho, PvOptions opt = {}) {
  if (rho < 0.0) throw DomainError("fractional_laplacian: radius must be non-negative");
  const int n = p.n;
  const double s = p.s;
  const double c = normalizations(p).c_ns;
  const double area = sphere_area(n);
  const double R = u.support();
  const std::vector<double> cuts = [&] {
    auto v = u.cuts();
    for (const auto& f : u.singularities()) v.push_back(f.where);
    return v;
  }();

  if (rho > R) {
    // Outside the support the integral is not singular:
    // (-Δ)^s u(x) = -c ∫ u(z) |x - z|^{-n-2s} dz.
    const AngularCore core(n);
    std::vector<Focus> foci = u.singularities();
    foci.push_back(Focus{rho, 0.25 * (rho - R), 1.0});
    const Rule rule = composite_rule(0.0, R, u.cuts(), foci);
    const double pk = 0.5 * (n + 2.0 * s);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double rp = rule.x[i];
      const double uv = u.value(rp);
      if (uv == 0.0) continue;
      acc += rule.w[i] * std::pow(rp, n - 1) * uv *
             core.power((rho - rp) * (rho - rp), 4.0 * rho * rp, pk);
    }
    return -c * acc;
  }

  // Only genuine non-smooth points restrict the analytically treated ball;
  // foci with γ = 1 are quadrature hints.
  double dist = std::numeric_limits<double>::infinity();
  for (double b : u.cuts()) dist = std::min(dist, std::abs(b - rho));
  for (const auto& f : u.singularities())
    if (f.gamma != 1.0) dist = std::min(dist, std::abs(f.where - rho));
  if (dist < 1e-12)
    throw DomainError("fractional_laplacian: evaluation point sits on a non-smooth point of the trace");
  const double t0 = std::min(opt.t0_max, 0.005 * dist);
  const double T = rho + R;

  // Laplacian of the radial profile by central differences (even extension).
  const double h = std::min(1e-3, 0.25 * t0);
  auto ue = [&](double r) { return u.value(std::abs(r)); };
  const double u0 = u.value(rho);
  double lap;
  if (n == 1) {
    lap = (ue(rho + h) - 2.0 * u0 + ue(rho - h)) / (h * h);
  } else if (rho < h) {
    // Near the origin Δu ≈ n u''(0) for the even profile.
    const double d2 = (ue(rho + h) - 2.0 * u0 + ue(rho - h)) / (h * h);
    const double d1 = (ue(rho + h) - ue(rho - h)) / (2.0 * h);
    lap = rho == 0.0 ? n * d2 : d2 + (n - 1) * d1 / rho;
  } else {
    const double d2 = (ue(rho + h) - 2.0 * u0 + ue(rho - h)) / (h * h);
    const double d1 = (ue(rho + h) - ue(rho - h)) / (2.0 * h);
    lap = d2 + (n - 1) * d1 / rho;
  }
  const double small = -(area * lap / n) * std::pow(t0, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  const double tail = 2.0 * u0 * area * std::pow(T, -2.0 * s) / (2.0 * s);

  std::vector<double> tsplits;
  for (double b : cuts) {
    tsplits.push_back(std::abs(b - rho));
    tsplits.push_back(b + rho);
  }

  double middle;
  if (n == 1) {
    auto g = [&](double t) {
      return std::pow(t, -1.0 - 2.0 * s) * (2.0 * u0 - u.value(rho + t) - u.value(std::abs(rho - t)));
    };
    // The n = 1 sphere has two points; the symmetric pair is already summed.
    middle = 2.0 * detail::split_tanh_sinh(g, t0, T, tsplits, opt.tol);
    return 0.5 * c * (middle + small + tail);
  }
  if (rho == 0.0) {
    auto g = [&](double t) { return std::pow(t, -1.0 - 2.0 * s) * (u0 - u.value(t)); };
    middle = 2.0 * area * detail::split_tanh_sinh(g, t0, T, tsplits, opt.tol);
    return 0.5 * c * (middle + small + tail);
  }

  const double omega = sphere_slice_weight(n);
  auto inner = [&](double t) {
    std::vector<double> phis;
    for (double b : cuts) {
      const double cphi = std::abs((b * b - rho * rho - t * t) / (2.0 * rho * t));
      if (cphi < 1.0) phis.push_back(std::acos(cphi));
    }
    auto g = [&](double phi) {
      const double cp = std::cos(phi);
      const double base = rho * rho + t * t;
      const double rp = std::sqrt(base + 2.0 * rho * t * cp);
      const double rm = std::sqrt(std::max(0.0, base - 2.0 * rho * t * cp));
      double sn = 1.0;
      const double sp = std::sin(phi);
      for (int i = 0; i < n - 2; ++i) sn *= sp;
      return (2.0 * u0 - u.value(rp) - u.value(rm)) * sn;
    };
    const double I = detail::split_tanh_sinh(g, 0.0, 0.5 * std::numbers::pi, phis, opt.tol);
    return std::pow(t, -1.0 - 2.0 * s) * I;
  };
  middle = 2.0 * omega * detail::split_tanh_sinh(inner, t0, T, tsplits, 0.1 * opt.tol + 1e-12);
  return 0.5 * c * (middle + small + tail);
}

}  // namespace fracstab
