#pragma once

// Fixed Gauss-Legendre rules and composite rules graded toward special points.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "fracstab/errors.hpp"

namespace fracstab {

/// A Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {
template <std::size_t N>
GaussRule expand_gauss() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  GaussRule r;
  // Boost stores the non-negative half; zero comes first for odd N.
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] == 0.0) continue;
    r.x.push_back(-a[i]);
    r.w.push_back(wt[i]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.x.push_back(a[i]);
    r.w.push_back(wt[i]);
  }
  return r;
}
}  // namespace detail

/// Cached Gauss-Legendre rule with N points (only the sizes used here are instantiated).
template <std::size_t N>
const GaussRule& gauss_rule() {
  static const GaussRule rule = detail::expand_gauss<N>();
  return rule;
}

/// Quadrature nodes and weights for a one-dimensional integral.
struct Rule {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const noexcept { return x.size(); }

  void append(const GaussRule& g, double a, double b) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      x.push_back(mid + half * g.x[i]);
      w.push_back(half * g.w[i]);
    }
  }

  /// Appends a rule for ∫ over [e, e + dir·eps] of an integrand behaving like
  /// |t-e|^{gamma-1}·smooth, through t = e + dir·eps·v^{1/gamma}.
  void append_power(const GaussRule& g, double e, double eps, int dir, double gamma) {
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double v = 0.5 * (1.0 + g.x[i]);
      const double vw = 0.5 * g.w[i];
      const double t = std::pow(v, 1.0 / gamma);
      // dt = (eps/gamma) v^{1/gamma - 1} dv
      x.push_back(e + dir * eps * t);
      w.push_back(vw * eps / gamma * std::pow(v, 1.0 / gamma - 1.0));
    }
  }

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(0.0));
    R acc = f(x.empty() ? 0.0 : x[0]) * 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc = acc + w[i] * f(x[i]);
    return acc;
  }
};

/// A point toward which a composite rule must be refined. `gamma` is the
/// local integrability exponent (integrand ~ |t - where|^{gamma-1}); use 1
/// for bounded or log-type behaviour.
struct Focus {
  double where;
  double scale;       ///< stop geometric grading once pieces are this small
  double gamma = 1.0;
};

namespace detail {

// Rule on [a, b] graded toward endpoint e (a or b).
inline void graded_piece(Rule& r, double a, double b, bool toward_a, double scale, double gamma) {
  constexpr double ratio = 0.25;
  const auto& g = gauss_rule<12>();
  const double len = b - a;
  if (len <= 0.0) return;
  scale = std::max(scale, 1e-15 * std::max(1.0, std::abs(toward_a ? a : b)));
  double outer = len;
  while (outer * ratio > scale) {
    const double inner = outer * ratio;
    if (toward_a) r.append(g, a + inner, a + outer);
    else r.append(g, b - outer, b - inner);
    outer = inner;
  }
  if (gamma == 1.0) {
    if (toward_a) r.append(g, a, a + outer);
    else r.append(g, b - outer, b);
  } else {
    if (toward_a) r.append_power(g, a, outer, +1, gamma);
    else r.append_power(g, b, outer, -1, gamma);
  }
}

}  // namespace detail

/// Composite rule on [a, b]: cuts at every breakpoint, Gauss-Legendre on each
/// piece, with geometric grading toward each focus point.
inline Rule composite_rule(double a, double b, std::vector<double> cuts,
                           const std::vector<Focus>& foci) {
  if (!(b > a)) return {};
  for (const auto& f : foci) cuts.push_back(f.where);
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> pts;
  for (double c : cuts) {
    if (c < a || c > b) continue;
    if (!pts.empty() && c - pts.back() <= 1e-15 * std::max(1.0, std::abs(c))) continue;
    pts.push_back(c);
  }
  if (pts.back() < b) pts.back() = b;

  // Endpoints are graded down to the scale of any focus located there and,
  // when another focus sits just beyond them, down to the distance to it.
  auto end_scale = [&](double p, double& gamma) {
    gamma = 1.0;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& f : foci) {
      const double dist = std::abs(f.where - p);
      if (dist <= 1e-15 * std::max(1.0, std::abs(p))) {
        d = std::min(d, f.scale);
        if (f.gamma != 1.0) gamma = f.gamma;
      } else {
        d = std::min(d, std::max(dist, f.scale));
      }
    }
    return d;
  };

  Rule r;
  const auto& g = gauss_rule<12>();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i], hi = pts[i + 1], len = hi - lo;
    double gl = 1.0, gh = 1.0;
    const double sl = end_scale(lo, gl), sh = end_scale(hi, gh);
    const bool grade_lo = sl < 0.25 * len, grade_hi = sh < 0.25 * len;
    if (grade_lo && grade_hi) {
      const double mid = 0.5 * (lo + hi);
      detail::graded_piece(r, lo, mid, true, sl, gl);
      detail::graded_piece(r, mid, hi, false, sh, gh);
    } else if (grade_lo) {
      detail::graded_piece(r, lo, hi, true, sl, gl);
    } else if (grade_hi) {
      detail::graded_piece(r, lo, hi, false, sh, gh);
    } else if (gl != 1.0 || gh != 1.0) {
      // Short piece touching an algebraic singularity.
      if (gl != 1.0) r.append_power(g, lo, len, +1, gl);
      else r.append_power(g, hi, len, -1, gh);
    } else {
      // Smooth piece; subdivide long ones so twelve points stay accurate.
      const int m = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
      for (int k = 0; k < m; ++k) r.append(g, lo + len * k / m, lo + len * (k + 1) / m);
    }
  }
  return r;
}

}  // namespace fracstab
