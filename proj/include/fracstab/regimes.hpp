#pragma once

// Dimension/order thresholds for boundedness of stable solutions.

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "fracstab/errors.hpp"
#include "fracstab/params.hpp"

namespace fracstab {

/// Outcome of a threshold search over s ∈ (0, 1).
struct Threshold {
  enum class Kind { AllOrders, NoOrder, Crossing };
  Kind kind = Kind::NoOrder;
  double s = std::numeric_limits<double>::quiet_NaN();  ///< crossing order when kind == Crossing

  std::string label() const {
    switch (kind) {
      case Kind::AllOrders: return "all";
      case Kind::NoOrder: return "none";
      default: return "crossing";
    }
  }
};

/// Upper end 2(s + 2 + √(2(s+1))) of the radial boundedness window.
inline double radial_upper(double s) { return 2.0 * (s + 2.0 + std::sqrt(2.0 * (s + 1.0))); }
/// Lower end 2(s + 2 - √(2(s+1))); always below 2.
inline double radial_lower(double s) { return 2.0 * (s + 2.0 - std::sqrt(2.0 * (s + 1.0))); }

/// log of Γ(n/2)Γ(1+s)/Γ((n-2s)/2) minus log of Γ²((n+2s)/4)/Γ²((n-2s)/4);
/// positive exactly when the Gelfand boundedness condition holds.
inline double gelfand_log_margin(int n, double s) {
  if (!(n > 2.0 * s)) throw DomainError("Gelfand condition needs n > 2s");
  return log_gamma(0.5 * n) + log_gamma(1.0 + s) - log_gamma(0.5 * (n - 2.0 * s)) -
         2.0 * log_gamma(0.25 * (n + 2.0 * s)) + 2.0 * log_gamma(0.25 * (n - 2.0 * s));
}

struct RegimeReport {
  Params params;
  bool radial_condition_holds = false;
  double mu_floor = 0.0;
  bool gelfand_condition_holds = false;
  bool exp_10s_holds = false;
  bool convex_4s_holds = false;
};

/// n/2 - s - 1 - √(n-1): decay exponents above this are admissible in the
/// unbounded regime.
inline double decay_exponent_floor(const Params& p) {
  if (p.n < 2) throw DomainError("decay_exponent_floor needs n >= 2");
  return 0.5 * p.n - p.s - 1.0 - std::sqrt(p.n - 1.0);
}

inline RegimeReport classify(const Params& p) {
  if (p.n < 2) throw DomainError("classify needs n >= 2");
  if (!(p.n > 2.0 * p.s)) throw DomainError("classify needs n > 2s");
  RegimeReport r;
  r.params = p;
  r.radial_condition_holds = p.n < radial_upper(p.s);
  r.mu_floor = decay_exponent_floor(p);
  r.gelfand_condition_holds = gelfand_log_margin(p.n, p.s) > 0.0;
  r.exp_10s_holds = p.n < 10.0 * p.s;
  r.convex_4s_holds = p.n < 4.0 * p.s;
  return r;
}

namespace detail {
// Bisection of g on [lo, hi] with a validated bracket.
template <class G>
double bisect(G&& g, double lo, double hi, double tol) {
  double glo = g(lo);
  const double ghi = g(hi);
  if (glo * ghi > 0.0) throw DomainError("bisection: endpoints do not bracket a root");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

/// Smallest order s for which n < 2(s + 2 + √(2(s+1))) holds.
inline Threshold critical_s_radial(int n) {
  if (n < 2) throw DomainError("critical_s_radial needs n >= 2");
  Threshold t;
  if (n < radial_upper(0.0)) {
    t.kind = Threshold::Kind::AllOrders;
  } else if (n >= radial_upper(1.0)) {
    t.kind = Threshold::Kind::NoOrder;
  } else {
    t.kind = Threshold::Kind::Crossing;
    auto g = [n](double s) { return radial_upper(s) - n; };
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, 1.0, tol, iters);
    t.s = 0.5 * (a + b);
  }
  return t;
}

/// Crossing of the Gelfand Gamma condition in s, by bisection to 1e-8 on
/// [1e-6, 1 - 1e-6].
inline Threshold critical_s_gelfand(int n) {
  if (n < 2) throw DomainError("critical_s_gelfand needs n >= 2");
  const double lo = 1e-6, hi = 1.0 - 1e-6;
  auto g = [n](double s) { return gelfand_log_margin(n, s); };
  const double glo = g(lo), ghi = g(hi);
  Threshold t;
  if (glo > 0.0 && ghi > 0.0) {
    t.kind = Threshold::Kind::AllOrders;
  } else if (glo <= 0.0 && ghi <= 0.0) {
    t.kind = Threshold::Kind::NoOrder;
  } else {
    t.kind = Threshold::Kind::Crossing;
    t.s = detail::bisect(g, lo, hi, 1e-8);
  }
  return t;
}

}  // namespace fracstab
