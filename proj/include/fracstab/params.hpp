#pragma once

// Order/dimension parameters and the normalization constants attached to
// the fractional Laplacian, its extension and the associated kernels.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "fracstab/errors.hpp"

namespace fracstab {

/// ln Γ(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << "log_gamma: argument must be positive and finite, got " << x;
    throw DomainError(msg.str());
  }
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

/// Γ(x) for x > 0, through log_gamma.
inline double gamma_fn(double x) { return std::exp(log_gamma(x)); }

/// Spatial dimension n and fractional order s ∈ (0,1).
struct Params {
  int n = 2;
  double s = 0.5;

  /// Weight exponent of the extension problem, a = 1 - 2s ∈ (-1, 1).
  double a() const noexcept { return 1.0 - 2.0 * s; }
};

inline Params make_params(int n, double s) {
  if (n < 1) throw DomainError("dimension n must be at least 1, got " + std::to_string(n));
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream msg;
    msg << "fractional order s must lie in (0,1), got " << s;
    throw DomainError(msg.str());
  }
  return Params{n, s};
}

/// Validation for the solver-facing paths, which are stated for n >= 2.
inline Params make_solver_params(int n, double s) {
  Params p = make_params(n, s);
  if (n < 2) throw DomainError("solver paths require n >= 2, got n = " + std::to_string(n));
  return p;
}

/// |S^{n-1}|, the surface measure of the unit sphere in R^n (2 for n = 1).
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / gamma_fn(0.5 * n);
}

/// |B_1| in R^n.
inline double ball_volume(int n) { return sphere_area(n) / n; }

struct Normalizations {
  double c_ns = 0.0;      ///< fractional Laplacian constant (Fourier symbol |ξ|^{2s})
  double d_s = 0.0;       ///< Dirichlet-to-Neumann constant: (-Δ)^s u = -d_s lim y^a v_y
  double p_ns = 0.0;      ///< Poisson kernel constant: P = p_ns y^{2s} / (|x|^2+y^2)^{(n+2s)/2}
  double gamma_ns = 0.0;  ///< conjugate kernel constant: Γ = gamma_ns y / (|x|^2+y^2)^{(n+2-2s)/2}
  double riesz_c = std::numeric_limits<double>::quiet_NaN();  ///< fundamental solution constant

  /// The Riesz potential |x|^{2s-n} is a fundamental solution only for n > 2s.
  bool riesz_defined() const noexcept { return std::isfinite(riesz_c); }
};

/// Poisson constant of order σ: the value making σ-kernel integrate to one.
inline double poisson_constant(int n, double sigma) {
  return std::exp(log_gamma(0.5 * n + sigma) - 0.5 * n * std::log(std::numbers::pi) -
                  log_gamma(sigma));
}

inline Normalizations normalizations(const Params& p) {
  const double n = p.n;
  const double s = p.s;
  const double log_pi = std::log(std::numbers::pi);
  Normalizations out;
  out.c_ns = std::exp(std::log(s) + 2.0 * s * std::log(2.0) + log_gamma(0.5 * n + s) -
                      0.5 * n * log_pi - log_gamma(1.0 - s));
  out.d_s = std::exp((2.0 * s - 1.0) * std::log(2.0) + log_gamma(s) - log_gamma(1.0 - s));
  out.p_ns = poisson_constant(p.n, s);
  // The conjugate problem carries the weight y^{-a}; its Poisson kernel is
  // the order-(1-s) kernel.
  out.gamma_ns = poisson_constant(p.n, 1.0 - s);
  if (n > 2.0 * s) {
    out.riesz_c = std::exp(log_gamma(0.5 * n - s) - 2.0 * s * std::log(2.0) - 0.5 * n * log_pi -
                           log_gamma(s));
  }
  return out;
}

/// Closed-form value of (-Δ)^s (1-|x|^2)_+^s inside the unit ball.
inline double getoor_constant(const Params& p) {
  return std::exp(2.0 * p.s * std::log(2.0) + log_gamma(1.0 + p.s) + log_gamma(0.5 * p.n + p.s) -
                  log_gamma(0.5 * p.n));
}

}  // namespace fracstab
