#pragma once

// Angular reduction of radial convolutions. For |x| = ρ, |z| = ρ' and the
// angle θ between them,
//   |x - z|^2 + y^2 = d2 + q·σ,   d2 = (ρ-ρ')^2 + y^2,  q = 4ρρ',  σ = sin^2(θ/2),
// so any kernel depending on that distance integrates over the sphere of
// radius ρ' through a one-dimensional θ-integral.

#include <cmath>
#include <numbers>

#include "fracstab/params.hpp"
#include "fracstab/quadrature.hpp"

namespace fracstab {

/// |S^{n-2}|, the weight in front of sin^{n-2}θ dθ (2 for n = 2).
inline double sphere_slice_weight(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (n - 1)) / gamma_fn(0.5 * (n - 1));
}

/// Sphere-average data cached per dimension.
class AngularCore {
 public:
  explicit AngularCore(int n) : n_(n), omega_(n >= 2 ? sphere_slice_weight(n) : 0.0) {
    if (n < 1) throw DomainError("angular reduction needs n >= 1");
  }

  int n() const noexcept { return n_; }

 private:
  template <class F>
  static auto eval(F& f, double d2, double q, double th) -> decltype(f(d2, 0.0)) {
    const double sh = std::sin(0.5 * th);
    const double sigma = sh * sh;
    return f(d2 + q * sigma, sigma);
  }
  double sin_pow(double th) const { return ipow(std::sin(th), n_ - 2); }
  static double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
  }

 public:
  /// ∫_{S^{n-1}} F(D, σ) dω with D = d2 + q·σ, σ = sin^2(θ/2), θ the polar angle.
  /// F may return any type closed under + and scalar *.
  template <class F>
  auto integrate(double d2, double q, F&& f) const {
    using R = decltype(f(1.0, 0.0));
    if (n_ == 1) return R(f(d2, 0.0) + f(d2 + q, 1.0));
    if (!(d2 > 0.0)) throw DomainError("angular reduction evaluated on the kernel singularity");
    R acc = R(f(d2 + 0.5 * q, 0.5) * 0.0);
    if (q <= 2.0 * d2) {
      // Kernel varies by at most a factor 3 in D: a single smooth panel.
      const auto& g = gauss_rule<24>();
      const double h = 0.5 * std::numbers::pi;
      for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double th = h * (1.0 + g.x[i]);
        acc = acc + (h * g.w[i] * sin_pow(th)) * eval(f, d2, q, th);
      }
      return R(omega_ * acc);
    }
    // Near-singular at θ = 0. On [0, π/3] use sin(θ/2) = ε sinh τ, ε^2 = d2/q,
    // which turns D into d2 cosh^2 τ and spreads the peak over unit-scale τ.
    const double eps = std::sqrt(d2 / q);
    const double tmax = std::asinh(0.5 / eps);
    const int panels = std::max(1, static_cast<int>(std::ceil(tmax)));
    const auto& g10 = gauss_rule<10>();
    for (int k = 0; k < panels; ++k) {
      const double a = tmax * k / panels, b = tmax * (k + 1) / panels;
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t i = 0; i < g10.x.size(); ++i) {
        const double tau = mid + half * g10.x[i];
        const double sh = std::sinh(tau), ch = std::cosh(tau);
        const double sin_half = eps * sh;
        const double cos_half = std::sqrt(std::max(0.0, 1.0 - sin_half * sin_half));
        const double sigma = sin_half * sin_half;
        const double sin_th = 2.0 * sin_half * cos_half;
        const double jac = 2.0 * eps * ch / cos_half;
        const double D = d2 * ch * ch;
        acc = acc + (half * g10.w[i] * jac * ipow(sin_th, n_ - 2)) * f(D, sigma);
      }
    }
    const auto& g20 = gauss_rule<20>();
    const double a = std::numbers::pi / 3.0, b = std::numbers::pi;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < g20.x.size(); ++i) {
      const double th = mid + half * g20.x[i];
      acc = acc + (half * g20.w[i] * sin_pow(th)) * eval(f, d2, q, th);
    }
    return R(omega_ * acc);
  }

  /// ∫_{S^{n-1}} D^{-p} dω, the reduced kernel used by most callers.
  double power(double d2, double q, double p) const {
    return integrate(d2, q, [p](double D, double) { return std::pow(D, -p); });
  }

 private:
  int n_;
  double omega_;
};

}  // namespace fracstab
