#pragma once

// The constant A_{n,s,β} relating the weighted vertical flux moment of an
// extension to the Riesz moment of its Neumann data, a seeded Monte Carlo
// oracle for it, and the integration-by-parts identity behind it.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "fracstab/angular.hpp"
#include "fracstab/errors.hpp"
#include "fracstab/extension.hpp"
#include "fracstab/fractional_laplacian.hpp"
#include "fracstab/parallel.hpp"
#include "fracstab/params.hpp"

namespace fracstab {

struct FluxConstantQuery {
  Params params;
  double beta = 1.0;

  void validate() const {
    const double top = params.n + 2.0 - 2.0 * params.s;
    if (!(beta > 0.0 && beta < top))
      throw DomainError("flux constant: β must lie in (0, n + 2 - 2s)");
    if (params.n < 2) throw DomainError("flux constant: needs n >= 2");
  }
};

namespace detail {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

// ∫_a^b ∫_{c(t)}^{d(t)} g(t, u) du dt by nested adaptive Gauss–Kronrod.
template <class Lo, class Hi, class G>
Integral nested(double a, double b, Lo&& lo, Hi&& hi, G&& g, double tol) {
  double inner_err = 0.0;
  auto outer = [&](double t) {
    double e = 0.0;
    const double c = lo(t), d = hi(t);
    if (!(d > c)) return 0.0;
    const double v = GK::integrate([&](double u) { return g(t, u); }, c, d, 12, tol, &e);
    inner_err = std::max(inner_err, std::abs(e) * (b - a));
    return v;
  };
  Integral r;
  r.value = GK::integrate(outer, a, b, 12, tol, &r.error);
  r.error = std::abs(r.error) + inner_err;
  return r;
}

// Integrand of A in the quarter plane (ρ, y) after the angular reduction,
// without the prefactor β Γ_{n,s}.
class MagicIntegrand {
 public:
  MagicIntegrand(const Params& p, double beta) : p_(p), beta_(beta), core_(p.n) {}
  double operator()(double rho, double y) const {
    if (!(rho > 0.0) || !(y > 0.0)) return 0.0;
    const double d2 = (rho - 1.0) * (rho - 1.0) + y * y;
    const double m = 0.5 * (p_.n + 2.0 - 2.0 * p_.s);
    return std::pow(y, 3.0 - 2.0 * p_.s) * std::pow(rho, p_.n - 1) *
           std::pow(rho * rho + y * y, -0.5 * (beta_ + 2.0)) * core_.power(d2, 4.0 * rho, m);
  }

 private:
  Params p_;
  double beta_;
  AngularCore core_;
};

}  // namespace detail

struct MagicConstant {
  double value = 0.0;
  double error = 0.0;  ///< estimated absolute quadrature error
};

/// A_{n,s,β} = β Γ_{n,s} ∫ y^{a+2} r^{-β-2} |(x,y) - e|^{-(n+2-2s)} dx dy over
/// the upper half space, reduced to (ρ, θ, y). The quarter plane is split
/// into a disk of radius 0.1 about (1, 0) in local polar coordinates and
/// the rest in global polar coordinates, with maps that make the origin and
/// infinity behaviours integrable to smooth functions.
inline MagicConstant magic_constant_detailed(const FluxConstantQuery& q, double rel_tol = 1e-4) {
  q.validate();
  const Params& p = q.params;
  const double beta = q.beta;
  const detail::MagicIntegrand F(p, beta);
  const double tol = 1e-7;
  constexpr double half_pi = 0.5 * std::numbers::pi;
  constexpr double r_in = 0.9, r_out = 1.1, disk = 0.1;
  const double gam = p.n + 1.0 - 2.0 * p.s - beta;  // F·R ~ R^gam at the origin
  auto polar = [&](double R, double psi) { return R * F(R * std::cos(psi), R * std::sin(psi)); };

  // R = r_in τ^{1/(gam+1)}.
  const double e0 = 1.0 / (gam + 1.0);
  const auto inner = detail::nested(
      0.0, 1.0, [](double) { return 0.0; }, [&](double) { return half_pi; },
      [&](double t, double psi) {
        if (t <= 0.0) return 0.0;
        const double R = r_in * std::pow(t, e0);
        const double dR = r_in * e0 * std::pow(t, e0 - 1.0);
        return polar(R, psi) * dR;
      },
      tol);
  // R = r_out τ^{-1/β}; F·R ~ R^{-1-β} at infinity.
  const double e1 = -1.0 / beta;
  const auto outer = detail::nested(
      0.0, 1.0, [](double) { return 0.0; }, [&](double) { return half_pi; },
      [&](double t, double psi) {
        if (t <= 0.0) return 0.0;
        const double R = r_out * std::pow(t, e1);
        const double dR = -r_out * e1 * std::pow(t, e1 - 1.0);
        return polar(R, psi) * dR;
      },
      tol);
  // Annulus r_in < R < r_out outside the disk about (1, 0).
  const auto ring = detail::nested(
      r_in, r_out,
      [&](double R) {
        const double c = (R * R + 1.0 - disk * disk) / (2.0 * R);
        return c >= 1.0 ? 0.0 : std::acos(c);
      },
      [&](double) { return half_pi; }, polar, tol);
  const auto local = detail::nested(
      0.0, disk, [](double) { return 0.0; }, [](double) { return std::numbers::pi; },
      [&](double r, double phi) { return r * F(1.0 + r * std::cos(phi), r * std::sin(phi)); }, tol);

  const double pre = beta * normalizations(p).gamma_ns;
  MagicConstant out;
  out.value = pre * (inner.value + outer.value + ring.value + local.value);
  out.error = pre * (inner.error + outer.error + ring.error + local.error);
  if (!std::isfinite(out.value) || out.error > rel_tol * std::abs(out.value))
    throw AccuracyError("magic_constant: quadrature did not reach the target accuracy",
                        out.error / std::abs(out.value), rel_tol);
  return out;
}

inline double magic_constant(const FluxConstantQuery& q) { return magic_constant_detailed(q).value; }

// ---------------------------------------------------------------------------
// Monte Carlo oracle

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t samples = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Importance-sampled estimate of A_{n,s,β} in the (n+1)-dimensional half
/// space. The proposal mixes (weight 0.7) a density ∝ y^{3-2s} r^{-β-2}
/// (1 + r²)^{-(n+2-2s)/2}, which matches the integrand at the origin and at
/// infinity, with (weight 0.3) a density ∝ y^{3-2s} |X - e|^{-(n+2-2s)} on
/// the half ball of radius 0.5 about e, which matches the singularity.
/// Samples are drawn in blocks of 65536 with independent seeded streams, so
/// the result does not depend on the worker count.
inline McEstimate magic_constant_mc(const FluxConstantQuery& q, std::uint64_t seed,
                                    std::uint64_t samples = 10'000'000) {
  q.validate();
  const int n = q.params.n;
  const double s = q.params.s;
  const double beta = q.beta;
  const double k = 3.0 - 2.0 * s;            // y exponent
  const double m = n + 2.0 - 2.0 * s;        // exponent of |X - e|
  const double gam = n + 1.0 - 2.0 * s - beta;
  constexpr double p1 = 0.7, p2 = 0.3, ball = 0.5;
  // ∫ over the upper half sphere S^n_+ of ω_y^k.
  const double H = sphere_area(n) * 0.5 * boost::math::beta(0.5 * (k + 1.0), 0.5 * n);
  const double log_c1 = -std::log(H * 0.5 * boost::math::beta(0.5 * (gam + 1.0), 0.5 * beta));
  const double log_c2 = -std::log(H * 0.5 * ball * ball);
  const double pre = q.beta * normalizations(q.params).gamma_ns;

  constexpr std::uint64_t block = 65536;
  const std::uint64_t nblocks = (samples + block - 1) / block;
  struct Acc {
    double sum = 0.0, sum2 = 0.0;
    std::uint64_t count = 0;
  };
  std::vector<Acc> acc(nblocks);
  parallel_for(nblocks, [&](std::size_t b) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(b)));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N01(0.0, 1.0);
    std::gamma_distribution<double> Ga(0.5 * (gam + 1.0), 1.0), Gb(0.5 * beta, 1.0);
    std::gamma_distribution<double> Va(0.5 * (k + 1.0), 1.0), Vb(0.5 * n, 1.0);
    const std::uint64_t count = std::min(block, samples - b * block);
    Acc a;
    a.count = count;
    std::vector<double> z(n);
    for (std::uint64_t i = 0; i < count; ++i) {
      // Direction on S^n_+ with density ∝ ω_y^k: ω_y² ~ Beta((k+1)/2, n/2).
      const double ga = Va(rng), gb = Vb(rng);
      const double wy = std::sqrt(ga / (ga + gb));
      double zn = 0.0;
      for (int j = 0; j < n; ++j) {
        z[j] = N01(rng);
        zn += z[j] * z[j];
      }
      const double w1 = std::sqrt(1.0 - wy * wy) * z[0] / std::sqrt(zn);  // component along e
      double X1, Y, R2;
      if (U(rng) < p1) {
        const double T = Ga(rng) / Gb(rng);  // R² ~ beta-prime
        const double R = std::sqrt(T);
        X1 = R * w1;
        Y = R * wy;
        R2 = T;
      } else {
        const double r = ball * std::sqrt(U(rng));
        X1 = 1.0 + r * w1;
        Y = r * wy;
        R2 = r * r + 1.0 + 2.0 * r * w1;
      }
      const double D2 = R2 + 1.0 - 2.0 * X1;  // |X - e|²
      if (!(Y > 0.0) || !(D2 > 0.0) || !(R2 > 0.0)) continue;
      // Common factor y^k cancels between integrand and proposals.
      const double lg = -0.5 * (beta + 2.0) * std::log(R2) - 0.5 * m * std::log(D2);
      const double q1 = std::exp(log_c1 - 0.5 * (beta + 2.0) * std::log(R2) - 0.5 * m * std::log1p(R2));
      const double q2 = D2 < ball * ball ? std::exp(log_c2 - 0.5 * m * std::log(D2)) : 0.0;
      const double w = std::exp(lg) / (p1 * q1 + p2 * q2);
      a.sum += w;
      a.sum2 += w * w;
    }
    acc[b] = a;
  });
  double sum = 0.0, sum2 = 0.0;
  std::uint64_t total = 0;
  for (const auto& a : acc) {
    sum += a.sum;
    sum2 += a.sum2;
    total += a.count;
  }
  McEstimate est;
  est.samples = total;
  const double mean = sum / total;
  const double var = std::max(0.0, sum2 / total - mean * mean);
  est.mean = pre * mean;
  est.stderr_ = pre * std::sqrt(var / total);
  return est;
}

// ---------------------------------------------------------------------------
// Integration by parts

struct FluxMoments {
  double horizontal = 0.0;  ///< β d_s ∫ y^a ρ W_ρ r^{-β-2}
  double vertical = 0.0;    ///< β d_s ∫ y^a y W_y r^{-β-2}
  double trace = 0.0;       ///< ∫ ρ^{-β} (-Δ)^s w
};

namespace detail {

inline void check_ibp_beta(const Params& p, double beta) {
  if (!(beta > 0.0 && beta < p.n + 2.0 - 2.0 * p.s))
    throw DomainError("flux identity: β must lie in (0, n + 2 - 2s)");
  if (!(beta < p.n)) throw DomainError("flux identity: β must be below n");
  if (p.n < 2) throw DomainError("flux identity: needs n >= 2");
}

}  // namespace detail

/// Half-space moments of the extension W of w and the trace moment of
/// (-Δ)^s w, each by its own quadrature.
template <RadialTrace Trace>
FluxMoments flux_moments(const Trace& w, const Params& p, double beta) {
  detail::check_ibp_beta(p, beta);
  const ExtensionField<Trace> field(w, p);
  const auto norm = normalizations(p);
  const double area = sphere_area(p.n);
  const double a = p.a();
  constexpr double half_pi = 0.5 * std::numbers::pi;

  // Half space in polar coordinates (R, ψ): ρ = R cos ψ, y = R sin ψ, with
  // graded rules. Near ψ = 0 the integrands behave like ψ^{1-2s}; near R = 0
  // like R^{n-1-β}; beyond R_c the map R = R_c/t leaves t^{2s+β-1}.
  // Grading stops at 1e-3 and the innermost piece carries the power
  // substitution: points with y far below R would see cancellation noise
  // in the differentiated kernel.
  const Rule psi_rule = composite_rule(0.0, half_pi, {}, {Focus{0.0, 1e-3, 2.0 - 2.0 * p.s}});
  constexpr double Rc = 16.0;
  Rule r_rule = composite_rule(0.0, Rc, {1.0, 4.0}, {Focus{0.0, 1e-3, p.n - beta}});
  {
    const Rule tail = composite_rule(0.0, 1.0, {}, {Focus{0.0, 1e-3, 2.0 * p.s + beta}});
    for (std::size_t i = 0; i < tail.size(); ++i) {
      const double tt = tail.x[i];
      r_rule.x.push_back(Rc / tt);
      r_rule.w.push_back(tail.w[i] * Rc / (tt * tt));
    }
  }
  std::vector<std::pair<double, double>> acc(r_rule.size());
  parallel_for(r_rule.size(), [&](std::size_t i) {
    const double R = r_rule.x[i];
    double hsum = 0.0, vsum = 0.0;
    for (std::size_t j = 0; j < psi_rule.size(); ++j) {
      const double psi = psi_rule.x[j];
      const double rho = R * std::cos(psi), y = R * std::sin(psi);
      const auto g = field.gradient(rho, y);
      const double common = psi_rule.w[j] * std::pow(y, a) * std::pow(rho, p.n - 1) *
                            std::pow(R, -beta - 1.0);
      hsum += common * rho * g.v_rho;
      vsum += common * y * g.v_y;
    }
    acc[i] = {r_rule.w[i] * hsum, r_rule.w[i] * vsum};
  });
  double hor = 0.0, ver = 0.0;
  for (auto [h, v] : acc) {
    hor += h;
    ver += v;
  }
  FluxMoments out;
  out.horizontal = beta * norm.d_s * area * hor;
  out.vertical = beta * norm.d_s * area * ver;

  // Trace side: ρ^{n-1-β} h(ρ) with a power singularity at 0 and a
  // ρ^{-1-β-2s} tail handled by ρ = R/t.
  const double R = w.support();
  auto h = [&](double r) { return fractional_laplacian(w, p, r); };
  const Rule body = composite_rule(0.0, R, w.cuts(), [&] {
    auto f = w.singularities();
    f.push_back(Focus{0.0, 1e-3, p.n - beta});
    return f;
  }());
  double tr = 0.0;
  for (std::size_t i = 0; i < body.size(); ++i)
    tr += body.w[i] * std::pow(body.x[i], p.n - 1.0 - beta) * h(body.x[i]);
  const Rule tail = composite_rule(0.0, 1.0, {}, {});
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double t = tail.x[i];
    if (t <= 0.0) continue;
    const double r = R / t;
    tr += tail.w[i] * R / (t * t) * std::pow(r, p.n - 1.0 - beta) * h(r);
  }
  out.trace = area * tr;
  return out;
}

/// |LHS + RHS| / (|LHS| + |RHS|) for the identity
/// β d_s ∫ y^a (ρ W_ρ + y W_y) r^{-β-2} + ∫ ρ^{-β} (-Δ)^s w = 0.
template <RadialTrace Trace>
double ibp_residual(const Trace& w, const Params& p, double beta) {
  const auto m = flux_moments(w, p, beta);
  const double lhs = m.horizontal + m.vertical;
  const double den = std::abs(lhs) + std::abs(m.trace);
  return den == 0.0 ? 0.0 : std::abs(lhs + m.trace) / den;
}

struct MomentCheck {
  double lhs = 0.0;  ///< -β d_s ∫ y^a r^{-β-2} y W_y
  double rhs = 0.0;  ///< A_{n,s,β} ∫ ρ^{-β} (-Δ)^s w
  double horizontal = 0.0;
};

template <RadialTrace Trace>
MomentCheck flux_moment_check(const Trace& w, const Params& p, double beta) {
  const auto m = flux_moments(w, p, beta);
  MomentCheck c;
  c.lhs = -m.vertical;
  c.rhs = magic_constant(FluxConstantQuery{p, beta}) * m.trace;
  c.horizontal = -m.horizontal;
  return c;
}

}  // namespace fracstab
