#pragma once

// The s-harmonic extension v = P(·, y) * u of a radial trace, its gradient,
// the conjugate-kernel flux formula and the pointwise verifiers built on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "fracstab/angular.hpp"
#include "fracstab/fractional_laplacian.hpp"
#include "fracstab/params.hpp"
#include "fracstab/quadrature.hpp"
#include "fracstab/radial.hpp"

namespace fracstab {

/// v together with its partial derivatives in ρ and y.
struct ExtensionValue {
  double v = 0.0;
  double v_rho = 0.0;
  double v_y = 0.0;
};

namespace detail {

// Radial rule for ∫_0^R ρ'^{n-1} g(ρ') K(ρ, ρ', y) dρ' with a kernel peaked at
// ρ' = ρ over a width y.
template <RadialTrace Trace>
Rule convolution_rule(const Trace& u, double rho, double y, double gamma_at_rho = 1.0) {
  std::vector<Focus> foci = u.singularities();
  const double R = u.support();
  // Scale zero means a genuine singularity at ρ' = ρ (y = 0).
  const double scale = y > 0.0 ? 0.25 * y : 0.0;
  // A focus outside [0, R] still grades the nearer endpoint.
  foci.push_back(Focus{rho, scale, y > 0.0 ? 1.0 : gamma_at_rho});
  return composite_rule(0.0, R, u.cuts(), foci);
}

}  // namespace detail

/// ∫_{R^n} P(x, y) dx by radial quadrature in |x| at the given height.
inline double poisson_mass(const Params& p, double y) {
  if (!(y > 0.0)) throw DomainError("poisson_mass: height y must be positive");
  const auto c = normalizations(p);
  boost::math::quadrature::exp_sinh<double> es;
  const double q = 0.5 * (p.n + 2.0 * p.s);
  auto f = [&](double r) {
    if (r == 0.0) return p.n == 1 ? std::pow(y, -2.0 * q) : 0.0;
    if (!std::isfinite(r)) return 0.0;
    // Log form: the two powers over- and underflow separately for large r.
    return std::exp((p.n - 1) * std::log(r) - q * std::log(std::fma(r, r, y * y)));
  };
  return c.p_ns * std::pow(y, 2.0 * p.s) * sphere_area(p.n) * es.integrate(f, 1e-14);
}

/// Immutable evaluator of the extension of a radial trace.
template <RadialTrace Trace>
class ExtensionField {
 public:
  ExtensionField(Trace trace, Params p)
      : trace_(std::move(trace)), params_(p), norm_(normalizations(p)), core_(p.n) {}

  const Trace& trace() const noexcept { return trace_; }
  const Params& params() const noexcept { return params_; }
  const Normalizations& norms() const noexcept { return norm_; }

  /// v(ρ, y) = (P(·, y) * u)(x) at |x| = ρ.
  double extend(double rho, double y) const { return evaluate(rho, y, false).v; }

  /// v and its first derivatives from the differentiated kernel.
  ExtensionValue gradient(double rho, double y) const { return evaluate(rho, y, true); }

 private:
  ExtensionValue evaluate(double rho, double y, bool derivs) const {
    if (!(y > 0.0)) throw DomainError("extend: height y must be positive");
    if (rho < 0.0) throw DomainError("extend: radius must be non-negative");
    const int n = params_.n;
    const double s = params_.s;
    const double p = 0.5 * (n + 2.0 * s);
    const double y2 = y * y;
    const Rule rule = detail::convolution_rule(trace_, rho, y);
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double rp = rule.x[i];
      const double uval = trace_.value(rp);
      if (uval == 0.0) continue;
      const double d2 = (rho - rp) * (rho - rp) + y2;
      const double q = 4.0 * rho * rp;
      Eigen::Vector3d k;
      if (!derivs) {
        k = Eigen::Vector3d(core_.power(d2, q, p), 0.0, 0.0);
      } else {
        // Components: D^{-p}, ∂_ρ D^{-p}, D^{-p-1}.
        k = core_.integrate(d2, q, [&](double D, double sigma) {
          const double Dp = std::pow(D, -p);
          const double dD = 2.0 * (rho - rp) + 4.0 * rp * sigma;
          return Eigen::Vector3d(Dp, -p * Dp / D * dD, Dp / D);
        });
      }
      acc += (rule.w[i] * std::pow(rp, n - 1) * uval) * k;
    }
    const double pre = norm_.p_ns * std::pow(y, 2.0 * s);
    ExtensionValue out;
    out.v = pre * acc[0];
    if (derivs) {
      out.v_rho = pre * acc[1];
      // ∂_y [y^{2s} D^{-p}] = 2s y^{2s-1} D^{-p} - 2p y^{2s+1} D^{-p-1}
      out.v_y = norm_.p_ns * (2.0 * s * std::pow(y, 2.0 * s - 1.0) * acc[0] -
                              2.0 * p * std::pow(y, 2.0 * s + 1.0) * acc[2]);
    }
    return out;
  }

  Trace trace_;
  Params params_;
  Normalizations norm_;
  AngularCore core_;
};

/// Neumann data (-Δ)^s u tabulated for the conjugate formula: a smooth part
/// `inner`, an optional part beyond a jump at r0 behaving like
/// g(ρ)(ρ - r0)^{-edge_exponent}, and an optional power-law tail
/// h(R_end)(ρ/R_end)^{-tail_exponent} beyond the last node.
class FluxProfile {
 public:
  FluxProfile(RadialFunction inner, std::optional<double> tail_exponent)
      : inner_(std::move(inner)), tail_exponent_(tail_exponent) {}
  FluxProfile(RadialFunction inner, RadialFunction outer, double edge_exponent,
              std::optional<double> tail_exponent)
      : inner_(std::move(inner)),
        outer_(std::move(outer)),
        edge_(edge_exponent),
        tail_exponent_(tail_exponent) {
    if (std::abs(outer_->nodes().front() - inner_.support()) > 1e-14)
      throw DomainError("FluxProfile: exterior table must start where the interior ends");
    if (!(edge_exponent >= 0.0 && edge_exponent < 1.0))
      throw DomainError("FluxProfile: edge exponent must lie in [0, 1)");
  }

  double r_end() const { return outer_ ? outer_->support() : inner_.support(); }
  double end_value() const { return value(r_end()); }
  const std::optional<double>& tail_exponent() const { return tail_exponent_; }

  double value(double r) const {
    if (r <= inner_.support()) return inner_.value(r);
    if (outer_ && r <= outer_->support()) {
      const double d = r - outer_->nodes().front();
      return outer_value(r, d) * std::pow(d, -edge_);
    }
    if (tail_exponent_) return end_value() * std::pow(r / r_end(), -*tail_exponent_);
    return 0.0;
  }

  // RadialTrace view of the tabulated range [0, r_end].
  double support() const { return r_end(); }
  std::vector<double> cuts() const {
    auto c = inner_.cuts();
    if (outer_) c.insert(c.end(), outer_->nodes().begin(), outer_->nodes().end());
    return c;
  }
  std::vector<Focus> singularities() const {
    if (!outer_ || edge_ == 0.0) return {};
    return {Focus{outer_->nodes().front(), 1e-9, 1.0 - edge_}};
  }

  // Exterior nodes are geometric in the distance to r0 and h decays like a
  // power there, so same-sign segments are interpolated in log-log form.
  double outer_value(double r, double d) const {
    const auto& x = outer_->nodes();
    const auto& g = outer_->values();
    auto it = std::upper_bound(x.begin(), x.end(), r);
    if (it == x.end()) return g.back();
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    const double d0 = x[j - 1] - x.front(), d1 = x[j] - x.front();
    if (j == 1 || !(g[j - 1] * g[j] > 0.0)) return outer_->value(r);
    const double t = std::log(d / d0) / std::log(d1 / d0);
    return std::copysign(std::exp((1.0 - t) * std::log(std::abs(g[j - 1])) + t * std::log(std::abs(g[j]))), g[j]);
  }

  FluxProfile scaled(double c) const {
    FluxProfile f = *this;
    f.inner_ = inner_.scaled(c);
    if (outer_) f.outer_ = outer_->scaled(c);
    return f;
  }

 private:
  RadialFunction inner_;
  std::optional<RadialFunction> outer_;
  double edge_ = 0.0;
  std::optional<double> tail_exponent_;
};

struct FluxTableOptions {
  int interior_nodes = 400;   ///< nodes on [0, r0]
  int exterior_nodes = 480;   ///< nodes on [r0, r_end] (log-spaced toward r0)
  double r_end = 8.0;         ///< last tabulated radius
  double edge_exponent = 0.0; ///< blow-up exponent of h at r0+ (s for (1-ρ²)^s)
};

/// Tabulates h = (-Δ)^s u by direct quadrature. With a non-zero edge exponent
/// the trace must be supported in [0, 1] with h smooth inside the ball; the
/// interior table then stops at ρ = 1 and the blow-up beyond is factored out.
template <RadialTrace Trace>
FluxProfile tabulate_flux(const Trace& u, const Params& p, FluxTableOptions opt = {}) {
  const double tail = p.n + 2.0 * p.s;
  auto h = [&](double r) { return fractional_laplacian(u, p, r); };
  if (opt.edge_exponent == 0.0) {
    // Uniform on [0, 2·support], geometric beyond.
    const double R = u.support();
    std::vector<double> x;
    const int m1 = opt.interior_nodes;
    for (int i = 0; i <= m1; ++i) x.push_back(2.0 * R * i / m1);
    const int m2 = opt.exterior_nodes;
    for (int i = 1; i <= m2; ++i) x.push_back(2.0 * R * std::pow(opt.r_end / (2.0 * R), double(i) / m2));
    return FluxProfile(RadialFunction::sample(x, h), tail);
  }
  const double r0 = 1.0;
  std::vector<double> xi = graded_grid(opt.interior_nodes);
  std::vector<double> vi(xi.size());
  for (std::size_t i = 0; i + 1 < xi.size(); ++i) vi[i] = h(xi[i]);
  // Linear extrapolation to the edge, where direct evaluation is undefined.
  const std::size_t m = xi.size() - 1;
  vi[m] = vi[m - 1] + (vi[m - 1] - vi[m - 2]) * (xi[m] - xi[m - 1]) / (xi[m - 1] - xi[m - 2]);
  std::vector<double> xo{r0}, go{0.0};
  const int m2 = opt.exterior_nodes;
  const double dmin = 1e-7, dmax = opt.r_end - r0;
  for (int i = 0; i <= m2; ++i) {
    const double d = dmin * std::pow(dmax / dmin, double(i) / m2);
    xo.push_back(r0 + d);
    go.push_back(h(r0 + d) * std::pow(d, opt.edge_exponent));
  }
  go[0] = go[1];
  return FluxProfile(RadialFunction(xi, vi), RadialFunction(xo, go), opt.edge_exponent, tail);
}

/// -v_y(ρ, y) through the conjugate kernel: Γ * h / d_s.
inline double vy_from_flux(const FluxProfile& h, const Params& p, double rho, double y) {
  if (!(y > 0.0)) throw DomainError("vy_from_flux: height y must be positive");
  const auto norm = normalizations(p);
  const AngularCore core(p.n);
  const int n = p.n;
  const double p2 = 0.5 * (n + 2.0 - 2.0 * p.s);
  const double y2 = y * y;
  auto kernel = [&](double rp) {
    const double d2 = (rho - rp) * (rho - rp) + y2;
    return std::pow(rp, n - 1) * core.power(d2, 4.0 * rho * rp, p2);
  };
  const Rule rule = detail::convolution_rule(h, rho, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double hv = h.value(rule.x[i]);
    if (hv != 0.0) acc += rule.w[i] * hv * kernel(rule.x[i]);
  }
  const double R = h.r_end();
  const double pre = norm.gamma_ns * y / norm.d_s;
  if (h.tail_exponent()) {
    // ρ' = R / w maps (R, ∞) onto (0, 1).
    std::vector<Focus> foci;
    if (rho > R) foci.push_back(Focus{R / rho, 0.25 * y * R / (rho * rho), 1.0});
    const Rule wr = composite_rule(0.0, 1.0, {}, foci);
    for (std::size_t i = 0; i < wr.size(); ++i) {
      const double w = wr.x[i];
      if (w <= 0.0) continue;
      const double rp = R / w;
      acc += wr.w[i] * R / (w * w) * h.value(rp) * kernel(rp);
    }
  } else {
    // Bound the kernel mass beyond R against the computed value.
    const double gap = std::max(R - rho, y);
    const double mass = sphere_area(n) * std::pow(R / gap, n - 1) * std::pow(gap, 2.0 * p.s - 2.0) /
                        (2.0 - 2.0 * p.s);
    const double missing = std::abs(h.end_value()) * mass;
    const double est = std::abs(acc);
    if (missing > 1e-6 * est && missing > 0.0)
      throw AccuracyError("vy_from_flux: flux table truncated without a tail model", missing / est,
                          1e-6);
  }
  return pre * acc;
}

/// C ∫ h(z) |x - z|^{2s-n} dz over the support of h, at |x| = ρ.
template <RadialTrace Trace>
double riesz_bound(const Trace& h, const Params& p, double rho) {
  const auto norm = normalizations(p);
  if (!norm.riesz_defined())
    throw DomainError("riesz_bound: the Riesz potential needs n > 2s");
  const int n = p.n;
  const double pr = 0.5 * (n - 2.0 * p.s);
  const double gamma = p.s < 0.5 ? 2.0 * p.s : 1.0;
  const AngularCore core(n);
  const Rule rule = detail::convolution_rule(h, rho, 0.0, gamma);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double rp = rule.x[i];
    const double hv = h.value(rp);
    if (hv < 0.0) throw DomainError("riesz_bound: data must be non-negative");
    if (hv == 0.0) continue;
    const double d2 = (rho - rp) * (rho - rp);
    if (!(d2 > 0.0)) continue;
    acc += rule.w[i] * std::pow(rp, n - 1) * hv * core.power(d2, 4.0 * rho * rp, pr);
  }
  return norm.riesz_c * acc;
}

/// ∫_{R^n} |u| dx for a radial trace.
template <RadialTrace Trace>
double l1_norm(const Trace& u, int n) {
  const Rule r = composite_rule(0.0, u.support(), u.cuts(), u.singularities());
  return sphere_area(n) * r.integrate([&](double x) { return std::pow(x, n - 1) * std::abs(u.value(x)); });
}

struct DecayReport {
  double horizontal = 0.0;  ///< max |v_ρ| r^{n+1+2s} / y^{2s}
  double vertical = 0.0;    ///< max |v_y| r^{n+2s} / y^{2s-1}
  double gradient = 0.0;    ///< max |∇v| y^{n+1} / ‖u‖_{L¹}
};

/// Maxima of the scaled derivative ratios over sample points (ρ, y), ρ > 2.
template <RadialTrace Trace>
DecayReport decay_report(const ExtensionField<Trace>& field,
                         const std::vector<std::pair<double, double>>& samples) {
  const auto& p = field.params();
  for (auto [rho, y] : samples) {
    if (!(rho > 2.0)) throw DomainError("decay_report: samples must have ρ > 2");
    if (!(y > 0.0)) throw DomainError("decay_report: samples must have y > 0");
  }
  const double l1 = l1_norm(field.trace(), p.n);
  DecayReport rep;
  for (auto [rho, y] : samples) {
    const auto g = field.gradient(rho, y);
    const double r = std::hypot(rho, y);
    rep.horizontal = std::max(rep.horizontal,
                              std::abs(g.v_rho) * std::pow(r, p.n + 1 + 2 * p.s) / std::pow(y, 2 * p.s));
    rep.vertical = std::max(rep.vertical,
                            std::abs(g.v_y) * std::pow(r, p.n + 2 * p.s) / std::pow(y, 2 * p.s - 1));
    if (l1 > 0.0)
      rep.gradient = std::max(rep.gradient, std::hypot(g.v_rho, g.v_y) * std::pow(y, p.n + 1) / l1);
  }
  return rep;
}

struct HalfBallBound {
  double sup = 0.0;        ///< sampled sup |v| over the half ball of radius R
  double bound = 0.0;      ///< C (‖u‖_{L∞(B_2R)} + ‖u‖_{L¹})
  double constant = 1.0;   ///< the fitted C
};

/// Compares the sampled supremum of |v| on the half ball B_R^+ with the bound
/// ‖u‖_{L∞(B_2R)} + C_R ‖u‖_{L¹}, where C_R bounds the Poisson kernel at
/// distance ≥ R; C = max(1, C_R) is reported.
template <RadialTrace Trace>
HalfBallBound sup_halfball_bound(const ExtensionField<Trace>& field, double R, int samples = 16) {
  if (!(R > 0.0)) throw DomainError("sup_halfball_bound: R must be positive");
  const auto& p = field.params();
  const auto& u = field.trace();
  HalfBallBound out;
  for (int i = 1; i <= samples; ++i) {
    const double r = R * i / (samples + 1.0);
    for (int j = 0; j < samples; ++j) {
      // Angles from just above the trace plane to the vertical axis.
      const double th = 0.5 * std::numbers::pi * (j + 0.5) / samples;
      const double rho = r * std::cos(th), y = r * std::sin(th);
      out.sup = std::max(out.sup, std::abs(field.extend(rho, y)));
    }
    out.sup = std::max(out.sup, std::abs(field.extend(r, 1e-4 * R)));
  }
  double linf = 0.0;
  for (int i = 0; i <= 400; ++i) linf = std::max(linf, std::abs(u.value(2.0 * R * i / 400.0)));
  for (double c : u.cuts())
    if (c <= 2.0 * R) linf = std::max(linf, std::abs(u.value(c)));
  const double ys = R * std::min(1.0, std::sqrt(2.0 * p.s / p.n));
  const double cr = field.norms().p_ns * std::pow(ys, 2.0 * p.s) *
                    std::pow(R * R + ys * ys, -0.5 * (p.n + 2.0 * p.s));
  out.constant = std::max(1.0, cr);
  out.bound = out.constant * (linf + l1_norm(u, p.n));
  return out;
}

}  // namespace fracstab
