#pragma once

// Diagnostics evaluated on computed states: the stability quadratic form,
// a truncated weighted Dirichlet integral of the extension, L^p norms of
// e^u along a branch and power-decay profiles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fracstab/errors.hpp"
#include "fracstab/extension.hpp"
#include "fracstab/gelfand.hpp"
#include "fracstab/parallel.hpp"
#include "fracstab/regimes.hpp"

namespace fracstab {

/// ⟦ξ⟧²_{H^s} - λ ∫ f'(u) ξ² for a grid vector ξ (zero at ρ = 1 and beyond).
inline double stability_form(const DiscreteOperator& op, const Nonlinearity& f,
                             const BranchPoint& point, const Vec& xi) {
  if (xi.size() != op.size()) throw DomainError("stability_form: ξ has the wrong dimension");
  if (point.state.size() != static_cast<std::size_t>(op.size()) + 1)
    throw DomainError("stability_form: state does not live on the operator grid");
  Vec u(op.size());
  for (int i = 0; i < op.size(); ++i) u[i] = point.state.values()[i];
  return op.seminorm2(xi) - point.lambda * xi.dot(op.reaction(f.df, u) * xi);
}

// ---------------------------------------------------------------------------

struct WeightedDirichletQuery {
  RadialFunction state;
  double alpha = 1.0;
  double rho_min = 1e-3;
  double y_max = 50.0;
};

struct WeightedDirichletResult {
  double value = 0.0;
  double rho_min = 0.0;  ///< truncation of the last evaluation
  double y_max = 0.0;
  double change = 0.0;   ///< relative change under the last refinement
  bool converged = false;
};

namespace detail {

template <RadialTrace Trace>
double weighted_dirichlet_once(const ExtensionField<Trace>& ext, double alpha, double rho_min,
                               double y_max) {
  const auto& p = ext.params();
  const auto& u = ext.trace();
  std::vector<double> cuts;
  for (double c : u.cuts())
    if (c > rho_min && c < 0.5) cuts.push_back(c);
  const Rule rr = composite_rule(rho_min, 0.5, cuts, {Focus{rho_min, rho_min, 1.0}});
  // y^a near y = 0; algebraic decay of v_ρ for large y.
  const Rule yr = composite_rule(0.0, y_max, {1.0}, {Focus{0.0, 1e-4, 2.0 - 2.0 * p.s}});
  std::vector<double> part(rr.size());
  parallel_for(rr.size(), [&](std::size_t i) {
    const double rho = rr.x[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) {
      const double y = yr.x[j];
      if (!(y > 0.0)) continue;
      const double vr = ext.gradient(rho, y).v_rho;
      acc += yr.w[j] * std::pow(y, p.a()) * vr * vr;
    }
    part[i] = rr.w[i] * std::pow(rho, p.n - 1 - 2.0 * alpha) * acc;
  });
  double total = 0.0;
  for (double v : part) total += v;
  return sphere_area(p.n) * total;
}

}  // namespace detail

/// ∫_0^{Y} ∫_{ρ_min < |x| < 1/2} y^a v_ρ² |x|^{-2α} dx dy for the extension v
/// of the query state. The truncation is refined (ρ_min halved, Y doubled)
/// until the value changes by at most 1%, within `budget` refinements.
template <RadialTrace Trace>
WeightedDirichletResult weighted_dirichlet(const WeightedDirichletQuery& q,
                                           const ExtensionField<Trace>& ext, int budget = 4) {
  const int n = ext.params().n;
  if (!(q.alpha >= 1.0 && q.alpha < 1.0 + std::sqrt(n - 1.0)))
    throw DomainError("weighted_dirichlet: α must satisfy 1 <= α < 1 + √(n-1)");
  if (!(q.rho_min > 0.0 && q.rho_min < 0.5) || !(q.y_max > 0.0))
    throw DomainError("weighted_dirichlet: invalid truncation");
  WeightedDirichletResult r;
  r.rho_min = q.rho_min;
  r.y_max = q.y_max;
  r.value = detail::weighted_dirichlet_once(ext, q.alpha, r.rho_min, r.y_max);
  for (int k = 0; k <= budget; ++k) {
    const double next = detail::weighted_dirichlet_once(ext, q.alpha, 0.5 * r.rho_min, 2.0 * r.y_max);
    r.change = next == r.value ? 0.0 : std::abs(next - r.value) / std::max(std::abs(next), std::abs(r.value));
    r.rho_min *= 0.5;
    r.y_max *= 2.0;
    r.value = next;
    if (r.change <= 1e-2) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

struct LpRow {
  double lambda = 0.0;
  double norm = 0.0;  ///< ‖e^u‖_{L^{2α+1}(B₁)}
};

struct LpTable {
  double alpha = 0.0;
  std::vector<LpRow> rows;
  double sup = 0.0;
};

/// ‖e^u‖_{L^q(B₁)} for a radial grid function, exact per cell up to the
/// Gauss rule for the exponential of a linear function.
inline double exp_lq_norm(const RadialFunction& u, int n, double q) {
  const auto& x = u.nodes();
  const auto& v = u.values();
  const auto& g = gauss_rule<12>();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double a = x[k], b = std::min(x[k + 1], 1.0);
    if (!(b > a)) continue;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double t = 0.5 * (1.0 + g.x[i]);
      const double r = a + (b - a) * t;
      const double uv = (1.0 - t) * v[k] + t * v[k + 1];
      acc += 0.5 * g.w[i] * (b - a) * std::pow(r, n - 1) * std::exp(q * uv);
    }
  }
  return std::pow(sphere_area(n) * acc, 1.0 / q);
}

/// ‖e^{u_λ}‖_{L^{2α+1}(B₁)} at every point of an exponential branch.
inline LpTable lp_sweep(const Branch& branch, int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("lp_sweep: α must lie in (0, 2)");
  LpTable t;
  t.alpha = alpha;
  t.rows.resize(branch.points.size());
  parallel_for(branch.points.size(), [&](std::size_t i) {
    t.rows[i] = {branch.points[i].lambda, exp_lq_norm(branch.points[i].state, n, 2.0 * alpha + 1.0)};
  });
  for (const auto& r : t.rows) t.sup = std::max(t.sup, r.norm);
  return t;
}

// ---------------------------------------------------------------------------

struct DecayProfile {
  double constant = 0.0;     ///< fitted C
  double worst_slack = 0.0;  ///< min over nodes of (Cρ^{-μ} - u)/(Cρ^{-μ}); 1 when C = 0
  bool holds = true;
};

/// Fits C = max u(ρ)ρ^μ over the nodes with ρ >= 1/4 and checks
/// u(ρ_i) <= C ρ_i^{-μ} at every node with ρ_i > 0. The estimate is about
/// the origin, so the fit spans the whole outer range: for small s the
/// state decays only like (1-ρ)^s and u ρ^μ peaks close to the boundary.
inline DecayProfile decay_profile_check(const RadialFunction& state, const Params& p, double mu) {
  if (p.n < 2) throw DomainError("decay_profile_check: needs n >= 2");
  if (p.n < radial_upper(p.s))
    throw DomainError("decay_profile_check: parameters lie in the bounded regime");
  if (!(mu > decay_exponent_floor(p)))
    throw DomainError("decay_profile_check: μ must exceed n/2 - s - 1 - √(n-1)");
  const auto& x = state.nodes();
  const auto& v = state.values();
  DecayProfile d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= 0.25) d.constant = std::max(d.constant, v[i] * std::pow(x[i], mu));
  d.worst_slack = 1.0;
  if (d.constant == 0.0) {
    for (double a : v) d.holds = d.holds && a <= 0.0;
    return d;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) continue;
    const double b = d.constant * std::pow(x[i], -mu);
    d.worst_slack = std::min(d.worst_slack, (b - v[i]) / b);
  }
  d.holds = d.worst_slack >= -1e-12;
  return d;
}

}  // namespace fracstab
