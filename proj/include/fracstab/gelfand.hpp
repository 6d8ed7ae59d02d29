#pragma once

// Galerkin discretization of the Dirichlet fractional Laplacian on radial
// functions in B₁, Newton solves of (-Δ)^s u = λ f(u), pseudo-arclength
// continuation of the minimal branch and its stability eigenvalue.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracstab/angular.hpp"
#include "fracstab/errors.hpp"
#include "fracstab/parallel.hpp"
#include "fracstab/params.hpp"
#include "fracstab/quadrature.hpp"
#include "fracstab/radial.hpp"

namespace fracstab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Nonlinearity f with derivative. The theory covers nondecreasing f with
/// f(0) > 0; `nondecreasing` is the caller's attestation of the former.
struct Nonlinearity {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  bool nondecreasing = true;

  void validate() const {
    if (!f || !df) throw DomainError("nonlinearity '" + name + "' is incomplete");
    if (!nondecreasing) throw DomainError("nonlinearity '" + name + "' must be nondecreasing");
    if (!(f(0.0) > 0.0)) throw DomainError("nonlinearity '" + name + "' must satisfy f(0) > 0");
  }

  static Nonlinearity exponential() {
    return {"exp", [](double u) { return std::exp(u); }, [](double u) { return std::exp(u); }, true};
  }
  /// (1 + u)^p with p > 1.
  static Nonlinearity power(double p) {
    if (!(p > 1.0)) throw DomainError("power nonlinearity needs p > 1");
    return {"power",
            [p](double u) { return std::pow(std::max(0.0, 1.0 + u), p); },
            [p](double u) { return p * std::pow(std::max(0.0, 1.0 + u), p - 1.0); }, true};
  }
  /// f ≡ 1: the problem becomes linear in λ.
  static Nonlinearity constant() {
    return {"linear", [](double) { return 1.0; }, [](double) { return 0.0; }, true};
  }
};

/// Stiffness matrix of the H^s quadratic form on P1 hat functions vanishing
/// at ρ = 1 (and outside B₁), with consistent and lumped L² masses. Reaction
/// terms are integrated exactly in the Galerkin sense; the lumped mass only
/// serves the nodal view `apply`.
struct DiscreteOperator {
  Params params;
  std::vector<double> grid;  ///< M+1 nodes, grid.front() = 0, grid.back() = 1
  Mat A;                     ///< M x M, unknowns at nodes 0..M-1
  Mat Mc;                    ///< consistent mass |S| ∫ ρ^{n-1} φ_i φ_j
  Vec W;                     ///< lumped mass |S| ∫ ρ^{n-1} φ_i
  Mat qw;                    ///< per-cell Gauss weights with |S| ρ^{n-1}, M x 8

  int size() const { return static_cast<int>(W.size()); }

  /// b_i = |S| ∫ g(u_h) φ_i ρ^{n-1} dρ.
  template <class G>
  Vec load(G&& g, const Vec& u) const {
    Vec b = Vec::Zero(size());
    each_point(u, [&](int k, double t, double w, double uh) {
      const double gw = w * g(uh);
      b[k] += gw * (1.0 - t);
      if (k + 1 < size()) b[k + 1] += gw * t;
    });
    return b;
  }

  /// K_ij = |S| ∫ g(u_h) φ_i φ_j ρ^{n-1} dρ (tridiagonal).
  template <class G>
  Mat reaction(G&& g, const Vec& u) const {
    Mat K = Mat::Zero(size(), size());
    each_point(u, [&](int k, double t, double w, double uh) {
      const double gw = w * g(uh);
      K(k, k) += gw * (1.0 - t) * (1.0 - t);
      if (k + 1 < size()) {
        K(k, k + 1) += gw * t * (1.0 - t);
        K(k + 1, k) += gw * t * (1.0 - t);
        K(k + 1, k + 1) += gw * t * t;
      }
    });
    return K;
  }

  /// L² inner product of two grid functions.
  double l2dot(const Vec& a, const Vec& b) const { return a.dot(Mc * b); }

  /// Nodal values of (-Δ)^s applied to a grid function: W^{-1} A u.
  Vec apply(const Vec& u) const { return (A * u).cwiseQuotient(W); }

  /// ⟦u⟧²_{H^s} of the grid function.
  double seminorm2(const Vec& u) const { return u.dot(A * u); }

  /// Nodal values of a trace at the unknown nodes.
  template <RadialTrace Trace>
  Vec restrict(const Trace& u) const {
    Vec v(size());
    for (int i = 0; i < size(); ++i) v[i] = u.value(grid[i]);
    return v;
  }

  /// Grid function as a RadialFunction, with the boundary zero appended.
  RadialFunction state(const Vec& u) const {
    std::vector<double> v(u.data(), u.data() + u.size());
    v.push_back(0.0);
    return RadialFunction(grid, std::move(v));
  }

 private:
  template <class Fn>
  void each_point(const Vec& u, Fn&& fn) const {
    const auto& g = gauss_rule<8>();
    const int M = size();
    for (int k = 0; k < M; ++k) {
      const double ua = u[k], ub = k + 1 < M ? u[k + 1] : 0.0;
      for (std::size_t a = 0; a < g.x.size(); ++a) {
        const double t = 0.5 * (1.0 + g.x[a]);
        fn(k, t, qw(k, static_cast<Eigen::Index>(a)), (1.0 - t) * ua + t * ub);
      }
    }
  }
};

namespace detail {

// E(ρ) = ∫_{|z|>1} |x - z|^{-n-2s} dz for |x| = ρ < 1.
inline double exterior_kernel(int n, double s, double rho) {
  const double omega = sphere_slice_weight(n);
  const double d = 1.0 - rho * rho;
  auto tstar = [&](double phi) {
    const double c = std::cos(phi), sn = std::sin(phi);
    const double root = std::sqrt(std::max(0.0, 1.0 - rho * rho * sn * sn));
    return c >= 0.0 ? d / (rho * c + root) : -rho * c + root;
  };
  const Rule r = composite_rule(0.0, std::numbers::pi, {},
                                {Focus{0.5 * std::numbers::pi, 0.25 * std::sqrt(d), 1.0}});
  const double I = r.integrate([&](double phi) {
    return std::pow(tstar(phi), -2.0 * s) * std::pow(std::sin(phi), n - 2);
  });
  return omega * I / (2.0 * s);
}

}  // namespace detail

/// Assembles the discrete operator on a grid 0 = x_0 < ... < x_M = 1.
inline DiscreteOperator assemble(const Params& p_in, const std::vector<double>& grid) {
  const Params p = make_solver_params(p_in.n, p_in.s);
  if (grid.size() < 3) throw DomainError("assemble: grid needs at least two cells");
  if (grid.front() != 0.0 || grid.back() != 1.0)
    throw DomainError("assemble: grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw DomainError("assemble: grid nodes must be strictly increasing (duplicate at index " +
                        std::to_string(i) + ")");

  const int n = p.n;
  const double s = p.s;
  const int M = static_cast<int>(grid.size()) - 1;
  const auto norm = normalizations(p);
  const double area = sphere_area(n);
  const double pref = 0.5 * norm.c_ns * area;  // in front of ∫∫ ρ^{n-1}ρ'^{n-1}(Δu)² K
  const double pk = 0.5 * (n + 2.0 * s);
  const AngularCore core(n);
  auto K = [&](double r1, double r2) {
    return core.power((r1 - r2) * (r1 - r2), 4.0 * r1 * r2, pk);
  };
  auto h = [&](int k) { return grid[k + 1] - grid[k]; };

  DiscreteOperator op;
  op.params = p;
  op.grid = grid;
  op.A = Mat::Zero(M, M);
  op.Mc = Mat::Zero(M, M);
  op.W = Vec::Zero(M);
  op.qw = Mat::Zero(M, 8);

  // Adds w·d dᵀ for the local difference vector d over dof indices idx.
  auto add_outer = [&](Mat& A, const int* idx, const double* d, int m, double w) {
    for (int a = 0; a < m; ++a) {
      if (idx[a] >= M) continue;
      for (int b = 0; b < m; ++b) {
        if (idx[b] >= M) continue;
        A(idx[a], idx[b]) += w * d[a] * d[b];
      }
    }
  };

  // Mass matrices and the reaction quadrature.
  const auto& g8 = gauss_rule<8>();
  for (int k = 0; k < M; ++k) {
    for (std::size_t a = 0; a < g8.x.size(); ++a) {
      const double t = 0.5 * (1.0 + g8.x[a]);
      const double r = grid[k] + h(k) * t;
      const double w = 0.5 * g8.w[a] * h(k) * area * std::pow(r, n - 1);
      op.qw(k, static_cast<Eigen::Index>(a)) = w;
    }
  }
  op.W = op.load([](double) { return 1.0; }, Vec::Zero(M));
  op.Mc = op.reaction([](double) { return 1.0; }, Vec::Zero(M));

  // Separated cell pairs (l >= k + 2), tensor Gauss rules; nearby pairs get
  // more points because the kernel varies faster relative to cell size.
  const auto& g6 = gauss_rule<6>();
  const auto& g12 = gauss_rule<12>();
  std::vector<Mat> rows(M, Mat());
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    Mat local = Mat::Zero(M, M);
    bool touched = false;
    for (int l = k + 2; l < M; ++l) {
      const GaussRule& g = (l - k <= 4) ? g12 : g6;
      const int idx[4] = {k, k + 1, l, l + 1};
      for (std::size_t a = 0; a < g.x.size(); ++a) {
        const double ta = 0.5 * (1.0 + g.x[a]);
        const double ra = grid[k] + h(k) * ta;
        const double wa = 0.5 * g.w[a] * h(k) * std::pow(ra, n - 1);
        for (std::size_t b = 0; b < g.x.size(); ++b) {
          const double tb = 0.5 * (1.0 + g.x[b]);
          const double rb = grid[l] + h(l) * tb;
          const double wb = 0.5 * g.w[b] * h(l) * std::pow(rb, n - 1);
          const double d[4] = {1.0 - ta, ta, -(1.0 - tb), -tb};
          // Factor 2: the ordered pair (l, k) contributes the same.
          add_outer(local, idx, d, 4, 2.0 * pref * wa * wb * K(ra, rb));
          touched = true;
        }
      }
    }
    if (touched) rows[kk] = std::move(local);
  });
  for (auto& r : rows)
    if (r.size() > 0) op.A += r;

  // Same-cell contributions: within a cell u(ρ) - u(ρ') = (ρ - ρ')(u_{k+1} - u_k)/h.
  // With t = ρ - ρ' the integrand behaves like t^{1-2s}.
  for (int k = 0; k < M; ++k) {
    const double hk = h(k);
    const Rule tr = composite_rule(0.0, hk, {}, {Focus{0.0, 1e-4 * hk, 2.0 - 2.0 * s}});
    double S = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double t = tr.x[i];
      const double lo = grid[k] + t, hi = grid[k + 1];
      double inner = 0.0;
      for (std::size_t a = 0; a < g8.x.size(); ++a) {
        const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g8.x[a];
        inner += 0.5 * (hi - lo) * g8.w[a] * std::pow(r, n - 1) * std::pow(r - t, n - 1) * K(r, r - t);
      }
      S += tr.w[i] * t * t * inner;
    }
    S *= 2.0 / (hk * hk);  // both orderings of (ρ, ρ')
    const int idx[2] = {k, k + 1};
    const double d[2] = {-1.0, 1.0};
    add_outer(op.A, idx, d, 2, pref * S);
  }

  // Adjacent cells sharing node x_{k+1}: ρ' = x_{k+1} - p in cell k,
  // ρ = x_{k+1} + q in cell k+1, split into two Duffy triangles.
  for (int k = 0; k + 1 < M; ++k) {
    const double h1 = h(k), h2 = h(k + 1), xm = grid[k + 1];
    Rule ar;
    ar.append_power(g12, 0.0, 1.0, +1, 3.0 - 2.0 * s);
    const int idx[3] = {k, k + 1, k + 2};
    for (int tri = 0; tri < 2; ++tri) {
      for (std::size_t i = 0; i < ar.size(); ++i) {
        const double a = ar.x[i];
        for (std::size_t j = 0; j < g12.x.size(); ++j) {
          const double b = 0.5 * (1.0 + g12.x[j]);
          const double wb = 0.5 * g12.w[j];
          const double pp = tri == 0 ? h1 * a : h1 * a * b;
          const double qq = tri == 0 ? h2 * a * b : h2 * a;
          const double r1 = xm - pp, r2 = xm + qq;
          const double d[3] = {-pp / h1, pp / h1 - qq / h2, qq / h2};
          const double w = ar.w[i] * wb * h1 * h2 * a * std::pow(r1, n - 1) * std::pow(r2, n - 1) *
                           K(r1, r2);
          add_outer(op.A, idx, d, 3, 2.0 * pref * w);
        }
      }
    }
  }

  // Exterior interaction c|S| ∫ ρ^{n-1} u² E(ρ); the last cell carries the
  // (1-ρ)^{-2s} growth of E against φ_{M-1}² ~ (1-ρ)².
  const double cext = norm.c_ns * area;
  for (int k = 0; k < M; ++k) {
    Rule r;
    if (k == M - 1) r.append_power(g12, 1.0, h(k), -1, 3.0 - 2.0 * s);
    else r.append(g8, grid[k], grid[k + 1]);
    const int idx[2] = {k, k + 1};
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double rho = r.x[i];
      const double t = (rho - grid[k]) / h(k);
      const double phi[2] = {1.0 - t, t};
      const double w = r.w[i] * cext * std::pow(rho, n - 1) * detail::exterior_kernel(n, s, rho);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (idx[a] < M && idx[b] < M) op.A(idx[a], idx[b]) += w * phi[a] * phi[b];
    }
  }

  op.A = 0.5 * (op.A + op.A.transpose()).eval();
  return op;
}

/// Convenience: assemble on the default graded grid with M cells.
inline DiscreteOperator assemble(const Params& p, int M) { return assemble(p, graded_grid(M)); }

// ---------------------------------------------------------------------------
// Newton

struct NewtonResult {
  bool converged = false;
  Vec u;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();  ///< ‖W^{-1}(Au - λ b(u))‖∞
  double floor = 0.0;  ///< roundoff floor of the residual evaluation
};

namespace detail {
// Galerkin residual scaled by the lumped mass, so it reads like a nodal
// equation residual.
inline double residual_inf(const DiscreteOperator& op, const Nonlinearity& f, double lambda,
                           const Vec& u, double* floor_out = nullptr) {
  const Vec R = (op.A * u - lambda * op.load(f.f, u)).cwiseQuotient(op.W);
  const Vec absAu = (op.A.cwiseAbs() * u.cwiseAbs()).cwiseQuotient(op.W);
  const Vec absb = op.load([&](double x) { return std::abs(f.f(x)); }, u).cwiseQuotient(op.W);
  double r = 0.0, fl = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    r = std::max(r, std::abs(R[i]));
    fl = std::max(fl, absAu[i] + lambda * absb[i]);
  }
  if (floor_out) *floor_out = 64.0 * std::numeric_limits<double>::epsilon() * fl;
  return r;
}
}  // namespace detail

/// Solves the Galerkin system A u = λ b(u). Non-convergence within
/// `max_iter` iterations is reported through `converged = false`.
inline NewtonResult newton_solve(const DiscreteOperator& op, const Nonlinearity& f, double lambda,
                                 const Vec& init, int max_iter = 50) {
  f.validate();
  if (lambda < 0.0) throw DomainError("newton_solve: λ must be non-negative");
  if (init.size() != op.size()) throw DomainError("newton_solve: initial state has wrong size");
  NewtonResult res;
  res.u = init;
  if (lambda == 0.0) {
    res.u.setZero();
    res.converged = true;
    res.residual = 0.0;
    return res;
  }
  const double tol = 1e-10 * (1.0 + lambda);
  for (int it = 0; it <= max_iter; ++it) {
    double fl = 0.0;
    res.residual = detail::residual_inf(op, f, lambda, res.u, &fl);
    res.floor = fl;
    res.iterations = it;
    if (!std::isfinite(res.residual)) return res;
    if (res.residual <= std::max(tol, fl)) {
      res.converged = true;
      return res;
    }
    if (it == max_iter) break;
    const Vec F = op.A * res.u - lambda * op.load(f.f, res.u);
    const Mat J = op.A - lambda * op.reaction(f.df, res.u);
    const Vec du = (op.W.cwiseInverse().asDiagonal() * J).partialPivLu().solve(-F.cwiseQuotient(op.W));
    if (!du.allFinite()) return res;
    res.u += du;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Stability eigenvalue

struct Eigenpair {
  double mu = 0.0;
  Vec xi;  ///< eigenvector normalized so that ξᵀ M ξ = 1
};

namespace detail {
// L^{-1} (A - λK) L^{-T} with M = L Lᵀ.
inline Mat stability_matrix(const DiscreteOperator& op, const Eigen::LLT<Mat>& chol,
                            const Nonlinearity& f, double lambda, const Vec& u) {
  Mat B = op.A - lambda * op.reaction(f.df, u);
  chol.matrixL().solveInPlace(B);
  Mat Bt = B.transpose();
  chol.matrixL().solveInPlace(Bt);
  return 0.5 * (Bt + Bt.transpose());
}

// Number of eigenvalues of B below σ (Sylvester inertia of an LDLᵀ factor).
inline int count_below(const Mat& B, double sigma) {
  Mat C = B;
  C.diagonal().array() -= sigma;
  Eigen::LDLT<Mat> ldlt(C);
  const auto d = ldlt.vectorD();
  int k = 0;
  for (int i = 0; i < d.size(); ++i)
    if (d[i] < 0.0) ++k;
  return k;
}
}  // namespace detail

/// Smallest eigenvalue of the pencil (A - λK(f'(u))) ξ = μ M ξ by shifted
/// inverse iteration on the Cholesky-reduced symmetric form.
inline Eigenpair principal_eigenpair(const DiscreteOperator& op, const Nonlinearity& f,
                                     double lambda, const Vec& u,
                                     std::optional<double> guess = std::nullopt) {
  if (u.size() != op.size()) throw DomainError("principal_eigenvalue: state has wrong size");
  const Eigen::LLT<Mat> chol(op.Mc);
  const Mat B = detail::stability_matrix(op, chol, f, lambda, u);
  const int m = op.size();
  const double scale = B.cwiseAbs().rowwise().sum().maxCoeff();
  // Gershgorin lower bound: a shift below the whole spectrum.
  double gersh = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) gersh = std::min(gersh, B(i, i) - (B.row(i).cwiseAbs().sum() - std::abs(B(i, i))));

  auto iterate = [&](double sigma, double& mu, Vec& x) -> bool {
    Mat C = B;
    C.diagonal().array() -= sigma;
    const Eigen::PartialPivLU<Mat> lu(C);
    x = Vec::Ones(m).normalized();
    mu = x.dot(B * x);
    for (int it = 0; it < 20000; ++it) {
      Vec y = lu.solve(x);
      if (!y.allFinite()) return false;
      x = y.normalized();
      const Vec Bx = B * x;
      mu = x.dot(Bx);
      if ((Bx - mu * x).norm() <= 1e-13 * scale) return true;
    }
    return false;
  };

  double mu = 0.0;
  Vec x;
  bool ok = iterate(guess.value_or(0.0), mu, x);
  // The iteration finds the eigenvalue nearest the shift; confirm it is the
  // smallest, otherwise restart from below the spectrum.
  if (!ok || detail::count_below(B, mu - 1e-9 * std::max(1.0, std::abs(mu))) > 0) {
    ok = iterate(gersh - 1e-3 * scale, mu, x);
  }
  if (!ok) throw AccuracyError("principal_eigenvalue: inverse iteration did not converge", 1.0, 1e-13);
  Eigenpair e;
  e.mu = mu;
  e.xi = chol.matrixU().solve(x);
  return e;
}

inline double principal_eigenvalue(const DiscreteOperator& op, const Nonlinearity& f, double lambda,
                                   const Vec& u) {
  return principal_eigenpair(op, f, lambda, u).mu;
}

// ---------------------------------------------------------------------------
// State diagnostics

/// Least-squares slope of log u against log(1 - ρ) over the nodes with
/// δ = 1 - ρ in [δ_min, 10 δ_min], δ_min the smallest positive distance.
inline double boundary_exponent(const RadialFunction& state) {
  const auto& x = state.nodes();
  const auto& v = state.values();
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (1.0 - x[i] > 0.0 && v[i] > 0.0) dmin = std::min(dmin, 1.0 - x[i]);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = 1.0 - x[i];
    if (d > 0.0 && d <= 10.0 * dmin * (1.0 + 1e-12) && v[i] > 0.0) {
      lx.push_back(std::log(d));
      ly.push_back(std::log(v[i]));
    }
  }
  if (lx.size() < 4)
    throw AccuracyError("boundary_exponent: fewer than 4 usable nodes in the last decade",
                        static_cast<double>(lx.size()), 4.0);
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

/// True iff node values are non-increasing up to 1e-10 relative slack.
inline bool monotonicity_check(const RadialFunction& state) {
  const auto& v = state.values();
  double scale = 0.0;
  for (double a : v) scale = std::max(scale, std::abs(a));
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + 1e-10 * scale) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Continuation

struct BranchPoint {
  double lambda = 0.0;
  RadialFunction state;
  double sup_norm = 0.0;
  double mu1 = 0.0;
  double arclength = 0.0;
};

struct Branch {
  std::vector<BranchPoint> points;
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  bool fold_found = false;
};

struct ContinuationControls {
  double initial_step = 0.05;
  double min_step = 1e-8;
  double max_step = 0.5;
  double lambda_max = 100.0;   ///< stop once λ reaches this value
  double fold_tol = 1e-10;     ///< arclength width of the final fold bracket
  int max_points = 2000;
};

namespace detail {

struct ArcPoint {
  Vec u;
  double lambda = 0.0;
  Vec tu;          // tangent, u part
  double tl = 0.0; // tangent, λ part
};

// Arclength metric: nodal mean square. An L² metric with the ρ^{n-1} weight
// cannot see the center, where the solution grows near the fold when n is large.
inline double wdot(const DiscreteOperator& op, const Vec& a, const Vec& b) { return a.dot(b) / op.size(); }

// Rows of the Galerkin system scale like the lumped mass; equilibrate before
// factorizing.
inline Vec solve_scaled(Mat Aug, Vec rhs, const Vec& W) {
  for (int i = 0; i < W.size(); ++i) {
    Aug.row(i) /= W[i];
    rhs[i] /= W[i];
  }
  return Aug.partialPivLu().solve(rhs);
}

// Unit tangent at (u, λ), oriented along `prev` (or increasing λ).
inline void tangent(const DiscreteOperator& op, const Nonlinearity& f, ArcPoint& pt,
                    const ArcPoint* prev) {
  const int m = op.size();
  const Mat J = op.A - pt.lambda * op.reaction(f.df, pt.u);
  const Vec Fl = -op.load(f.f, pt.u);
  // Bordered system [J Fl; cᵀ] τ = [0; 1] with c the previous tangent.
  Mat Aug = Mat::Zero(m + 1, m + 1);
  Aug.topLeftCorner(m, m) = J;
  Aug.topRightCorner(m, 1) = Fl;
  if (prev) {
    Aug.bottomLeftCorner(1, m) = prev->tu.transpose() / m;
    Aug(m, m) = prev->tl;
  } else {
    Aug(m, m) = 1.0;
  }
  Vec rhs = Vec::Zero(m + 1);
  rhs[m] = 1.0;
  const Vec t = solve_scaled(Aug, rhs, op.W);
  Vec tu = t.head(m);
  double tl = t[m];
  const double nrm = std::sqrt(wdot(op, tu, tu) + tl * tl);
  tu /= nrm;
  tl /= nrm;
  const double orient = prev ? wdot(op, tu, prev->tu) + tl * prev->tl : tl;
  if (orient < 0.0) {
    tu = -tu;
    tl = -tl;
  }
  pt.tu = tu;
  pt.tl = tl;
}

// Predictor-corrector step of arclength ds from `from`.
inline std::optional<ArcPoint> arc_step(const DiscreteOperator& op, const Nonlinearity& f,
                                        const ArcPoint& from, double ds, int& iters) {
  const int m = op.size();
  ArcPoint pt;
  pt.u = from.u + ds * from.tu;
  pt.lambda = from.lambda + ds * from.tl;
  const Vec up = pt.u;
  const double lp = pt.lambda;
  for (int it = 0; it < 25; ++it) {
    iters = it;
    Vec F(m + 1);
    Mat Aug = Mat::Zero(m + 1, m + 1);
    const Vec b = op.load(f.f, pt.u);
    Aug.topLeftCorner(m, m) = op.A - pt.lambda * op.reaction(f.df, pt.u);
    Aug.topRightCorner(m, 1) = -b;
    F.head(m) = op.A * pt.u - pt.lambda * b;
    F[m] = wdot(op, from.tu, pt.u - up) + from.tl * (pt.lambda - lp);
    Aug.bottomLeftCorner(1, m) = from.tu.transpose() / m;
    Aug(m, m) = from.tl;
    if (!F.allFinite()) return std::nullopt;
    double floor = 0.0;
    const double res = residual_inf(op, f, pt.lambda, pt.u, &floor);
    if (res <= std::max(1e-10 * (1.0 + std::abs(pt.lambda)), floor) && std::abs(F[m]) <= 1e-12) {
      if (pt.lambda < 0.0) return std::nullopt;
      return pt;
    }
    const Vec d = solve_scaled(Aug, -F, op.W);
    if (!d.allFinite()) return std::nullopt;
    pt.u += d.head(m);
    pt.lambda += d[m];
    // Accept once the update is negligible; the residual can sit at its
    // roundoff floor on strongly graded grids.
    if (d.head(m).lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + pt.u.lpNorm<Eigen::Infinity>()) &&
        std::abs(d[m]) <= 1e-13 * (1.0 + std::abs(pt.lambda))) {
      double fl = 0.0;
      const double r = residual_inf(op, f, pt.lambda, pt.u, &fl);
      if (r <= std::max(1e-10 * (1.0 + std::abs(pt.lambda)), fl)) return pt;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Pseudo-arclength continuation of the minimal branch from (λ, u) = (0, 0).
/// Stops at the fold (first sign change of the λ-tangent), at λ_max, or on
/// step underflow. Only points before the fold are recorded.
inline Branch continue_branch(const DiscreteOperator& op, const Nonlinearity& f,
                              const ContinuationControls& ctl = {}) {
  f.validate();
  if (!(ctl.initial_step > 0.0) || !(ctl.min_step > 0.0))
    throw DomainError("continue_branch: steps must be positive");
  Branch br;
  auto record = [&](const detail::ArcPoint& pt, double arc, std::optional<double> guess) {
    BranchPoint bp;
    bp.lambda = pt.lambda;
    bp.state = op.state(pt.u);
    bp.sup_norm = pt.u.size() ? pt.u.maxCoeff() : 0.0;
    bp.mu1 = principal_eigenpair(op, f, pt.lambda, pt.u, guess).mu;
    bp.arclength = arc;
    br.points.push_back(std::move(bp));
  };

  detail::ArcPoint cur;
  cur.u = Vec::Zero(op.size());
  cur.lambda = 0.0;
  detail::tangent(op, f, cur, nullptr);
  double arc = 0.0;
  record(cur, arc, std::nullopt);
  if (ctl.lambda_max <= 0.0) return br;

  double ds = ctl.initial_step;
  while (static_cast<int>(br.points.size()) < ctl.max_points) {
    int iters = 0;
    auto next = detail::arc_step(op, f, cur, ds, iters);
    if (!next) {
      ds *= 0.5;
      if (ds < ctl.min_step) return br;  // step underflow before a fold
      continue;
    }
    detail::tangent(op, f, *next, &cur);

    if (next->lambda >= ctl.lambda_max && next->tl > 0.0) {
      // Land exactly on λ_max by a natural-parameter solve.
      auto last = newton_solve(op, f, ctl.lambda_max, cur.u + (ctl.lambda_max - cur.lambda) / cur.tl * cur.tu);
      if (last.converged) {
        detail::ArcPoint end;
        end.u = last.u;
        end.lambda = ctl.lambda_max;
        const Vec du = end.u - cur.u;
        record(end, arc + std::sqrt(detail::wdot(op, du, du) +
                                    (end.lambda - cur.lambda) * (end.lambda - cur.lambda)),
               br.points.back().mu1);
        return br;
      }
      ds *= 0.5;
      if (ds < ctl.min_step) return br;
      continue;
    }

    if (next->tl <= 0.0) {
      // Fold between cur (tl > 0) and next: bisect the arclength.
      double lo = 0.0, hi = ds;
      detail::ArcPoint best = cur;
      while (hi - lo > ctl.fold_tol) {
        const double mid = 0.5 * (lo + hi);
        int it2 = 0;
        auto trial = detail::arc_step(op, f, cur, mid, it2);
        if (!trial) {
          hi = mid;
          continue;
        }
        detail::tangent(op, f, *trial, &cur);
        if (trial->tl > 0.0) {
          lo = mid;
          best = *trial;
        } else {
          hi = mid;
        }
      }
      br.fold_found = true;
      br.lambda_star = best.lambda;
      if (lo > 0.0) record(best, arc + lo, br.points.back().mu1);
      return br;
    }

    const Vec du = next->u - cur.u;
    arc += std::sqrt(detail::wdot(op, du, du) + (next->lambda - cur.lambda) * (next->lambda - cur.lambda));
    cur = *next;
    record(cur, arc, br.points.back().mu1);
    if (iters <= 3) ds = std::min(ds * 1.5, ctl.max_step);
    else if (iters > 6) ds *= 0.7;
  }
  return br;
}

}  // namespace fracstab
