#pragma once

// Acceptance checks shared by the test binary and the `verify` command. Each
// check reports the measured quantity against its tolerance and runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracstab/extension.hpp"
#include "fracstab/flux_identity.hpp"
#include "fracstab/fractional_laplacian.hpp"
#include "fracstab/gelfand.hpp"
#include "fracstab/regimes.hpp"
#include "fracstab/stability.hpp"

namespace fracstab::acceptance {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;   ///< worst observed value of the checked quantity
  double required = 0.0;   ///< tolerance it is compared against
  double seconds = 0.0;
  double time_limit = 0.0;
  std::string detail;
};

/// Deliberate corruptions used to confirm that checks can fail.
struct Faults {
  double ds_scale = 1.0;  ///< multiplies d_s wherever the checks use it
};

enum class Tier { Fast, Full };

/// Continuation runs reused by several checks.
struct BranchArtifacts {
  struct Run {
    DiscreteOperator op;
    Branch branch;
  };
  Run coarse;  ///< (2, 0.5), M = 80
  Run fine;    ///< (2, 0.5), M = 160
  Run order3;  ///< (3, 0.75), M = 160
};

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline BranchArtifacts::Run run_branch(int n, double s, int M) {
  BranchArtifacts::Run r{assemble(make_params(n, s), M), {}};
  r.branch = continue_branch(r.op, Nonlinearity::exponential());
  return r;
}

// Minimal-branch state at λ by Newton from the nearest branch point below.
inline NewtonResult state_at(const BranchArtifacts::Run& run, double lambda) {
  const auto& pts = run.branch.points;
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].lambda <= lambda) k = i;
  Vec init(run.op.size());
  for (int i = 0; i < run.op.size(); ++i) init[i] = pts[k].state.values()[i];
  return newton_solve(run.op, Nonlinearity::exponential(), lambda, init);
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

class Suite {
 public:
  explicit Suite(Faults faults = {}) : faults_(faults) {}

  const BranchArtifacts& branches() {
    if (!branches_) {
      branches_ = std::make_unique<BranchArtifacts>();
      branches_->coarse = detail::run_branch(2, 0.5, 80);
      branches_->fine = detail::run_branch(2, 0.5, 160);
      branches_->order3 = detail::run_branch(3, 0.75, 160);
    }
    return *branches_;
  }

  // 1. Radial thresholds.
  CheckResult radial_thresholds() {
    return timed(1, "radial critical orders", 1.0, 1e-5, [&](CheckResult& r) {
      const double ref[3] = {0.050510, 0.354248, 0.671572};
      double worst = 0.0;
      bool labels = true;
      for (int n = 7; n <= 9; ++n) {
        const auto t = critical_s_radial(n);
        labels = labels && t.kind == Threshold::Kind::Crossing;
        worst = std::max(worst, std::abs(t.s - ref[n - 7]));
      }
      for (int n = 2; n <= 6; ++n) labels = labels && critical_s_radial(n).kind == Threshold::Kind::AllOrders;
      for (int n = 10; n <= 20; ++n) labels = labels && critical_s_radial(n).kind == Threshold::Kind::NoOrder;
      r.measured = worst;
      r.passed = labels && worst <= r.required;
      r.detail = labels ? "all/none labels correct" : "wrong all/none label";
    });
  }

  // 2. Gamma-condition threshold in dimension 9.
  CheckResult gelfand_threshold() {
    return timed(2, "Gelfand critical order n=9", 1.0, 1e-4, [&](CheckResult& r) {
      const auto t = critical_s_gelfand(9);
      r.measured = t.kind == Threshold::Kind::Crossing ? std::abs(t.s - 0.63237) : 1.0;
      r.passed = r.measured <= r.required;
      r.detail = "s* = " + detail::fmt(t.s);
    });
  }

  // 3. Poisson kernel mass.
  CheckResult poisson_mass_grid() {
    return timed(3, "Poisson kernel mass", 30.0, 1e-6, [&](CheckResult& r) {
      double worst = 0.0;
      for (int n = 1; n <= 10; ++n)
        for (int k = 1; k <= 9; ++k)
          for (double y : {0.1, 1.0, 10.0})
            worst = std::max(worst, std::abs(poisson_mass(make_params(n, 0.1 * k), y) - 1.0));
      r.measured = worst;
      r.passed = worst <= r.required;
      r.detail = "n=1..10, s=0.1..0.9, y in {0.1,1,10}";
    });
  }

  // 4. Dirichlet-to-Neumann closure.
  CheckResult dirichlet_to_neumann() {
    return timed(4, "Dirichlet-to-Neumann closure", 120.0, 1e-3, [&](CheckResult& r) {
      double worst_limit = 0.0, worst_conj = 0.0;
      const auto u = bump_trace();
      for (auto [n, s] : {std::pair{2, 0.5}, std::pair{3, 0.25}, std::pair{3, 0.75}}) {
        const Params p = make_params(n, s);
        const double ds = normalizations(p).d_s * faults_.ds_scale;
        const ExtensionField<AnalyticTrace> field(u, p);
        const FluxProfile tab = tabulate_flux(u, p);
        for (double rho : {0.1, 0.25, 0.4, 0.55, 0.7}) {
          const double h = fractional_laplacian(u, p, rho);
          // -y^a v_y = h/d_s + c1 y^{2-2s} + c2 y² + c3 y^{4-2s}.
          const double ys[4] = {0.05, 0.025, 0.0125, 0.00625};
          Eigen::Matrix4d A;
          Eigen::Vector4d b;
          for (int i = 0; i < 4; ++i) {
            const double y = ys[i];
            A.row(i) << 1.0, std::pow(y, 2.0 - 2.0 * s), y * y, std::pow(y, 4.0 - 2.0 * s);
            b[i] = -std::pow(y, p.a()) * field.gradient(rho, y).v_y;
          }
          const double limit = A.colPivHouseholderQr().solve(b)[0];
          worst_limit = std::max(worst_limit, std::abs(limit * ds / h - 1.0));
          // The conjugate formula carries 1/d_s; compare with the Poisson side.
          const double conj = vy_from_flux(tab, p, rho, 0.1) * normalizations(p).d_s / ds;
          const double pois = -field.gradient(rho, 0.1).v_y;
          worst_conj = std::max(worst_conj, std::abs(conj / pois - 1.0));
        }
      }
      r.measured = std::max(worst_limit, worst_conj);
      r.passed = r.measured <= r.required;
      r.detail = "limit route " + detail::fmt(worst_limit) + ", conjugate route " + detail::fmt(worst_conj);
    });
  }

  // 5. Flux constant, its Monte Carlo oracle and the integration by parts.
  CheckResult flux_constant() {
    return timed(5, "flux constant and identity", 600.0, 1e-3, [&](CheckResult& r) {
      bool inside = true;
      int cells = 0, skipped = 0;
      for (int n = 2; n <= 10; ++n)
        for (int k = 1; k <= 9; ++k)
          for (double frac : {0.25, 0.5, 0.75}) {
            const double s = 0.1 * k;
            const double beta = frac * (n + 2.0 - 2.0 * s);
            // The constant is below one exactly when β < n.
            if (!(beta < n)) {
              ++skipped;
              continue;
            }
            const double A = magic_constant(FluxConstantQuery{make_params(n, s), beta});
            inside = inside && A > 0.0 && A < 1.0;
            ++cells;
          }
      struct Spot {
        int n;
        double s, beta;
      };
      double worst_mc = 0.0;  // |A - mc| / max(1% A, 3σ)
      for (Spot t : {Spot{2, 0.5, 1.0}, Spot{3, 0.25, 2.0}, Spot{5, 0.5, 2.0}, Spot{10, 0.9, 3.0},
                     Spot{4, 0.1, 1.5}, Spot{7, 0.7, 0.5}}) {
        const FluxConstantQuery q{make_params(t.n, t.s), t.beta};
        const double A = magic_constant(q);
        const auto mc = magic_constant_mc(q, 42);
        worst_mc = std::max(worst_mc, std::abs(A - mc.mean) / std::max(0.01 * A, 3.0 * mc.stderr_));
      }
      const Params p = make_params(2, 0.5);
      const auto m = flux_moments(gaussian_trace(), p, 1.0);
      const double lhs = m.horizontal + m.vertical;
      const double ibp = std::abs(lhs + m.trace) / (std::abs(lhs) + std::abs(m.trace));
      const double A = magic_constant(FluxConstantQuery{p, 1.0});
      const double mom = std::abs(-m.vertical - A * m.trace) / std::max(std::abs(m.vertical), std::abs(A * m.trace));
      r.measured = std::max(ibp, mom);
      r.passed = inside && worst_mc <= 1.0 && r.measured <= r.required && -m.horizontal > 0.0;
      r.detail = std::to_string(cells) + " cells in (0,1): " + (inside ? "yes" : "no") + " (" +
                 std::to_string(skipped) + " cells with beta >= n skipped), MC ratio " +
                 detail::fmt(worst_mc) + ", ibp " + detail::fmt(ibp) + ", moment " + detail::fmt(mom) +
                 ", horizontal term " + detail::fmt(-m.horizontal);
    });
  }

  // 6. Getoor constancy of the discrete operator.
  CheckResult getoor_constancy() {
    return timed(6, "discrete Getoor constancy", 300.0, 1e-2, [&](CheckResult& r) {
      const Params p = make_params(2, 0.5);
      const double oracle = fractional_laplacian(getoor_trace(0.5), p, 0.0);
      double worst_cv = 0.0, worst_val = 0.0;
      std::vector<double> errs;
      for (int M : {40, 80, 160}) {
        const auto op = assemble(p, M);
        const Vec L = op.apply(op.restrict(getoor_trace(0.5)));
        double mean = 0.0, var = 0.0, err = 0.0;
        int cnt = 0;
        for (int i = 0; i < op.size(); ++i)
          if (op.grid[i] <= 0.5) {
            mean += L[i];
            ++cnt;
            err = std::max(err, std::abs(L[i] / oracle - 1.0));
          }
        mean /= cnt;
        for (int i = 0; i < op.size(); ++i)
          if (op.grid[i] <= 0.5) var += (L[i] - mean) * (L[i] - mean);
        worst_cv = std::max(worst_cv, std::sqrt(var / cnt) / mean);
        worst_val = std::max(worst_val, std::abs(L[0] / oracle - 1.0));
        errs.push_back(err);
      }
      const double order = std::min(std::log2(errs[0] / errs[1]), std::log2(errs[1] / errs[2]));
      r.measured = std::max(worst_cv, worst_val);
      r.passed = r.measured <= r.required && order >= 1.0;
      r.detail = "cv " + detail::fmt(worst_cv) + ", value at 0 " + detail::fmt(worst_val) +
                 ", refinement order " + detail::fmt(order);
    });
  }

  // 7. Exponential branch.
  CheckResult gelfand_branch() {
    return timed(7, "exponential branch and fold", 600.0, 1e-2, [&](CheckResult& r) {
      const auto& b = branches();
      bool ok = b.coarse.branch.fold_found && b.fine.branch.fold_found;
      double min_mu = std::numeric_limits<double>::infinity();
      for (const auto* run : {&b.coarse, &b.fine}) {
        const auto& pts = run->branch.points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          min_mu = std::min(min_mu, pts[i].mu1);
          if (i > 0) {
            ok = ok && pts[i].sup_norm > pts[i - 1].sup_norm;
            ok = ok && pts[i].mu1 < pts[i - 1].mu1 + 1e-10;
          }
        }
      }
      ok = ok && min_mu > -1e-8;
      r.measured = std::abs(b.fine.branch.lambda_star / b.coarse.branch.lambda_star - 1.0);
      r.passed = ok && r.measured <= r.required;
      r.detail = "lambda* " + detail::fmt(b.coarse.branch.lambda_star) + " (M=80), " +
                 detail::fmt(b.fine.branch.lambda_star) + " (M=160), min mu1 " + detail::fmt(min_mu);
    });
  }

  // 8. Boundary behaviour near the fold.
  CheckResult boundary_exponents() {
    return timed(8, "boundary exponent at 0.9 lambda*", 600.0, 0.15, [&](CheckResult& r) {
      const auto& b = branches();
      double worst = 0.0;
      std::string d;
      for (auto [run, s] : {std::pair{&b.fine, 0.5}, std::pair{&b.order3, 0.75}}) {
        const auto st = detail::state_at(*run, 0.9 * run->branch.lambda_star);
        if (!st.converged) throw AccuracyError("state at 0.9 lambda* did not converge", st.residual, 1e-10);
        const double e = boundary_exponent(run->op.state(st.u));
        worst = std::max(worst, std::abs(e / s - 1.0));
        d += "s=" + detail::fmt(s) + ": " + detail::fmt(e) + " ";
      }
      r.measured = worst;
      r.passed = worst <= r.required;
      r.detail = d;
    });
  }

  // 9. L^p norms of e^u along the branch.
  CheckResult lp_norms() {
    return timed(9, "Lp sweep alpha=1.5", 120.0, 1e-2, [&](CheckResult& r) {
      const auto& b = branches();
      const double lstar = std::min(b.coarse.branch.lambda_star, b.fine.branch.lambda_star);
      auto sweep = [&](const BranchArtifacts::Run& run) {
        Branch fixed;
        for (double f : {0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95}) {
          const auto st = detail::state_at(run, f * lstar);
          if (!st.converged) throw AccuracyError("lp sweep state did not converge", st.residual, 1e-10);
          BranchPoint bp;
          bp.lambda = f * lstar;
          bp.state = run.op.state(st.u);
          fixed.points.push_back(bp);
        }
        return lp_sweep(fixed, 2, 1.5);
      };
      const auto a = sweep(b.coarse), c = sweep(b.fine);
      double worst = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < a.rows.size(); ++i) {
        finite = finite && std::isfinite(a.rows[i].norm) && std::isfinite(c.rows[i].norm);
        worst = std::max(worst, std::abs(c.rows[i].norm / a.rows[i].norm - 1.0));
      }
      const double full = lp_sweep(b.fine.branch, 2, 1.5).sup;
      const double zero = std::abs(c.rows[0].norm - std::pow(ball_volume(2), 0.25));
      r.measured = worst;
      r.passed = finite && worst <= r.required && zero <= 1e-6 && std::isfinite(full);
      r.detail = "lambda=0 entry error " + detail::fmt(zero) + ", branch sup " + detail::fmt(full);
    });
  }

  // 10. Weighted Dirichlet integral on the Getoor state.
  CheckResult weighted_dirichlet_getoor() {
    return timed(10, "weighted Dirichlet integral", 300.0, 1e-2, [&](CheckResult& r) {
      const Params p = make_params(3, 0.5);
      const auto g = graded_grid(40);
      const auto u = RadialFunction::sample(g, [](double x) { return getoor_trace(0.5).value(x); });
      const ExtensionField<RadialFunction> ext(u, p);
      const auto w = weighted_dirichlet(WeightedDirichletQuery{u, 1.0}, ext);
      const auto op = assemble(p, g);
      const double ratio = w.value / op.seminorm2(op.restrict(u));
      r.measured = w.change;
      r.passed = w.converged && std::isfinite(ratio) && ratio > 0.0;
      r.detail = "value " + detail::fmt(w.value) + ", ratio to seminorm " + detail::fmt(ratio);
    });
  }

  // 11. Monotone states and eigenvalue oracle.
  CheckResult monotone_and_eigen() {
    return timed(11, "monotone states and eigenvalue oracle", 60.0, 1e-10, [&](CheckResult& r) {
      const auto& b = branches();
      bool mono = true;
      for (const auto* run : {&b.coarse, &b.fine})
        for (const auto& pt : run->branch.points) mono = mono && monotonicity_check(pt.state);
      const auto run = detail::run_branch(2, 0.5, 40);
      const auto f = Nonlinearity::exponential();
      double worst = 0.0;
      for (const auto& pt : run.branch.points) {
        const Vec u = run.op.restrict(pt.state);
        const Mat S = run.op.A - pt.lambda * run.op.reaction(f.df, u);
        const double dense =
            Eigen::GeneralizedSelfAdjointEigenSolver<Mat>(S, run.op.Mc, Eigen::EigenvaluesOnly).eigenvalues()[0];
        worst = std::max(worst, std::abs(pt.mu1 - dense) / std::max(1.0, std::abs(dense)));
      }
      r.measured = worst;
      r.passed = mono && worst <= r.required;
      r.detail = std::string("monotone: ") + (mono ? "yes" : "no");
    });
  }

  std::vector<CheckResult> run(Tier tier, const std::function<void(const CheckResult&)>& on_result = {}) {
    std::vector<std::function<CheckResult()>> checks = {
        [&] { return radial_thresholds(); },   [&] { return gelfand_threshold(); },
        [&] { return poisson_mass_grid(); },   [&] { return dirichlet_to_neumann(); },
        [&] { return flux_constant(); },       [&] { return getoor_constancy(); },
        [&] { return gelfand_branch(); },      [&] { return boundary_exponents(); },
        [&] { return lp_norms(); },            [&] { return weighted_dirichlet_getoor(); },
        [&] { return monotone_and_eigen(); }};
    std::vector<CheckResult> out;
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      if (tier == Tier::Fast && (id == 5 || id == 10)) continue;
      out.push_back(checks[i]());
      if (on_result) on_result(out.back());
    }
    return out;
  }

 private:
  template <class Body>
  CheckResult timed(int id, std::string name, double limit, double required, Body&& body) {
    CheckResult r;
    r.id = id;
    r.name = std::move(name);
    r.required = required;
    r.time_limit = limit;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = detail::elapsed(t0);
    // Shared branch runs are charged to the first check that needs them.
    if (r.seconds > r.time_limit) {
      r.passed = false;
      r.detail += " (runtime limit exceeded)";
    }
    return r;
  }

  Faults faults_;
  std::unique_ptr<BranchArtifacts> branches_;
};

}  // namespace fracstab::acceptance
