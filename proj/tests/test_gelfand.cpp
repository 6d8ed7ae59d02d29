#include <gtest/gtest.h>

#include <random>

#include "fracstab/fractional_laplacian.hpp"
#include "fracstab/gelfand.hpp"

using namespace fracstab;

namespace {

const DiscreteOperator& coarse_op() {
  static const DiscreteOperator op = assemble(make_params(2, 0.5), 40);
  return op;
}

Vec to_vec(const RadialFunction& f, int m) {
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = f.values()[i];
  return v;
}

}  // namespace

TEST(Assemble, SymmetricPositiveDefiniteAndKillsZero) {
  const auto& op = coarse_op();
  EXPECT_EQ(op.A, op.A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(op.A);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_EQ(op.apply(Vec::Zero(op.size())).norm(), 0.0);
  const Vec ones = op.apply(Vec::Ones(op.size()));
  EXPECT_GT(ones.minCoeff(), 0.0);
}

TEST(Assemble, RejectsBadGrids) {
  auto g = graded_grid(20);
  auto dup = g;
  dup[5] = dup[4];
  EXPECT_THROW(assemble(make_params(2, 0.5), dup), DomainError);
  EXPECT_THROW(assemble(make_params(1, 0.5), g), DomainError);
  auto short_grid = g;
  short_grid.back() = 0.99;
  EXPECT_THROW(assemble(make_params(2, 0.5), short_grid), DomainError);
}

TEST(Assemble, GetoorProfileIsConstantInside) {
  for (auto [n, s] : {std::pair{2, 0.5}, std::pair{3, 0.25}, std::pair{5, 0.4}}) {
    const Params p = make_params(n, s);
    const auto op = assemble(p, 40);
    const Vec L = op.apply(op.restrict(getoor_trace(s)));
    double mean = 0.0, var = 0.0;
    int cnt = 0;
    for (int i = 0; i < op.size(); ++i)
      if (op.grid[i] <= 0.5) {
        mean += L[i];
        ++cnt;
      }
    mean /= cnt;
    for (int i = 0; i < op.size(); ++i)
      if (op.grid[i] <= 0.5) var += (L[i] - mean) * (L[i] - mean);
    EXPECT_LT(std::sqrt(var / cnt) / mean, 1e-2) << n << " " << s;
    const double oracle = fractional_laplacian(getoor_trace(s), p, 0.0);
    EXPECT_NEAR(L[0] / oracle, 1.0, 1e-2) << n << " " << s;
  }
}

// For s > 1/2 the operator applied to an interpolant converges slowly at the
// kinks, but the discrete solution of the Getoor problem converges fast.
TEST(Assemble, GetoorSolveConvergesForLargeOrders) {
  for (auto [n, s] : {std::pair{3, 0.75}, std::pair{4, 0.8}}) {
    const Params p = make_params(n, s);
    double prev = 0.0;
    for (int M : {40, 80}) {
      const auto op = assemble(p, M);
      const Vec v = op.A.ldlt().solve(op.W * getoor_constant(p));
      const double err = (v - op.restrict(getoor_trace(s))).lpNorm<Eigen::Infinity>();
      EXPECT_LT(err, 2e-3);
      if (M == 80) EXPECT_LT(err, 0.5 * prev);
      prev = err;
    }
  }
}

TEST(Assemble, DiscreteComparisonPrinciple) {
  const auto& op = coarse_op();
  const Eigen::LDLT<Mat> ldlt(op.A);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec h(op.size());
    for (int i = 0; i < h.size(); ++i) h[i] = trial % 2 ? U(rng) : (U(rng) < 0.2 ? U(rng) : 0.0);
    const Vec u = ldlt.solve(op.W.cwiseProduct(h));
    EXPECT_GE(u.minCoeff(), -1e-12);
  }
}

TEST(Newton, TrivialAtZeroLambda) {
  const auto& op = coarse_op();
  const auto r = newton_solve(op, Nonlinearity::exponential(), 0.0, Vec::Ones(op.size()));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.u.norm(), 0.0);
}

TEST(Newton, SecondOrderSmallLambda) {
  const auto& op = coarse_op();
  const Vec lin = op.A.ldlt().solve(op.W);
  double err[2];
  int k = 0;
  for (double lam : {1e-3, 1e-4}) {
    const auto r = newton_solve(op, Nonlinearity::exponential(), lam, Vec::Zero(op.size()));
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.residual, std::max(1e-10 * (1 + lam), r.floor));
    err[k++] = (r.u - lam * lin).lpNorm<Eigen::Infinity>();
  }
  EXPECT_NEAR(err[0] / err[1], 100.0, 5.0);
}

TEST(Newton, RejectsInvalidInput) {
  const auto& op = coarse_op();
  EXPECT_THROW(newton_solve(op, Nonlinearity::exponential(), -1.0, Vec::Zero(op.size())), DomainError);
  auto bad = Nonlinearity::exponential();
  bad.nondecreasing = false;
  EXPECT_THROW(newton_solve(op, bad, 0.1, Vec::Zero(op.size())), DomainError);
  const Nonlinearity vanishing{"u^2", [](double u) { return u * u; }, [](double u) { return 2 * u; }, true};
  EXPECT_THROW(newton_solve(op, vanishing, 0.1, Vec::Zero(op.size())), DomainError);
}

TEST(Continuation, LinearProblemIsLinear) {
  const auto& op = coarse_op();
  ContinuationControls c;
  c.lambda_max = 3.0;
  const auto br = continue_branch(op, Nonlinearity::constant(), c);
  EXPECT_FALSE(br.fold_found);
  ASSERT_GE(br.points.size(), 3u);
  EXPECT_DOUBLE_EQ(br.points.back().lambda, 3.0);
  const Vec lin = op.A.ldlt().solve(op.W);
  for (const auto& pt : br.points) {
    const Vec u = to_vec(pt.state, op.size());
    EXPECT_LT((u - pt.lambda * lin).lpNorm<Eigen::Infinity>(), 1e-9 * (1 + pt.lambda));
  }
}

TEST(Continuation, ZeroLambdaMaxGivesTrivialPoint) {
  ContinuationControls c;
  c.lambda_max = 0.0;
  const auto br = continue_branch(coarse_op(), Nonlinearity::exponential(), c);
  ASSERT_EQ(br.points.size(), 1u);
  EXPECT_EQ(br.points[0].lambda, 0.0);
  EXPECT_EQ(br.points[0].sup_norm, 0.0);
}

TEST(Continuation, ExponentialBranchHasStableMinimalPart) {
  const auto& op = coarse_op();
  const auto f = Nonlinearity::exponential();
  const auto br = continue_branch(op, f);
  ASSERT_TRUE(br.fold_found);
  const auto& pts = br.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_GT(pts[i].mu1, -1e-8);
    EXPECT_TRUE(monotonicity_check(pts[i].state));
    if (i > 0) {
      EXPECT_GT(pts[i].lambda, pts[i - 1].lambda);
      EXPECT_GT(pts[i].sup_norm, pts[i - 1].sup_norm);
      EXPECT_LT(pts[i].mu1, pts[i - 1].mu1);
    }
  }
  EXPECT_LE(pts.back().mu1, 1e-2 * pts.front().mu1);

  ContinuationControls c;
  c.initial_step = 0.013;
  const auto br2 = continue_branch(op, f, c);
  ASSERT_TRUE(br2.fold_found);
  EXPECT_NEAR(br.lambda_star, br2.lambda_star, 1e-8);

  // No solution just above the fold.
  const auto r = newton_solve(op, f, 1.001 * br.lambda_star, to_vec(pts.back().state, op.size()));
  EXPECT_FALSE(r.converged);
}

TEST(Continuation, FoldUnderStepRefinement) {
  const auto& op = coarse_op();
  ContinuationControls a, b;
  b.initial_step = a.initial_step / 2;
  b.max_step = a.max_step / 2;
  const auto ba = continue_branch(op, Nonlinearity::exponential(), a);
  const auto bb = continue_branch(op, Nonlinearity::exponential(), b);
  EXPECT_NEAR(ba.lambda_star / bb.lambda_star, 1.0, 1e-8);
}

TEST(Eigen, MatchesDenseOracle) {
  const auto& op = coarse_op();
  const auto f = Nonlinearity::exponential();
  for (double lam : {0.0, 0.3, 0.6}) {
    const auto r = newton_solve(op, f, lam, Vec::Zero(op.size()));
    ASSERT_TRUE(r.converged);
    const Mat J = op.A - lam * op.reaction(f.df, r.u);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(J, op.Mc);
    const auto e = principal_eigenpair(op, f, lam, r.u);
    EXPECT_NEAR(e.mu, es.eigenvalues()[0], 1e-10 * std::max(1.0, std::abs(e.mu)));
    EXPECT_NEAR(op.l2dot(e.xi, e.xi), 1.0, 1e-12);
    EXPECT_LT((J * e.xi - e.mu * op.Mc * e.xi).norm(), 1e-9 * J.norm());
  }
}

TEST(Eigen, DirichletEigenvalueOfTheDisk) {
  // First Dirichlet eigenvalue of (-Δ)^{1/2} on the unit disk, about 2.0061;
  // Galerkin values approach it from above.
  double prev = std::numeric_limits<double>::infinity();
  for (int M : {40, 80}) {
    const auto op = assemble(make_params(2, 0.5), M);
    const double mu = principal_eigenvalue(op, Nonlinearity::exponential(), 0.0, Vec::Zero(op.size()));
    EXPECT_NEAR(mu, 2.0061, 1e-3);
    EXPECT_LT(mu, prev);
    prev = mu;
  }
}

TEST(Eigen, SmallOrdersStayStableAlongTheMinimalBranch) {
  // A lumped reaction term produces spurious oscillatory modes when s is
  // small; the consistent treatment must keep μ₁ positive up to the fold.
  const auto op = assemble(make_params(10, 0.1), 40);
  const auto br = continue_branch(op, Nonlinearity::exponential());
  ASSERT_TRUE(br.fold_found);
  for (std::size_t i = 0; i < br.points.size(); ++i) {
    EXPECT_GT(br.points[i].mu1, -1e-8);
    if (i > 0) EXPECT_GT(br.points[i].lambda, br.points[i - 1].lambda);
  }
  EXPECT_LT(br.points.back().mu1, 1e-2 * br.points.front().mu1);
}

TEST(Assemble, ReactionQuadratureIsConsistent) {
  const auto& op = coarse_op();
  const Vec one = Vec::Ones(op.size());
  EXPECT_LT((op.load([](double) { return 1.0; }, one) - op.W).norm(), 1e-14 * op.W.norm());
  EXPECT_LT((op.reaction([](double) { return 1.0; }, one) - op.Mc).norm(), 1e-14 * op.Mc.norm());
  // Integrating u_h against the hats reproduces M u.
  Vec u(op.size());
  for (int i = 0; i < u.size(); ++i) u[i] = std::cos(op.grid[i]);
  EXPECT_LT((op.load([](double x) { return x; }, u) - op.Mc * u).norm(), 1e-13 * (op.Mc * u).norm());
}

TEST(BoundaryExponent, ClosedForms) {
  const auto g = graded_grid(160);
  for (double s : {0.25, 0.5, 0.75}) {
    const auto u = RadialFunction::sample(g, [&](double r) { return getoor_trace(s).value(r); });
    EXPECT_NEAR(boundary_exponent(u), s, 1e-3);
  }
  const auto par = RadialFunction::sample(g, [](double r) { return 1 - r * r; });
  EXPECT_NEAR(boundary_exponent(par), 1.0, 1e-3);
  const RadialFunction tiny({0.0, 0.5, 1.0}, {1.0, 0.5, 0.0});
  EXPECT_THROW(boundary_exponent(tiny), AccuracyError);
}

TEST(Monotonicity, DetectsInversions) {
  const auto g = graded_grid(20);
  const auto zero = RadialFunction::sample(g, [](double) { return 0.0; });
  EXPECT_TRUE(monotonicity_check(zero));
  auto u = RadialFunction::sample(g, [](double r) { return 1 - r * r; });
  EXPECT_TRUE(monotonicity_check(u));
  u.values()[7] = u.values()[6] + 1e-3;
  EXPECT_FALSE(monotonicity_check(u));
}
