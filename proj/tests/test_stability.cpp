#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fracstab/stability.hpp"

using namespace fracstab;

namespace {
Vec interior(const RadialFunction& u) {
  Vec v(static_cast<int>(u.size()) - 1);
  for (int i = 0; i < v.size(); ++i) v[i] = u.values()[i];
  return v;
}
}  // namespace

TEST(StabilityForm, EqualsEigenvalueOnEigenvector) {
  const auto op = assemble(make_params(2, 0.5), 40);
  const auto f = Nonlinearity::exponential();
  const auto br = continue_branch(op, f);
  ASSERT_GE(br.points.size(), 3u);
  for (const auto& pt : {br.points.front(), br.points[br.points.size() / 2], br.points.back()}) {
    const auto e = principal_eigenpair(op, f, pt.lambda, interior(pt.state));
    EXPECT_NEAR(stability_form(op, f, pt, e.xi), e.mu, 1e-9 * std::max(1.0, std::abs(e.mu)));
    EXPECT_GE(stability_form(op, f, pt, Vec::Ones(op.size())), -1e-9);
  }
  EXPECT_THROW(stability_form(op, f, br.points.front(), Vec::Ones(op.size() + 1)), DomainError);
}

TEST(StabilityForm, QuadraticInTheDirection) {
  const auto op = assemble(make_params(3, 0.3), 40);
  const auto f = Nonlinearity::power(3.0);
  BranchPoint pt;
  pt.lambda = 0.7;
  pt.state = op.state(Vec::Constant(op.size(), 0.5));
  Vec xi(op.size());
  for (int i = 0; i < xi.size(); ++i) xi[i] = 1.0 - op.grid[i] * op.grid[i];
  EXPECT_NEAR(stability_form(op, f, pt, 2.0 * xi), 4.0 * stability_form(op, f, pt, xi), 1e-10);
}

TEST(WeightedDirichlet, ZeroAndScaling) {
  const auto p = make_params(3, 0.5);
  const auto g = graded_grid(8);
  const auto u = RadialFunction::sample(g, [](double x) { return 1.0 - x * x; });
  const auto twice = u.scaled(2.0);
  const ExtensionField eu(u, p), e2(twice, p);
  const auto a = weighted_dirichlet(WeightedDirichletQuery{u, 1.0}, eu);
  const auto b = weighted_dirichlet(WeightedDirichletQuery{twice, 1.0}, e2);
  EXPECT_TRUE(a.converged);
  EXPECT_GT(a.value, 0.0);
  EXPECT_LE(a.change, 1e-2);
  EXPECT_NEAR(b.value, 4.0 * a.value, 1e-9 * b.value);

  const auto z = RadialFunction::sample(g, [](double) { return 0.0; });
  const auto rz = weighted_dirichlet(WeightedDirichletQuery{z, 1.0}, ExtensionField(z, p));
  EXPECT_EQ(rz.value, 0.0);
  EXPECT_TRUE(rz.converged);
}

TEST(WeightedDirichlet, RejectsExponentOutsideWindow) {
  const auto p = make_params(3, 0.5);
  const auto u = RadialFunction::sample(graded_grid(8), [](double x) { return 1.0 - x; });
  const ExtensionField e(u, p);
  EXPECT_THROW(weighted_dirichlet(WeightedDirichletQuery{u, 0.9}, e), DomainError);
  EXPECT_THROW(weighted_dirichlet(WeightedDirichletQuery{u, 1.0 + std::sqrt(2.0)}, e), DomainError);
}

TEST(LpNorms, ExactForConstantsAndLinearStates) {
  const auto g = graded_grid(20);
  for (int n : {2, 3, 6}) {
    const auto c = RadialFunction::sample(g, [](double) { return 0.7; });
    EXPECT_NEAR(exp_lq_norm(c, n, 3.0), std::exp(0.7) * std::pow(ball_volume(n), 1.0 / 3.0), 1e-13);
  }
  // e^{q(1-ρ)} in the plane: 2π ∫ ρ e^{q(1-ρ)} dρ = 2π (e^q - 1 - q) / q².
  const auto lin = RadialFunction::sample(g, [](double x) { return 1.0 - x; });
  const double q = 4.0;
  const double ref = std::pow(2.0 * M_PI * (std::exp(q) - 1.0 - q) / (q * q), 1.0 / q);
  EXPECT_NEAR(exp_lq_norm(lin, 2, q), ref, 1e-12 * ref);
}

TEST(LpNorms, SweepAlongBranch) {
  const auto op = assemble(make_params(2, 0.5), 40);
  const auto br = continue_branch(op, Nonlinearity::exponential());
  const auto t = lp_sweep(br, 2, 1.5);
  ASSERT_EQ(t.rows.size(), br.points.size());
  EXPECT_NEAR(t.rows.front().norm, std::pow(M_PI, 0.25), 1e-12);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GT(t.rows[i].norm, t.rows[i - 1].norm);
  EXPECT_EQ(t.sup, t.rows.back().norm);
  EXPECT_THROW(lp_sweep(br, 2, 0.0), DomainError);
  EXPECT_THROW(lp_sweep(br, 2, 2.0), DomainError);
}

TEST(DecayProfile, HoldsAndFails) {
  const auto p = make_params(12, 0.5);
  const auto g = graded_grid(40);
  // ρ^{3/2}(1-ρ²) peaks inside [1/4, 3/4], so the fitted bound covers every node.
  const auto ok = decay_profile_check(RadialFunction::sample(g, [](double x) { return 1.0 - x * x; }), p, 1.5);
  EXPECT_TRUE(ok.holds);
  EXPECT_GE(ok.worst_slack, 0.0);
  EXPECT_NEAR(ok.constant, std::pow(1.5 / 3.5, 0.75) * (1.0 - 1.5 / 3.5), 1e-2);
  // ρ^{-2}(1-ρ²) grows faster than ρ^{-3/2} toward the origin.
  const auto bad = decay_profile_check(
      RadialFunction::sample(g, [](double x) { return x > 0.0 ? (1.0 - x * x) / (x * x) : 1e6; }), p, 1.5);
  EXPECT_FALSE(bad.holds);
  EXPECT_LT(bad.worst_slack, 0.0);
  const auto zero = decay_profile_check(RadialFunction::sample(g, [](double) { return 0.0; }), p, 1.5);
  EXPECT_TRUE(zero.holds);
  EXPECT_EQ(zero.constant, 0.0);
}

TEST(DecayProfile, Validation) {
  const auto u = RadialFunction::sample(graded_grid(10), [](double x) { return 1.0 - x; });
  EXPECT_THROW(decay_profile_check(u, make_params(3, 0.5), 1.0), DomainError);
  EXPECT_THROW(decay_profile_check(u, make_params(1, 0.5), 1.0), DomainError);
  const auto p = make_params(12, 0.5);
  EXPECT_THROW(decay_profile_check(u, p, decay_exponent_floor(p)), DomainError);
  EXPECT_NO_THROW(decay_profile_check(u, p, decay_exponent_floor(p) + 1e-6));
}

TEST(StabilityForm, NonNegativeOnRandomDirections) {
  const auto op = assemble(make_params(3, 0.5), 40);
  const auto f = Nonlinearity::exponential();
  const auto br = continue_branch(op, f);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss;
  BranchPoint zero = br.points.front();
  for (int k = 0; k < 100; ++k) {
    Vec xi(op.size());
    for (int i = 0; i < xi.size(); ++i) xi[i] = gauss(rng);
    xi /= std::sqrt(xi.dot(op.W.asDiagonal() * xi));
    EXPECT_GE(stability_form(op, f, br.points[br.points.size() / 2], xi), -1e-8);
    EXPECT_GE(stability_form(op, f, br.points.back(), xi), -1e-8);
    EXPECT_GT(stability_form(op, f, zero, xi), 0.0);
  }
}

TEST(WeightedDirichlet, MonotoneInTruncation) {
  const auto p = make_params(2, 0.5);
  const auto u = RadialFunction::sample(graded_grid(8), [](double x) { return 1.0 - x * x; });
  const ExtensionField e(u, p);
  const double base = detail::weighted_dirichlet_once(e, 1.0, 1e-2, 10.0);
  EXPECT_GE(detail::weighted_dirichlet_once(e, 1.0, 5e-3, 10.0), base);
  EXPECT_GE(detail::weighted_dirichlet_once(e, 1.0, 1e-2, 20.0), base);
}

TEST(LpNorms, HolderOrdering) {
  const auto op = assemble(make_params(2, 0.5), 40);
  const auto br = continue_branch(op, Nonlinearity::exponential());
  const auto lo = lp_sweep(br, 2, 0.5), hi = lp_sweep(br, 2, 1.5);
  // ‖g‖_{p'} ≤ |B₁|^{1/p' - 1/p} ‖g‖_p for p' = 2, p = 4.
  const double theta = 0.5 - 0.25;
  for (std::size_t i = 0; i < lo.rows.size(); ++i)
    EXPECT_LE(lo.rows[i].norm, std::pow(ball_volume(2), theta) * hi.rows[i].norm * (1.0 + 1e-12));
}

TEST(DecayProfile, ScaleCovariant) {
  const auto p = make_params(12, 0.5);
  const auto u = RadialFunction::sample(graded_grid(40), [](double x) { return 1.0 - x * x; });
  const auto a = decay_profile_check(u, p, 1.5), b = decay_profile_check(u.scaled(2.0), p, 1.5);
  EXPECT_NEAR(b.constant, 2.0 * a.constant, 1e-14);
  EXPECT_NEAR(b.worst_slack, a.worst_slack, 1e-14);
  EXPECT_EQ(a.holds, b.holds);
}

TEST(DecayProfile, NearExtremalStateInUnboundedRegime) {
  const auto p = make_params(10, 0.1);
  const auto op = assemble(p, 40);
  const auto br = continue_branch(op, Nonlinearity::exponential());
  ASSERT_TRUE(br.fold_found);
  const double mu = 0.9 * (0.5 * p.n - p.s - 1.0);
  ASSERT_GT(mu, decay_exponent_floor(p));
  const auto d = decay_profile_check(br.points.back().state, p, mu);
  EXPECT_TRUE(d.holds);
  EXPECT_TRUE(std::isfinite(d.constant));
  EXPECT_GT(d.constant, 0.0);
}
