#pragma once

// Radial traces: piecewise-linear grid functions and closed-form profiles.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fracstab/errors.hpp"
#include "fracstab/quadrature.hpp"

namespace fracstab {

/// A radial profile u(ρ) vanishing for ρ beyond support(). `cuts()` lists
/// points where u is not smooth; `singularities()` lists points where u
/// behaves like |ρ - ρ0|^{γ-1} (γ ≠ 1) and needs a power substitution.
template <class T>
concept RadialTrace = requires(const T& t, double r) {
  { t.value(r) } -> std::convertible_to<double>;
  { t.support() } -> std::convertible_to<double>;
  { t.cuts() } -> std::convertible_to<std::vector<double>>;
  { t.singularities() } -> std::convertible_to<std::vector<Focus>>;
};

/// Piecewise-linear interpolant on strictly increasing nodes, zero outside
/// [nodes.front(), nodes.back()].
class RadialFunction {
 public:
  RadialFunction() = default;
  RadialFunction(std::vector<double> nodes, std::vector<double> values)
      : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.size() != values_.size())
      throw DomainError("RadialFunction: node and value counts differ");
    if (nodes_.size() < 2) throw DomainError("RadialFunction: need at least two nodes");
    if (nodes_.front() < 0.0) throw DomainError("RadialFunction: nodes must be non-negative");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (!(nodes_[i] > nodes_[i - 1]))
        throw DomainError("RadialFunction: nodes must be strictly increasing (duplicate at index " +
                          std::to_string(i) + ")");
  }

  /// Samples `f` at the given nodes.
  template <class F>
  static RadialFunction sample(const std::vector<double>& nodes, F&& f) {
    std::vector<double> v(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = f(nodes[i]);
    return RadialFunction(nodes, std::move(v));
  }

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  double value(double r) const {
    if (nodes_.empty() || r < nodes_.front() || r > nodes_.back()) return 0.0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    if (it == nodes_.end()) return values_.back();
    const std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
    const double t = (r - nodes_[j - 1]) / (nodes_[j] - nodes_[j - 1]);
    return (1.0 - t) * values_[j - 1] + t * values_[j];
  }

  double support() const { return nodes_.empty() ? 0.0 : nodes_.back(); }
  std::vector<double> cuts() const { return nodes_; }
  std::vector<Focus> singularities() const { return {}; }

  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

  RadialFunction scaled(double c) const {
    RadialFunction r = *this;
    for (double& v : r.values_) v *= c;
    return r;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
};

/// Closed-form trace given by a callable.
class AnalyticTrace {
 public:
  AnalyticTrace(std::function<double(double)> f, double support, std::vector<double> cuts = {},
                std::vector<Focus> sing = {})
      : f_(std::move(f)), support_(support), cuts_(std::move(cuts)), sing_(std::move(sing)) {}

  double value(double r) const { return (r < 0.0 || r > support_) ? 0.0 : f_(r); }
  double support() const { return support_; }
  std::vector<double> cuts() const { return cuts_; }
  std::vector<Focus> singularities() const { return sing_; }

  AnalyticTrace scaled(double c) const {
    auto f = f_;
    return AnalyticTrace([f, c](double r) { return c * f(r); }, support_, cuts_, sing_);
  }

 private:
  std::function<double(double)> f_;
  double support_;
  std::vector<double> cuts_;
  std::vector<Focus> sing_;
};

/// (1 - ρ^2)_+^s, whose fractional Laplacian is constant in the unit ball.
inline AnalyticTrace getoor_trace(double s) {
  return AnalyticTrace([s](double r) { return std::pow(std::max(0.0, 1.0 - r * r), s); }, 1.0,
                       {1.0}, {Focus{1.0, 1e-6, 1.0 + s}});
}

/// (1 - ρ^2)_+, used to check boundary exponent fits.
inline AnalyticTrace parabola_trace() {
  return AnalyticTrace([](double r) { return std::max(0.0, 1.0 - r * r); }, 1.0, {1.0});
}

/// C^∞ bump exp(1 - 1/(1 - ρ^2)) supported in the unit ball, equal to 1 at 0.
/// It is smooth across ρ = 1 but not analytic there, so quadrature is graded
/// toward the edge without declaring a cut.
inline AnalyticTrace bump_trace() {
  return AnalyticTrace(
      [](double r) {
        const double t = 1.0 - r * r;
        return t <= 0.0 ? 0.0 : std::exp(1.0 - 1.0 / t);
      },
      1.0, {}, {Focus{1.0, 1e-3, 1.0}});
}

/// Gaussian e^{-ρ^2}, truncated where it falls below double precision.
inline AnalyticTrace gaussian_trace() {
  return AnalyticTrace([](double r) { return std::exp(-r * r); }, 6.0);
}

/// The zero trace.
inline AnalyticTrace zero_trace() {
  return AnalyticTrace([](double) { return 0.0; }, 1.0);
}

/// Graded grid on [0, 1] with M cells: uniform cells of width H followed by
/// G cells H·0.85^k (k = 1..G) toward ρ = 1, with 0.85^G ≈ H so the smallest
/// cell is about H^2. Returns the M+1 nodes.
inline std::vector<double> graded_grid(int M) {
  constexpr double r = 0.85;
  if (M < 8) throw DomainError("graded_grid: need at least 8 cells, got " + std::to_string(M));
  int G = 0;
  double H = 1.0 / M;
  for (int it = 0; it < 50; ++it) {
    int g = static_cast<int>(std::lround(std::log(H) / std::log(r)));
    g = std::clamp(g, 0, M - 3);
    const double h = 1.0 / ((M - g) + r * (1.0 - std::pow(r, g)) / (1.0 - r));
    if (g == G && std::abs(h - H) < 1e-15) break;
    G = g;
    H = h;
  }
  std::vector<double> x(M + 1);
  x[0] = 0.0;
  int k = 0;
  for (; k < M - G; ++k) x[k + 1] = x[k] + H;
  for (int j = 1; j <= G; ++j, ++k) x[k + 1] = x[k] + H * std::pow(r, j);
  x[M] = 1.0;
  return x;
}

}  // namespace fracstab
