#pragma once

// Globally adaptive Gauss-Legendre quadrature on finite intervals.
//
// Each panel carries a 20-point estimate over the whole panel and over its
// two halves; the difference is the panel's error estimate and the halves'
// sum is its value. The panel with the largest estimate is bisected until
// the summed estimate drops below tolerance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nearex/errors.hpp"

namespace nearex::quadrature {

struct Options {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  std::size_t max_panels = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
};

namespace detail {

inline constexpr std::size_t kOrder = 20;

struct Rule {
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline Rule make_gauss_legendre() {
  Rule rule;
  constexpr std::size_t n = kOrder;
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

inline const Rule& gauss_legendre() {
  static const Rule rule = make_gauss_legendre();
  return rule;
}

template <class F>
double apply(const Rule& rule, F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < kOrder; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

struct Panel {
  double a;
  double b;
  double left;
  double right;
  double error;

  [[nodiscard]] double value() const { return left + right; }
  friend bool operator<(const Panel& x, const Panel& y) { return x.error < y.error; }
};

template <class F>
Panel make_panel(const Rule& rule, F& f, double a, double b, double whole) {
  const double m = 0.5 * (a + b);
  const double left = apply(rule, f, a, m);
  const double right = apply(rule, f, m, b);
  return Panel{a, b, left, right, std::abs(whole - (left + right))};
}

}  // namespace detail

// Integrates f over [points.front(), points.back()] with an initial panel
// between each pair of consecutive breakpoints (ascending, finite). Throws
// NumericalError when the panel budget is exhausted or the integrand
// produces non-finite values.
template <class F>
Result integrate(F&& f, std::span<const double> points, const Options& options = {}) {
  if (points.size() < 2) throw DomainError("integrate: needs at least two breakpoints");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) throw DomainError("integrate: bounds must be finite");
    if (i > 0 && points[i] < points[i - 1])
      throw DomainError("integrate: breakpoints must be ascending");
  }

  const auto& rule = detail::gauss_legendre();
  std::vector<detail::Panel> heap;
  heap.reserve(64);
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i];
    const double b = points[i + 1];
    if (a == b) continue;
    heap.push_back(detail::make_panel(rule, f, a, b, detail::apply(rule, f, a, b)));
    value += heap.back().value();
    error += heap.back().error;
  }
  if (heap.empty()) return {};
  std::make_heap(heap.begin(), heap.end());
  auto tolerance = [&] { return std::max(options.abs_tol, options.rel_tol * std::abs(value)); };

  while (error > tolerance()) {
    if (!std::isfinite(value) || !std::isfinite(error))
      throw NumericalError("integrate: non-finite integrand", error);
    if (heap.size() >= options.max_panels)
      throw NumericalError("integrate: panel budget exhausted, achieved error " +
                               std::to_string(error),
                           error);
    std::pop_heap(heap.begin(), heap.end());
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      // Panel cannot be split further in double precision.
      throw NumericalError("integrate: interval underflow, achieved error " +
                               std::to_string(error),
                           error);
    }
    const auto lo = detail::make_panel(rule, f, worst.a, m, worst.left);
    const auto hi = detail::make_panel(rule, f, m, worst.b, worst.right);
    heap.push_back(lo);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(hi);
    std::push_heap(heap.begin(), heap.end());

    // Recompute the totals from scratch every so often to avoid drift.
    if (heap.size() % 64 == 0) {
      value = 0.0;
      error = 0.0;
      for (const auto& p : heap) {
        value += p.value();
        error += p.error;
      }
    } else {
      value += lo.value() + hi.value() - worst.value();
      error += lo.error + hi.error - worst.error;
    }
  }

  // Final sum in interval order so the result does not depend on heap layout.
  std::sort(heap.begin(), heap.end(),
            [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
  Result result;
  result.panels = heap.size();
  for (const auto& p : heap) {
    result.value += p.value();
    result.error += p.error;
  }
  if (!std::isfinite(result.value))
    throw NumericalError("integrate: non-finite integrand", result.error);
  return result;
}

// Integrates f over [a, b]; b < a flips the sign.
template <class F>
Result integrate(F&& f, double a, double b, const Options& options = {}) {
  if (b < a) {
    Result r = integrate(f, b, a, options);
    r.value = -r.value;
    return r;
  }
  const std::array<double, 2> points{a, b};
  return integrate(f, std::span<const double>(points), options);
}

}  // namespace nearex::quadrature
