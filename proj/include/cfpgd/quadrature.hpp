#pragma once

#include "cfpgd/types.hpp"

#include <cmath>
#include <numbers>

namespace cfpgd {

/// Gauss-Legendre rule on the reference interval [-1, 1].
template <class Scalar>
struct GaussLegendreRule {
  VectorX<Scalar> points;
  VectorX<Scalar> weights;
};

/// Nodes and weights by Newton iteration on the Legendre recurrence.
template <class Scalar>
GaussLegendreRule<Scalar> gauss_legendre(Index n) {
  if (n < 1) throw DomainError("gauss_legendre: need n >= 1");
  GaussLegendreRule<Scalar> rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const Index half = (n + 1) / 2;
  for (Index i = 0; i < half; ++i) {
    // Chebyshev-based initial guess for the i-th positive root.
    Scalar x = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) /
                        (Scalar(n) + Scalar(0.5)));
    Scalar dp = Scalar(0);
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = Scalar(1);
      Scalar p1 = x;
      for (Index k = 2; k <= n; ++k) {
        const Scalar p2 =
            ((Scalar(2 * k - 1)) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (x * p1 - p0) / (x * x - Scalar(1));
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Scalar(1e-16)) break;
    }
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[(n - 1) / 2] = Scalar(0);
  return rule;
}

/// Integral of f over [a, b] with the given rule.
template <class Scalar, class F>
Scalar integrate(const GaussLegendreRule<Scalar>& rule, Scalar a, Scalar b, F&& f) {
  const Scalar mid = (a + b) / Scalar(2);
  const Scalar half = (b - a) / Scalar(2);
  Scalar sum = Scalar(0);
  for (Index i = 0; i < rule.points.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.points[i]);
  }
  return half * sum;
}

}  // namespace cfpgd
