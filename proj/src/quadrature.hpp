#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace vldp::detail {

/// n-point Gauss-Legendre rule mapped to [0, 1].
template <int N>
struct GaussRule {
  std::array<double, N> x{};
  std::array<double, N> w{};

  GaussRule() {
    for (int i = 0; i < N; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= N; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = N * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = 0.5 * (1.0 - z);
      w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

template <int N>
const GaussRule<N>& gauss_legendre() {
  static const GaussRule<N> rule;
  return rule;
}

/// Integral of f over [a, b] with the N-point rule.
template <int N, typename F>
double integrate_gl(F&& f, double a, double b) {
  const auto& r = gauss_legendre<N>();
  double acc = 0.0;
  for (int i = 0; i < N; ++i) acc += r.w[i] * f(a + (b - a) * r.x[i]);
  return acc * (b - a);
}

}  // namespace vldp::detail
