#pragma once

#include "land/metric.hpp"
#include "land/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace land::test {

inline DataMatrix two_anchors() {
  DataMatrix d(2, 2);
  d << -1.0, 0.0, 1.0, 0.0;
  return d;
}

/// Anchors (-1,0), (1,0), sigma 1, rho 0.1.
inline LearnedMetric two_anchor_metric() { return LearnedMetric(two_anchors(), {1.0, 0.1}); }

/// Noisy points on the upper unit half circle.
inline DataMatrix arc_data(Index n, double noise, std::uint64_t seed) {
  auto eng = rng::stream(seed, {0x74657374});
  std::normal_distribution<double> g(0.0, noise);
  DataMatrix d(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = M_PI * static_cast<double>(i) / static_cast<double>(n - 1);
    d(i, 0) = std::cos(t) + g(eng);
    d(i, 1) = std::sin(t) + g(eng);
  }
  return d;
}

inline DataMatrix gaussian_data(Index n, const Vector& mean, const Matrix& cov, std::uint64_t seed) {
  const Matrix z = rng::standard_normal_rows(seed, {0x67617573}, n, mean.size());
  const Matrix l = cov.llt().matrixL();
  DataMatrix d = z * l.transpose();
  d.rowwise() += mean.transpose();
  return d;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace land::test
