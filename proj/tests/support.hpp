#pragma once

#include <cmath>
#include <random>

#include "rotator/dynamics.hpp"
#include "rotator/mechanics.hpp"
#include "rotator/model.hpp"

namespace rotator::testing {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-3) v = Vec3(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline Vec3 random_tangent(std::mt19937_64& rng, const Vec3& n, double magnitude) {
  Vec3 t = random_unit(rng);
  t -= t.dot(n) * n;
  while (t.norm() < 1e-3) {
    t = random_unit(rng);
    t -= t.dot(n) * n;
  }
  return magnitude * t.normalized();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Slow-motion state: |v| <= 0.3 c, Omega in [omega_lo, omega_hi].
inline RotatorState random_state(std::mt19937_64& rng, double omega_lo = 0.2,
                                 double omega_hi = 2.0) {
  RotatorState s;
  s.t = uniform(rng, -1.0, 1.0);
  s.x = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  s.v = uniform(rng, 0.0, 0.3) * random_unit(rng);
  s.n = random_unit(rng);
  s.ndot = random_tangent(rng, s.n, uniform(rng, omega_lo, omega_hi));
  return s;
}

/// Non-degenerate parameters with |a2 - a1^2| >= 0.1 and a1 < 0 or a1 = 0, so
/// that the bracket a2 (l/c) Omega - a1 (1 + n.v/c) stays positive.
inline RotatorParams random_regular_params(std::mt19937_64& rng) {
  const double a1 = uniform(rng, -2.0, 0.0);
  double a2 = a1 * a1 + uniform(rng, 0.1, 2.0);
  return RotatorParams::make(uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0),
                             uniform(rng, 1.0, 2.0), a1, a2);
}

inline RotatorParams random_degenerate_params(std::mt19937_64& rng) {
  const double a1 = -uniform(rng, 0.2, 2.0);
  return RotatorParams::make(uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0),
                             uniform(rng, 1.0, 2.0), a1, a1 * a1);
}

/// Cubic Hermite interpolation of n between samples i and i+1 at fraction w.
inline Vec3 hermite(const RotatorState& a, const RotatorState& b, double w) {
  const double h = b.t - a.t;
  const double w2 = w * w;
  const double w3 = w2 * w;
  return (2 * w3 - 3 * w2 + 1) * a.n + (w3 - 2 * w2 + w) * h * a.ndot +
         (-2 * w3 + 3 * w2) * b.n + (w3 - w2) * h * b.ndot;
}

}  // namespace rotator::testing
