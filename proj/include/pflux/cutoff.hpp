#pragma once

#include <cmath>

namespace pflux {

/// Quintic smoothstep 6r^5 - 15r^4 + 10r^3 clamped to [0, 1]; C2 at both ends.
/// Returns value and first two derivatives with respect to r.
struct Smooth3 {
  double value, d1, d2;
};

inline Smooth3 quintic_step(double r) {
  if (r <= 0.0) return {0.0, 0.0, 0.0};
  if (r >= 1.0) return {1.0, 0.0, 0.0};
  const double r2 = r * r;
  return {r2 * r * (10.0 + r * (-15.0 + 6.0 * r)), 30.0 * r2 * (1.0 - r) * (1.0 - r),
          60.0 * r * (1.0 - r) * (1.0 - 2.0 * r)};
}

/// C-infinity step: 0 for x <= 0, 1 for x >= 1, templated for dual numbers.
template <class T>
T smooth_step_cinf(const T& x) {
  using std::exp;
  if (x <= 0.0) return T(0.0);
  if (x >= 1.0) return T(1.0);
  const T f = exp(-1.0 / x);
  const T g = exp(-1.0 / (1.0 - x));
  return f / (f + g);
}

}  // namespace pflux
