#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace pflux::quad {

/// Gauss-Legendre rule on [-1, 1].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule (nodes by Newton iteration on P_n).
const Rule1D& gauss_legendre(int n);

/// Integral of f over [a, b] with an n-point rule on `pieces` equal subintervals.
double composite_gauss(const std::function<double(double)>& f, double a, double b, int n = 10,
                       int pieces = 1);

/// Adaptive Gauss-Kronrod (7/15) integration to absolute tolerance `tol`.
double adaptive_gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                   int max_depth = 40);

/// Symmetric triangle rule in barycentric coordinates; weights sum to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Smallest built-in rule exact for polynomials of the given degree (2, 5 or 8).
const TriangleRule& triangle_rule(int degree);

}  // namespace pflux::quad
