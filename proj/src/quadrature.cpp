#include "pflux/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace pflux::quad {

namespace {

Rule1D build_gauss_legendre(int n) {
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Kronrod 15-point extension of the 7-point Gauss rule.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

void gk15(const std::function<double(double)>& f, double a, double b, double& result,
          double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    rk += kWgk[j] * s;
    if (j % 2 == 1) rg += kWg[j / 2] * s;
  }
  result = rk * h;
  error = std::abs((rk - rg) * h);
}

double adaptive_rec(const std::function<double(double)>& f, double a, double b, double tol,
                    int depth) {
  double r, e;
  gk15(f, a, b, r, e);
  if (e <= tol || depth <= 0 || std::abs(b - a) < 1e-15) return r;
  const double m = 0.5 * (a + b);
  return adaptive_rec(f, a, m, 0.5 * tol, depth - 1) + adaptive_rec(f, m, b, 0.5 * tol, depth - 1);
}

TriangleRule make_rule(int degree) {
  TriangleRule r;
  r.degree = degree;
  auto add3 = [&r](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({a, a, b});
    r.points.push_back({a, b, a});
    r.points.push_back({b, a, a});
    for (int i = 0; i < 3; ++i) r.weights.push_back(w);
  };
  auto add6 = [&r](double a, double b, double w) {
    const double c = 1.0 - a - b;
    const std::array<std::array<double, 3>, 6> perms = {
        {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}};
    for (const auto& p : perms) {
      r.points.push_back(p);
      r.weights.push_back(w);
    }
  };
  switch (degree) {
    case 2:
      add3(1.0 / 6.0, 1.0 / 3.0);
      break;
    case 5: {
      const double s15 = std::sqrt(15.0);
      r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
      r.weights.push_back(9.0 / 40.0);
      add3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
      add3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
      break;
    }
    case 8:
      r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
      r.weights.push_back(0.144315607677787168251091110489);
      add3(0.459292588292723156028815514494, 0.0950916342672846193454054120925);
      add3(0.170569307751760206622293501491, 0.103217370534718250281791550292);
      add3(0.0505472283170309754584235505965, 0.0324584976231980803109259283417);
      add6(0.00839477740995760533721383453930, 0.263112829634638113421785786284,
           0.0272303141744349942648446900740);
      break;
    default:
      throw std::invalid_argument("triangle_rule: unsupported degree");
  }
  return r;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

double composite_gauss(const std::function<double(double)>& f, double a, double b, int n,
                       int pieces) {
  const Rule1D& rule = gauss_legendre(n);
  const double len = (b - a) / pieces;
  double sum = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + k * len;
    const double c = lo + 0.5 * len;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rule.weights[i] * f(c + 0.5 * len * rule.nodes[i]);
    sum += 0.5 * len * s;
  }
  return sum;
}

double adaptive_gk(const std::function<double(double)>& f, double a, double b, double tol,
                   int max_depth) {
  return adaptive_rec(f, a, b, tol, max_depth);
}

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule r2 = make_rule(2);
  static const TriangleRule r5 = make_rule(5);
  static const TriangleRule r8 = make_rule(8);
  if (degree <= 2) return r2;
  if (degree <= 5) return r5;
  if (degree <= 8) return r8;
  throw std::invalid_argument("triangle_rule: degree above 8 not available");
}

}  // namespace pflux::quad
