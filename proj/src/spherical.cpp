#include "pflux/spherical.hpp"

#include "pflux/cutoff.hpp"
#include "pflux/dual.hpp"
#include "pflux/error.hpp"
#include "pflux/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace pflux {

namespace {

using D3 = Dual<3>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 gradient(const D3& f) { return {f.d[0], f.d[1], f.d[2]}; }

}  // namespace

std::pair<Vec3, Vec3> tangent_frame(const Vec3& v) {
  const Vec3 n = v.normalized();
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u1 = (seed - seed.dot(n) * n).normalized();
  return {u1, n.cross(u1)};
}

SphericalCarrier3D::SphericalCarrier3D(std::vector<Vec3> punctures, std::vector<double> fluxes, double eps)
    : punctures_(std::move(punctures)), fluxes_(std::move(fluxes)), eps_(eps) {
  const int n = k();
  if (n < 2) throw Error(ErrorCode::DegeneratePunctures, "at least two punctures are required");
  if (static_cast<int>(fluxes_.size()) != n) throw Error(ErrorCode::FluxImbalance, "one flux per puncture is required");
  const double sum = std::accumulate(fluxes_.begin(), fluxes_.end(), 0.0);
  if (std::abs(sum) > 1e-12) throw Error(ErrorCode::FluxImbalance, "fluxes sum to " + std::to_string(sum));
  if (!(eps_ > 0.0 && eps_ < 0.5)) throw Error(ErrorCode::CutoffTooWide, "shell cutoff width must lie in (0, 1/2)");
  for (auto& p : punctures_) {
    if (!(p.norm() > 1e-12)) throw Error(ErrorCode::DegeneratePunctures, "puncture at the origin");
    p.normalize();
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((punctures_[i] - punctures_[j]).norm() < 1e-9)
        throw Error(ErrorCode::DegeneratePunctures, "punctures " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  pole_ = punctures_.back();
  auto [u, v] = tangent_frame(pole_);
  e1_ = u;
  e2_ = e1_.cross(pole_);  // e1 x e2 = -pole: orientation preserving for the outward normal
  for (int i = 0; i + 1 < n; ++i) centers_.push_back(project(punctures_[i]));
}

Eigen::Vector2d SphericalCarrier3D::project(const Vec3& x) const {
  const Vec3 u = x.normalized();
  const double den = 1.0 - u.dot(pole_);
  if (!(den > 1e-14)) throw Error(ErrorCode::SingularPoint, "stereographic projection at the pole");
  return {u.dot(e1_) / den, u.dot(e2_) / den};
}

Vec3 SphericalCarrier3D::pullback(const Vec3& x) const {
  std::array<D3, 3> X;
  for (int j = 0; j < 3; ++j) X[j] = D3::variable(x[j], j);
  const D3 r = sqrt(X[0] * X[0] + X[1] * X[1] + X[2] * X[2]);
  std::array<D3, 3> u;
  for (int j = 0; j < 3; ++j) u[j] = X[j] / r;
  auto dot = [&](const Vec3& e) { return u[0] * e.x() + u[1] * e.y() + u[2] * e.z(); };
  const D3 den = 1.0 - dot(pole_);
  if (!(den.v > 1e-14)) throw Error(ErrorCode::SingularPoint, "b evaluated on the ray through the pole");
  const D3 P = dot(e1_) / den;
  const D3 Q = dot(e2_) / den;
  double wx = 0.0, wy = 0.0;
  for (int i = 0; i + 1 < k(); ++i) {
    const double dx = P.v - centers_[i].x(), dy = Q.v - centers_[i].y();
    const double r2 = dx * dx + dy * dy;
    if (!(r2 > 0.0)) throw Error(ErrorCode::SingularPoint, "b evaluated on the ray through a puncture");
    const double c = fluxes_[i] / (kTwoPi * r2);
    wx += -dy * c;
    wy += dx * c;
  }
  return wx * gradient(P) + wy * gradient(Q);
}

Vec3 SphericalCarrier3D::b(const Vec3& x) const {
  const double rn = x.norm();
  return pullback(x) + (rn - 1.0) * x / rn;
}

Vec3 SphericalCarrier3D::btilde(const Vec3& x) const {
  const Vec3 u = x.normalized();
  const Vec3 v = b(u);
  return v - v.dot(u) * u;
}

double SphericalCarrier3D::zeta(double r) const { return smooth_step_cinf((r - (1.0 - 2.0 * eps_)) / eps_); }

Vec3 SphericalCarrier3D::a(const Vec3& x) const {
  const double rn = x.norm();
  const double s = (rn - (1.0 - 2.0 * eps_)) / eps_;
  if (s <= 0.0 || s >= 1.0) return Vec3::Zero();
  // b is closed, so curl(zeta b) = grad zeta x b, and the radial part of b is parallel to grad zeta
  const D3 z = smooth_step_cinf(D3::variable(s, 0));
  const Vec3 gz = (z.d[0] / eps_) * x / rn;
  return gz.cross(pullback(x));
}

SphericalCarrier3D::Loop SphericalCarrier3D::puncture_loop(int i, double angle, double wobble) const {
  if (i < 0 || i >= k()) throw Error(ErrorCode::DegeneratePunctures, "puncture index out of range");
  const Vec3 p = punctures_[i];
  auto [u1, u2] = tangent_frame(p);
  Loop loop;
  loop.gamma = [=](double t) {
    const double phi = kTwoPi * t;
    const double g = angle * (1.0 + wobble * std::sin(3.0 * phi));
    return Vec3(std::cos(g) * p + std::sin(g) * (std::cos(phi) * u1 + std::sin(phi) * u2));
  };
  loop.dgamma = [=](double t) {
    const double phi = kTwoPi * t;
    const double g = angle * (1.0 + wobble * std::sin(3.0 * phi));
    const double dg = angle * wobble * 3.0 * std::cos(3.0 * phi) * kTwoPi;
    const Vec3 ring = std::cos(phi) * u1 + std::sin(phi) * u2;
    const Vec3 dring = kTwoPi * (-std::sin(phi) * u1 + std::cos(phi) * u2);
    return Vec3(dg * (-std::sin(g) * p + std::cos(g) * ring) + std::sin(g) * dring);
  };
  return loop;
}

double SphericalCarrier3D::loop_integral(const Loop& loop, int n) const {
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / n;
    sum += btilde(loop.gamma(t)).dot(loop.dgamma(t));
  }
  return sum / n;
}

double SphericalCarrier3D::cap_flux(int i, double rho, int n_polar, int n_azimuth, int pieces) const {
  if (i < 0 || i >= k()) throw Error(ErrorCode::DegeneratePunctures, "puncture index out of range");
  if (!(rho > 2.0 * eps_) || !(rho < 2.0)) throw Error(ErrorCode::CutoffTooWide, "cap radius must exceed twice the cutoff width");
  const Vec3 p = punctures_[i];
  auto [u1, u2] = tangent_frame(p);
  auto beta_at = [&](double r) { return std::acos(std::clamp((1.0 + rho * rho - r * r) / (2.0 * rho), -1.0, 1.0)); };
  const double b0 = beta_at(1.0 - 2.0 * eps_), b1 = beta_at(1.0 - eps_);
  const auto& rule = quad::gauss_legendre(n_polar);
  double total = 0.0;
  for (int piece = 0; piece < pieces; ++piece) {
    const double lo = b0 + (b1 - b0) * piece / pieces, hi = b0 + (b1 - b0) * (piece + 1) / pieces;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double beta = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q];
      const double wb = 0.5 * (hi - lo) * rule.weights[q];
      double ring = 0.0;
      for (int j = 0; j < n_azimuth; ++j) {
        const double phi = kTwoPi * j / n_azimuth;
        const Vec3 e = std::cos(phi) * u1 + std::sin(phi) * u2;
        const Vec3 m = -std::cos(beta) * p + std::sin(beta) * e;
        const Vec3 x = p + rho * m;
        const Vec3 xb = rho * (std::sin(beta) * p + std::cos(beta) * e);
        const Vec3 xp = rho * std::sin(beta) * (-std::sin(phi) * u1 + std::cos(phi) * u2);
        ring += a(x).dot(xb.cross(xp));
      }
      total += wb * ring * kTwoPi / n_azimuth;
    }
  }
  return total;
}

SphericalCarrier3D build_spherical_carrier(std::vector<Vec3> punctures, std::vector<double> fluxes, double eps) {
  return SphericalCarrier3D(std::move(punctures), std::move(fluxes), eps);
}

}  // namespace pflux
