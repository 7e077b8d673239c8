#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <functional>
#include <vector>

namespace pflux {

using Vec3 = Eigen::Vector3d;

/// Flux carrier for the unit ball with k punctures on its boundary sphere.
///
/// btilde = sum_{i<k} Pi^* omega_i, where Pi is the stereographic projection from
/// the last puncture and omega_i the angle form around Pi(p_i) with weight alpha_i.
/// It is extended into the ball as the pullback under x -> x/|x| plus (|x| - 1) x/|x|,
/// which keeps b closed, and a = curl(zeta b) with a radial cutoff zeta equal to 1
/// on r >= 1 - eps and 0 on r <= 1 - 2 eps.
class SphericalCarrier3D {
 public:
  SphericalCarrier3D(std::vector<Vec3> punctures, std::vector<double> fluxes, double eps = 0.1);

  int k() const { return static_cast<int>(punctures_.size()); }
  const std::vector<Vec3>& punctures() const { return punctures_; }
  const std::vector<double>& fluxes() const { return fluxes_; }
  double eps() const { return eps_; }

  /// Stereographic coordinates of x/|x| from the pole p_k.
  Eigen::Vector2d project(const Vec3& x) const;
  /// Tangent 1-form on the sphere at x/|x|.
  Vec3 btilde(const Vec3& x) const;
  /// Extension into the ball.
  Vec3 b(const Vec3& x) const;
  double zeta(double r) const;
  /// curl(zeta b); zero wherever zeta is locally constant.
  Vec3 a(const Vec3& x) const;

  /// Circle on the sphere at angular radius `angle` around puncture i, positively
  /// oriented with respect to the outward normal; `wobble` perturbs the radius by
  /// (1 + wobble sin 3 phi) within the same homotopy class.
  struct Loop {
    std::function<Vec3(double)> gamma;   // u in [0, 1)
    std::function<Vec3(double)> dgamma;  // d gamma / du
  };
  Loop puncture_loop(int i, double angle, double wobble = 0.0) const;

  /// Periodic trapezoid rule for the line integral of btilde.
  double loop_integral(const Loop& loop, int n = 4096) const;

  /// Flux of a through the spherical cap {p_i + rho m} inside the ball, normal pointing
  /// toward p_i. Gauss-Legendre in the polar angle (restricted to the cutoff layer),
  /// trapezoid in the azimuth. Requires rho > 2 eps.
  double cap_flux(int i, double rho, int n_polar = 24, int n_azimuth = 256, int pieces = 8) const;

 private:
  Vec3 pullback(const Vec3& x) const;

  std::vector<Vec3> punctures_;
  std::vector<double> fluxes_;
  double eps_;
  Vec3 pole_, e1_, e2_;
  std::vector<Eigen::Vector2d> centers_;
};

SphericalCarrier3D build_spherical_carrier(std::vector<Vec3> punctures, std::vector<double> fluxes, double eps = 0.1);

/// Two unit vectors completing v to a right-handed orthonormal frame (u1 x u2 = v).
std::pair<Vec3, Vec3> tangent_frame(const Vec3& v);

}  // namespace pflux
