#pragma once

#include "pflux/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

namespace pflux {

/// Value of the carrier at a point: a = (d psi/dy, -d psi/dx) and grad(i, j) = d a_i / d x_j.
struct CarrierSample {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
  double psi = 0.0;
};

/// Divergence-free field with prescribed outlet fluxes, vanishing on a collar
/// of width delta along every wall.
///
/// psi is constant on each wall arc. Inside outlet i it is a quintic step across
/// the tube from c_right to c_left = c_right + alpha_i; inside the core it is a
/// function of the polar angle around the core centroid that switches between the
/// same constants in an angular window facing each mouth, and fades to a constant
/// towards the centroid. Both are blended over the first w(0) of arclength of each outlet.
class CarrierField {
 public:
  CarrierField(DomainPtr domain, std::vector<double> fluxes, double delta);

  CarrierSample eval(const Point& x) const;
  Eigen::Vector2d operator()(const Point& x) const { return eval(x).a; }

  const ChannelDomain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  /// Flux through outlet i (indexed like the outlets, not like flux_index).
  double outlet_flux(int i) const { return alpha_[i]; }
  const std::vector<double>& fluxes() const { return fluxes_; }
  /// Constant value of psi on each wall arc; arc m runs from the left wall of the
  /// m-th outlet (counter-clockwise order) to the right wall of the next one.
  const std::vector<double>& stream_constants() const { return arc_constant_; }
  double cutoff_width() const { return delta_; }
  /// Sampled sup of |a| and |grad a| over the core and the first 20 units of every outlet.
  double sup_a() const { return sup_a_; }
  double sup_grad() const { return sup_grad_; }

  /// Which piece of the construction evaluates x: -1 core, i >= 0 outlet i; nullopt if outside.
  struct Location {
    int outlet;
    double s;
    double offset;
  };
  std::optional<Location> locate(const Point& x) const;

 private:
  struct Window {
    double mid;  // polar angle of the mouth midpoint
    double lo, hi;  // transition window, relative to mid
    double c_right, alpha;
    double collar;  // cutoff width mapped onto the mouth
  };
  struct Psi {
    double v;
    Eigen::Vector2d g;
    Eigen::Matrix2d H;
  };

  Psi fan(const Point& x) const;
  Psi tube(int i, double s, double o, const Point& x) const;
  Psi mouth_fan(int i, double s, double o) const;
  double fan_profile(double theta, double* d1, double* d2) const;
  void compute_bounds();

  DomainPtr domain_;
  std::vector<double> fluxes_;
  std::vector<double> alpha_;
  double delta_;
  std::vector<int> ccw_order_;
  std::vector<double> right_constant_;
  std::vector<double> arc_constant_;
  std::vector<Window> windows_;  // per outlet
  Point origin_;
  double r0_ = 0.0;
  double centre_value_ = 0.0;
  double sup_a_ = 0.0, sup_grad_ = 0.0;
};

/// fluxes[j] is the flux through the outlet whose flux_index is j. delta defaults to w_min/4.
CarrierField build_carrier_2d(const DomainPtr& domain, const std::vector<double>& fluxes,
                              std::optional<double> delta = std::nullopt);

/// Flux of `field` through the segment from `right` to `left`, with the normal obtained by
/// rotating (left - right) clockwise; adaptive Gauss-Kronrod.
double segment_flux(const std::function<Eigen::Vector2d(const Point&)>& field, const Point& right,
                    const Point& left, double tol = 1e-13);

/// Rotational angle form (alpha / 2 pi)(-(y - b) dx + (x - a) dy) / r^2 around `center`.
class AngleForm {
 public:
  AngleForm(Point center, double alpha) : center_(center), alpha_(alpha) {}
  /// Coefficients (w_x, w_y); throws SingularPoint at the center.
  Eigen::Vector2d operator()(const Point& x) const;
  const Point& center() const { return center_; }
  double alpha() const { return alpha_; }

 private:
  Point center_;
  double alpha_;
};

AngleForm angle_form(const Point& center, double alpha);

/// Line integral of a 1-form along the closed curve gamma: [0, 1] -> R^2 with derivative dgamma.
/// Periodic trapezoid rule with n nodes.
double loop_integral(const std::function<Eigen::Vector2d(const Point&)>& form,
                     const std::function<Point(double)>& gamma, const std::function<Point(double)>& dgamma,
                     int n = 2048);

}  // namespace pflux
