#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pflux {

using Point = Eigen::Vector2d;

/// One piece of an outlet centerline: curvature is a polynomial in the local
/// arclength sigma in [0, length].
struct CurvaturePiece {
  double length = 0.0;
  std::vector<double> coeffs;  // kappa(sigma) = sum_j coeffs[j] * sigma^j
};

/// Arclength-parametrized smooth curve c(s), s >= 0, built by integrating a
/// piecewise-polynomial curvature. Past the last piece it continues as a
/// straight ray, so every outlet reaches infinity.
class Centerline {
 public:
  Centerline() = default;
  Centerline(Point start, double heading, std::vector<CurvaturePiece> pieces);

  Point position(double s) const;
  double heading(double s) const;
  Point tangent(double s) const;
  /// Left normal (tangent rotated by +90 degrees).
  Point normal(double s) const;
  double curvature(double s) const;
  double curvature_derivative(double s) const;

  /// Total length of the curved pieces; beyond it the curve is straight.
  double finite_length() const { return piece_start_.back(); }
  const std::vector<CurvaturePiece>& pieces() const { return pieces_; }
  /// Arclength values where pieces meet (including 0 and finite_length()).
  const std::vector<double>& breaks() const { return piece_start_; }
  double max_abs_curvature() const { return max_abs_kappa_; }

  /// Tube coordinates (s, offset) of x with respect to this curve: x = c(s) + offset n(s).
  /// Returns nullopt when the foot point would lie before s = 0.
  struct Projection {
    double s;
    double offset;
  };
  std::optional<Projection> project(const Point& x) const;

 private:
  int piece_index(double s) const;
  double local_heading(int piece, double sigma) const;
  Point local_position(int piece, double sigma) const;

  std::vector<CurvaturePiece> pieces_;
  std::vector<double> piece_start_{0.0};
  std::vector<Point> start_pos_;
  std::vector<double> start_heading_;
  std::vector<double> sample_s_;
  std::vector<Point> sample_pos_;
  double max_abs_kappa_ = 0.0;
};

/// Channel half-width w(s) = base + sum_j a_j sin(f_j s + phi_j).
struct HalfWidth {
  struct Term {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
  };
  double base = 1.0;
  std::vector<Term> terms;

  double operator()(double s) const;
  double derivative(double s) const;
  double second_derivative(double s) const;
  double lower_bound() const;
  double upper_bound() const;
};

struct OutletSpec {
  Centerline centerline;
  HalfWidth halfwidth;
  int flux_index = 0;
  int core_edge = 0;  // index of the core edge the mouth is attached to

  Point right_wall(double s) const { return centerline.position(s) - halfwidth(s) * centerline.normal(s); }
  Point left_wall(double s) const { return centerline.position(s) + halfwidth(s) * centerline.normal(s); }
};

/// Bounded convex core polygon (counter-clockwise) with k >= 2 outlet tubes
/// attached to distinct core edges.
class ChannelDomain {
 public:
  ChannelDomain(std::vector<Point> core, std::vector<OutletSpec> outlets, double t_min);

  const std::vector<Point>& core() const { return core_; }
  const std::vector<OutletSpec>& outlets() const { return outlets_; }
  const OutletSpec& outlet(int i) const;
  int k() const { return static_cast<int>(outlets_.size()); }
  double t_min() const { return t_min_; }
  double core_area() const;
  double w_min() const;
  double w_max() const;
  /// Outlet attached to core edge e, or -1.
  int outlet_on_edge(int edge) const;

 private:
  void validate() const;

  std::vector<Point> core_;
  std::vector<OutletSpec> outlets_;
  double t_min_;
};

using DomainPtr = std::shared_ptr<const ChannelDomain>;

enum class BoundaryKind { Wall, Cut };

struct BoundaryTag {
  BoundaryKind kind = BoundaryKind::Wall;
  int outlet = -1;  // outlet index for Cut tags

  bool operator==(const BoundaryTag&) const = default;
};

/// Sampling of one outlet inside a cut domain: wall points at increasing s,
/// with the snap values marking sections that become mesh lines.
struct OutletSampling {
  std::vector<double> s;
  std::vector<Point> right;
  std::vector<Point> left;
  std::vector<double> snaps;
  std::vector<int> snap_sample;  // index into s for each snap value
};

struct CutOptions {
  double max_wall_spacing = 0.25;
  double chord_tolerance = 1e-3;
  double snap_step = 1.0;
  std::vector<double> extra_snaps;
};

/// Polygonal truncation Omega_t: core plus every outlet tube cut at arclength t.
struct CutDomain {
  double t = 0.0;
  DomainPtr parent;
  std::vector<Point> boundary;     // closed CCW polyline; segment j = (j, j+1 mod n)
  std::vector<BoundaryTag> tags;   // one tag per segment
  std::vector<OutletSampling> outlets;

  double area() const;
  bool contains(const Point& x) const;
  std::string to_wkt() const;
};

struct CrossSection {
  int outlet = 0;
  double t = 0.0;
  Point right;
  Point left;
  Point normal;  // unit, pointing toward the end of the outlet

  double length() const { return (left - right).norm(); }
};

CutDomain cut_domain(const DomainPtr& domain, double t, const CutOptions& options = {});
CrossSection cross_section(const ChannelDomain& domain, int outlet, double t);

struct VolumeGrowthRow {
  double t;
  double area;
  double ratio;
};

struct VolumeGrowthReport {
  std::vector<VolumeGrowthRow> rows;
  double bound = 0.0;  // |core|/t_min + 2 k w_max
  bool violated = false;
};

VolumeGrowthReport validate_volume_growth(const DomainPtr& domain, const std::vector<double>& t_list);

/// Outlet whose mouth is core edge `edge`: starts at the edge midpoint, leaves
/// along the outward normal.
OutletSpec make_outlet(const std::vector<Point>& core, int edge, std::vector<CurvaturePiece> pieces,
                       HalfWidth halfwidth, int flux_index);

/// Ready-made domains used by the tests, the benchmarks and the CLI examples.
namespace shapes {
/// Straight channel along x: core [-l, l] x [-w, w], outlet 0 to the left, outlet 1 to the right.
DomainPtr strip(double half_width = 1.0, double core_half_length = 1.0, double t_min = 1.0);
/// Strip with half-width 1 + amplitude sin(s) in both outlets.
DomainPtr wavy_strip(double amplitude = 0.2, double t_min = 2.0);
/// Square core with outlets to the left (0), right (1) and bottom (2).
DomainPtr t_junction(double t_min = 1.0);
/// Straight left outlet; right outlet bends by +curvature then -curvature over two arcs.
DomainPtr s_channel(double curvature = 0.25, double bend_length = 2.0, double t_min = 1.0);
}  // namespace shapes

double polygon_area(const std::vector<Point>& polygon);
bool point_in_polygon(const std::vector<Point>& polygon, const Point& x);

}  // namespace pflux
