#include "pflux/geometry.hpp"

#include "pflux/error.hpp"
#include "pflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace pflux {

namespace {

constexpr double kSampleSpacing = 0.05;

double poly_eval(const std::vector<double>& c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

double poly_integral(const std::vector<double>& c, double x) {
  double r = 0.0;
  for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j) r = r * x + c[j] / (j + 1);
  return r * x;
}

double poly_derivative(const std::vector<double>& c, double x) {
  double r = 0.0;
  for (int j = static_cast<int>(c.size()) - 1; j >= 1; --j) r = r * x + j * c[j];
  return r;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

// ---------------------------------------------------------------------------
// Centerline

Centerline::Centerline(Point start, double heading, std::vector<CurvaturePiece> pieces)
    : pieces_(std::move(pieces)) {
  start_pos_.push_back(start);
  start_heading_.push_back(heading);
  for (int j = 0; j < static_cast<int>(pieces_.size()); ++j) {
    const auto& piece = pieces_[j];
    if (!(piece.length > 0.0)) throw Error(ErrorCode::InvalidGeometry, "centerline piece with non-positive length");
    start_pos_.push_back(local_position(j, piece.length));
    start_heading_.push_back(local_heading(j, piece.length));
    piece_start_.push_back(piece_start_.back() + piece.length);
    for (int m = 0; m <= 64; ++m) {
      max_abs_kappa_ = std::max(max_abs_kappa_, std::abs(poly_eval(piece.coeffs, piece.length * m / 64.0)));
    }
  }
  const double total = finite_length();
  const int n = std::max(1, static_cast<int>(std::ceil(total / kSampleSpacing)));
  if (total > 0.0) {
    for (int m = 0; m <= n; ++m) {
      const double s = total * m / n;
      sample_s_.push_back(s);
      sample_pos_.push_back(position(s));
    }
  }
}

int Centerline::piece_index(double s) const {
  const int n = static_cast<int>(pieces_.size());
  if (s >= piece_start_.back()) return n;
  auto it = std::upper_bound(piece_start_.begin(), piece_start_.end(), s);
  return std::max(0, static_cast<int>(it - piece_start_.begin()) - 1);
}

double Centerline::local_heading(int piece, double sigma) const {
  if (piece >= static_cast<int>(pieces_.size())) return start_heading_[piece];
  return start_heading_[piece] + poly_integral(pieces_[piece].coeffs, sigma);
}

Point Centerline::local_position(int piece, double sigma) const {
  const Point& p0 = start_pos_[piece];
  const double th0 = start_heading_[piece];
  if (piece >= static_cast<int>(pieces_.size())) return p0 + sigma * Point(std::cos(th0), std::sin(th0));
  const auto& c = pieces_[piece].coeffs;
  const bool constant = std::all_of(c.begin() + std::min<std::size_t>(1, c.size()), c.end(),
                                    [](double v) { return v == 0.0; });
  if (constant) {
    const double kappa = c.empty() ? 0.0 : c[0];
    const double half = 0.5 * kappa * sigma;
    const double chord = sigma * sinc(half);
    return p0 + chord * Point(std::cos(th0 + half), std::sin(th0 + half));
  }
  const int segs = std::max(1, static_cast<int>(std::ceil(sigma / 0.1)));
  const double x = quad::composite_gauss([&](double u) { return std::cos(local_heading(piece, u)); }, 0.0, sigma, 12, segs);
  const double y = quad::composite_gauss([&](double u) { return std::sin(local_heading(piece, u)); }, 0.0, sigma, 12, segs);
  return p0 + Point(x, y);
}

Point Centerline::position(double s) const {
  const int j = piece_index(s);
  return local_position(j, s - piece_start_[j]);
}

double Centerline::heading(double s) const {
  const int j = piece_index(s);
  return local_heading(j, s - piece_start_[j]);
}

Point Centerline::tangent(double s) const {
  const double th = heading(s);
  return {std::cos(th), std::sin(th)};
}

Point Centerline::normal(double s) const {
  const double th = heading(s);
  return {-std::sin(th), std::cos(th)};
}

double Centerline::curvature(double s) const {
  const int j = piece_index(s);
  if (j >= static_cast<int>(pieces_.size())) return 0.0;
  return poly_eval(pieces_[j].coeffs, s - piece_start_[j]);
}

double Centerline::curvature_derivative(double s) const {
  const int j = piece_index(s);
  if (j >= static_cast<int>(pieces_.size())) return 0.0;
  return poly_derivative(pieces_[j].coeffs, s - piece_start_[j]);
}

std::optional<Centerline::Projection> Centerline::project(const Point& x) const {
  const double total = finite_length();
  double best_s = 0.0;
  double best_d = std::numeric_limits<double>::infinity();

  // straight ray beyond the curved part
  {
    const Point p = start_pos_.back();
    const double th = start_heading_.back();
    const Point tdir(std::cos(th), std::sin(th));
    const double s = total + std::max(0.0, (x - p).dot(tdir));
    const double d = (x - position(s)).squaredNorm();
    best_s = s;
    best_d = d;
  }
  if (!sample_s_.empty()) {
    std::size_t arg = 0;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < sample_s_.size(); ++m) {
      const double d = (x - sample_pos_[m]).squaredNorm();
      if (d < dmin) {
        dmin = d;
        arg = m;
      }
    }
    double s = sample_s_[arg];
    for (int it = 0; it < 30; ++it) {
      const Point c = position(s);
      const Point tdir = tangent(s);
      const Point ndir = normal(s);
      const double f = (x - c).dot(tdir);
      const double fp = -1.0 + curvature(s) * (x - c).dot(ndir);
      if (fp > -1e-3) break;
      const double next = std::clamp(s - f / fp, 0.0, total);
      const bool done = std::abs(next - s) < 1e-15;
      s = next;
      if (done) break;
    }
    const double d = (x - position(s)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  const Point c = position(best_s);
  if (best_s <= 0.0 && (x - c).dot(tangent(0.0)) < 0.0) return std::nullopt;
  return Projection{best_s, (x - c).dot(normal(best_s))};
}

// ---------------------------------------------------------------------------
// HalfWidth

double HalfWidth::operator()(double s) const {
  double w = base;
  for (const auto& t : terms) w += t.amplitude * std::sin(t.frequency * s + t.phase);
  return w;
}

double HalfWidth::derivative(double s) const {
  double w = 0.0;
  for (const auto& t : terms) w += t.amplitude * t.frequency * std::cos(t.frequency * s + t.phase);
  return w;
}

double HalfWidth::second_derivative(double s) const {
  double w = 0.0;
  for (const auto& t : terms) w -= t.amplitude * t.frequency * t.frequency * std::sin(t.frequency * s + t.phase);
  return w;
}

double HalfWidth::lower_bound() const {
  double w = base;
  for (const auto& t : terms) w -= std::abs(t.amplitude);
  return w;
}

double HalfWidth::upper_bound() const {
  double w = base;
  for (const auto& t : terms) w += std::abs(t.amplitude);
  return w;
}

// ---------------------------------------------------------------------------
// ChannelDomain

ChannelDomain::ChannelDomain(std::vector<Point> core, std::vector<OutletSpec> outlets, double t_min)
    : core_(std::move(core)), outlets_(std::move(outlets)), t_min_(t_min) {
  validate();
}

const OutletSpec& ChannelDomain::outlet(int i) const {
  if (i < 0 || i >= k()) throw Error(ErrorCode::UnknownOutlet, "outlet index " + std::to_string(i));
  return outlets_[i];
}

double ChannelDomain::core_area() const { return polygon_area(core_); }

double ChannelDomain::w_min() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& o : outlets_) w = std::min(w, o.halfwidth.lower_bound());
  return w;
}

double ChannelDomain::w_max() const {
  double w = 0.0;
  for (const auto& o : outlets_) w = std::max(w, o.halfwidth.upper_bound());
  return w;
}

int ChannelDomain::outlet_on_edge(int edge) const {
  for (int i = 0; i < k(); ++i)
    if (outlets_[i].core_edge == edge) return i;
  return -1;
}

void ChannelDomain::validate() const {
  const int n = static_cast<int>(core_.size());
  if (n < 3) throw Error(ErrorCode::InvalidGeometry, "core polygon needs at least 3 vertices");
  if (k() < 2) throw Error(ErrorCode::InvalidGeometry, "at least two outlets are required");
  if (!(t_min_ > 0.0)) throw Error(ErrorCode::InvalidGeometry, "t_min must be positive");
  if (polygon_area(core_) <= 0.0) throw Error(ErrorCode::InvalidGeometry, "core polygon must be counter-clockwise");
  for (int j = 0; j < n; ++j) {
    const Point& a = core_[j];
    const Point& b = core_[(j + 1) % n];
    const Point& c = core_[(j + 2) % n];
    if (cross(b - a, c - b) <= 1e-12 * (b - a).norm() * (c - b).norm())
      throw Error(ErrorCode::InvalidGeometry, "core polygon must be strictly convex");
  }
  std::vector<int> flux_seen(k(), 0);
  std::set<int> edges;
  for (const auto& o : outlets_) {
    if (o.core_edge < 0 || o.core_edge >= n) throw Error(ErrorCode::InvalidGeometry, "outlet core edge out of range");
    if (!edges.insert(o.core_edge).second) throw Error(ErrorCode::InvalidGeometry, "two outlets share a core edge");
    if (o.flux_index < 0 || o.flux_index >= k() || flux_seen[o.flux_index]++)
      throw Error(ErrorCode::InvalidGeometry, "flux indices must be a permutation of 0..k-1");
    if (!(o.halfwidth.lower_bound() > 0.0)) throw Error(ErrorCode::InvalidGeometry, "half-width must stay positive");
    const Point& a = core_[o.core_edge];
    const Point& b = core_[(o.core_edge + 1) % n];
    const double len = (b - a).norm();
    const Point mid = 0.5 * (a + b);
    const Point outward = Point(b.y() - a.y(), a.x() - b.x()) / len;
    if ((o.centerline.position(0.0) - mid).norm() > 1e-9 * std::max(1.0, len))
      throw Error(ErrorCode::InvalidGeometry, "outlet centerline must start at the core edge midpoint");
    if ((o.centerline.tangent(0.0) - outward).norm() > 1e-9)
      throw Error(ErrorCode::InvalidGeometry, "outlet centerline must leave along the outward edge normal");
    if (std::abs(2.0 * o.halfwidth(0.0) - len) > 1e-9 * std::max(1.0, len))
      throw Error(ErrorCode::InvalidGeometry, "outlet mouth width must equal the core edge length");
    const double total = o.centerline.finite_length();
    const int samples = std::max(1, static_cast<int>(std::ceil(total / 0.01)));
    for (int m = 0; m <= samples; ++m) {
      const double s = total * m / samples;
      if (std::abs(o.centerline.curvature(s)) * o.halfwidth(s) >= 1.0)
        throw Error(ErrorCode::InvalidGeometry, "tube chart not injective: |kappa| w >= 1");
    }
  }
}

// ---------------------------------------------------------------------------
// Polygons

double polygon_area(const std::vector<Point>& polygon) {
  const std::size_t n = polygon.size();
  double a = 0.0;
  for (std::size_t j = 0; j < n; ++j) a += cross(polygon[j], polygon[(j + 1) % n]);
  return 0.5 * a;
}

bool point_in_polygon(const std::vector<Point>& polygon, const Point& x) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = polygon[i];
    const Point& b = polygon[j];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x.x() < xc) inside = !inside;
    }
  }
  return inside;
}

double CutDomain::area() const { return polygon_area(boundary); }

bool CutDomain::contains(const Point& x) const { return point_in_polygon(boundary, x); }

std::string CutDomain::to_wkt() const {
  std::ostringstream out;
  out << "POLYGON ((";
  char buf[64];
  for (std::size_t j = 0; j <= boundary.size(); ++j) {
    const Point& p = boundary[j % boundary.size()];
    std::snprintf(buf, sizeof buf, "%.17g %.17g", p.x(), p.y());
    out << (j ? ", " : "") << buf;
  }
  out << "))";
  return out.str();
}

// ---------------------------------------------------------------------------
// Cut domains and sections

namespace {

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > 1e-9) out.push_back(x);
  return out;
}

OutletSampling sample_outlet(const OutletSpec& o, double t, const CutOptions& opt) {
  OutletSampling smp;
  std::vector<double> snaps{0.0, t};
  if (opt.snap_step > 0.0)
    for (int j = 1; j * opt.snap_step < t - 1e-9; ++j) snaps.push_back(j * opt.snap_step);
  for (double e : opt.extra_snaps)
    if (e > 1e-9 && e < t - 1e-9) snaps.push_back(e);
  smp.snaps = unique_sorted(snaps);

  std::vector<double> breaks = smp.snaps;
  for (double b : o.centerline.breaks())
    if (b > 1e-9 && b < t - 1e-9) breaks.push_back(b);
  breaks = unique_sorted(breaks);

  double bend = 0.0;
  for (const auto& term : o.halfwidth.terms) bend += std::abs(term.amplitude) * term.frequency * term.frequency;
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    const double a = breaks[j], b = breaks[j + 1];
    double kappa = bend;
    if (a < o.centerline.finite_length()) kappa += o.centerline.max_abs_curvature();
    double ds = b - a;
    if (kappa > 0.0) ds = std::min(opt.max_wall_spacing, std::sqrt(8.0 * opt.chord_tolerance / kappa));
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / ds - 1e-9)));
    for (int m = 0; m < n; ++m) smp.s.push_back(a + (b - a) * m / n);
  }
  smp.s.push_back(t);
  for (double s : smp.s) {
    smp.right.push_back(o.right_wall(s));
    smp.left.push_back(o.left_wall(s));
  }
  for (double sn : smp.snaps) {
    auto it = std::min_element(smp.s.begin(), smp.s.end(),
                               [sn](double x, double y) { return std::abs(x - sn) < std::abs(y - sn); });
    smp.snap_sample.push_back(static_cast<int>(it - smp.s.begin()));
  }
  return smp;
}

}  // namespace

CutDomain cut_domain(const DomainPtr& domain, double t, const CutOptions& options) {
  if (t < domain->t_min() - 1e-12)
    throw Error(ErrorCode::DomainTooSmall, "t = " + std::to_string(t) + " below t_min = " + std::to_string(domain->t_min()));
  CutDomain cd;
  cd.t = t;
  cd.parent = domain;
  const auto& core = domain->core();
  const int n = static_cast<int>(core.size());
  for (int i = 0; i < domain->k(); ++i) {
    OutletSampling smp = sample_outlet(domain->outlet(i), t, options);
    const int e = domain->outlet(i).core_edge;
    smp.right.front() = core[e];
    smp.left.front() = core[(e + 1) % n];
    cd.outlets.push_back(std::move(smp));
  }
  for (int e = 0; e < n; ++e) {
    const int i = domain->outlet_on_edge(e);
    if (i < 0) {
      cd.boundary.push_back(core[e]);
      cd.tags.push_back({BoundaryKind::Wall, -1});
      continue;
    }
    const auto& smp = cd.outlets[i];
    const int m = static_cast<int>(smp.s.size());
    for (int j = 0; j < m; ++j) {
      cd.boundary.push_back(smp.right[j]);
      cd.tags.push_back(j + 1 < m ? BoundaryTag{BoundaryKind::Wall, -1} : BoundaryTag{BoundaryKind::Cut, i});
    }
    for (int j = m - 1; j >= 1; --j) {
      cd.boundary.push_back(smp.left[j]);
      cd.tags.push_back({BoundaryKind::Wall, -1});
    }
  }
  return cd;
}

CrossSection cross_section(const ChannelDomain& domain, int outlet, double t) {
  const OutletSpec& o = domain.outlet(outlet);
  if (t < 0.0) throw Error(ErrorCode::DomainTooSmall, "negative section parameter");
  CrossSection cs;
  cs.outlet = outlet;
  cs.t = t;
  cs.right = o.right_wall(t);
  cs.left = o.left_wall(t);
  cs.normal = o.centerline.tangent(t);
  return cs;
}

OutletSpec make_outlet(const std::vector<Point>& core, int edge, std::vector<CurvaturePiece> pieces,
                       HalfWidth halfwidth, int flux_index) {
  const int n = static_cast<int>(core.size());
  if (edge < 0 || edge >= n) throw Error(ErrorCode::InvalidGeometry, "outlet core edge out of range");
  const Point& a = core[edge];
  const Point& b = core[(edge + 1) % n];
  const Point d = b - a;
  OutletSpec o;
  o.centerline = Centerline(0.5 * (a + b), std::atan2(-d.x(), d.y()), std::move(pieces));
  o.halfwidth = std::move(halfwidth);
  o.flux_index = flux_index;
  o.core_edge = edge;
  return o;
}

namespace shapes {

DomainPtr strip(double half_width, double core_half_length, double t_min) {
  const double w = half_width, l = core_half_length;
  std::vector<Point> core{{-l, -w}, {l, -w}, {l, w}, {-l, w}};
  std::vector<OutletSpec> outlets{make_outlet(core, 3, {}, HalfWidth{w, {}}, 0),
                                  make_outlet(core, 1, {}, HalfWidth{w, {}}, 1)};
  return std::make_shared<ChannelDomain>(core, std::move(outlets), t_min);
}

DomainPtr wavy_strip(double amplitude, double t_min) {
  std::vector<Point> core{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  HalfWidth w{1.0, {{amplitude, 1.0, 0.0}}};
  std::vector<OutletSpec> outlets{make_outlet(core, 3, {}, w, 0), make_outlet(core, 1, {}, w, 1)};
  return std::make_shared<ChannelDomain>(core, std::move(outlets), t_min);
}

DomainPtr t_junction(double t_min) {
  std::vector<Point> core{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  std::vector<OutletSpec> outlets{make_outlet(core, 3, {}, HalfWidth{1.0, {}}, 0),
                                  make_outlet(core, 1, {}, HalfWidth{1.0, {}}, 1),
                                  make_outlet(core, 0, {}, HalfWidth{1.0, {}}, 2)};
  return std::make_shared<ChannelDomain>(core, std::move(outlets), t_min);
}

DomainPtr s_channel(double curvature, double bend_length, double t_min) {
  std::vector<Point> core{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  std::vector<CurvaturePiece> bend{{bend_length, {curvature}}, {bend_length, {-curvature}}};
  std::vector<OutletSpec> outlets{make_outlet(core, 3, {}, HalfWidth{1.0, {}}, 0),
                                  make_outlet(core, 1, std::move(bend), HalfWidth{1.0, {}}, 1)};
  return std::make_shared<ChannelDomain>(core, std::move(outlets), t_min);
}

}  // namespace shapes

VolumeGrowthReport validate_volume_growth(const DomainPtr& domain, const std::vector<double>& t_list) {
  VolumeGrowthReport report;
  report.bound = domain->core_area() / domain->t_min() + 2.0 * domain->k() * domain->w_max();
  for (double t : t_list) {
    const double area = cut_domain(domain, t).area();
    report.rows.push_back({t, area, area / t});
    if (area / t > report.bound * (1.0 + 1e-12)) report.violated = true;
  }
  return report;
}

}  // namespace pflux
