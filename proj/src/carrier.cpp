#include "pflux/carrier.hpp"

#include "pflux/cutoff.hpp"
#include "pflux/error.hpp"
#include "pflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pflux {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  if (a > std::numbers::pi) a -= kTwoPi;
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

double wrap_positive(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

Eigen::Matrix2d outer(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a * b.transpose(); }

Point centroid(const std::vector<Point>& poly) {
  double A = 0.0;
  Point c = Point::Zero();
  for (std::size_t j = 0; j < poly.size(); ++j) {
    const Point& p = poly[j];
    const Point& q = poly[(j + 1) % poly.size()];
    const double w = cross(p, q);
    A += w;
    c += w * (p + q);
  }
  return c / (3.0 * A);
}

}  // namespace

CarrierField::CarrierField(DomainPtr domain, std::vector<double> fluxes, double delta)
    : domain_(std::move(domain)), fluxes_(std::move(fluxes)), delta_(delta) {
  const ChannelDomain& d = *domain_;
  const int k = d.k();
  if (static_cast<int>(fluxes_.size()) != k)
    throw Error(ErrorCode::FluxImbalance, "expected " + std::to_string(k) + " fluxes, got " + std::to_string(fluxes_.size()));
  const double sum = std::accumulate(fluxes_.begin(), fluxes_.end(), 0.0);
  if (std::abs(sum) > 1e-12) throw Error(ErrorCode::FluxImbalance, "fluxes sum to " + std::to_string(sum));
  if (!(delta_ > 0.0) || delta_ > 0.5 * d.w_min() * (1.0 + 1e-12))
    throw Error(ErrorCode::CutoffTooWide, "cutoff width must lie in (0, w_min/2]");

  alpha_.resize(k);
  for (int i = 0; i < k; ++i) alpha_[i] = fluxes_[d.outlet(i).flux_index];

  ccw_order_.resize(k);
  std::iota(ccw_order_.begin(), ccw_order_.end(), 0);
  std::sort(ccw_order_.begin(), ccw_order_.end(),
            [&](int a, int b) { return d.outlet(a).core_edge < d.outlet(b).core_edge; });

  // stream constants: psi jumps by alpha_i across outlet i, from its right wall to its left wall
  right_constant_.assign(k, 0.0);
  std::vector<double> eff_alpha = alpha_;
  double c = 0.0;
  for (int m = 0; m < k; ++m) {
    const int i = ccw_order_[m];
    right_constant_[i] = c;
    if (m + 1 == k) eff_alpha[i] = -c;  // close the cycle exactly
    c = c + eff_alpha[i];
  }
  arc_constant_.resize(k);
  for (int m = 0; m < k; ++m) {
    const int i = ccw_order_[m];
    arc_constant_[m] = right_constant_[i] + eff_alpha[i];
  }
  centre_value_ = 0.0;
  for (double v : arc_constant_) centre_value_ += v / k;

  const auto& core = d.core();
  const int n = static_cast<int>(core.size());
  origin_ = centroid(core);
  double min_r = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const Point& a = core[j];
    const Point& b = core[(j + 1) % n];
    min_r = std::min(min_r, cross(b - a, origin_ - a) / (b - a).norm());
  }
  r0_ = 0.9 * min_r;

  windows_.resize(k);
  for (int i = 0; i < k; ++i) {
    const OutletSpec& o = d.outlet(i);
    Window& win = windows_[i];
    const Point mid = o.centerline.position(0.0) - origin_;
    win.mid = std::atan2(mid.y(), mid.x());
    win.c_right = right_constant_[i];
    win.alpha = eff_alpha[i];
    // the fan is only evaluated on the mouth (see eval), so only the mouth collar constrains the window
    const double w0 = o.halfwidth(0.0);
    double w_lo = w0;
    for (int a = 0; a <= 40; ++a) w_lo = std::min(w_lo, o.halfwidth(w0 * a / 40.0));
    win.collar = delta_ * w0 / w_lo;
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (int b = 0; b <= 8; ++b) {
      const double off = w0 - win.collar * b / 8.0;
      for (double sign : {-1.0, 1.0}) {
        const Point p = o.centerline.position(0.0) + sign * off * o.centerline.normal(0.0) - origin_;
        const double ang = wrap(std::atan2(p.y(), p.x()) - win.mid);
        if (sign < 0) lo = std::max(lo, ang);
        else hi = std::min(hi, ang);
      }
    }
    if (!(hi > lo)) throw Error(ErrorCode::CutoffTooWide, "no angular room for the core transition of outlet " + std::to_string(i));
    const double margin = 0.05 * (hi - lo);
    win.lo = lo + margin;
    win.hi = hi - margin;
  }

  // the fan must be constant on every wall point it is used for
  auto expect_constant = [&](const Point& p, double value) {
    const Point q = p - origin_;
    if (q.norm() < r0_) throw Error(ErrorCode::CutoffTooWide, "core wall too close to the fan centre");
    double d1 = 0.0, d2 = 0.0;
    const double f = fan_profile(std::atan2(q.y(), q.x()), &d1, &d2);
    if (d1 != 0.0 || f != value)
      throw Error(ErrorCode::CutoffTooWide, "fan transition reaches a wall; reduce the cutoff width");
  };
  for (int j = 0; j < n; ++j) {
    const int i = d.outlet_on_edge(j);
    if (i >= 0) continue;
    const int prev = [&] {
      for (int e = 1; e <= n; ++e) {
        const int o = d.outlet_on_edge((j - e + n) % n);
        if (o >= 0) return o;
      }
      return -1;
    }();
    const double value = right_constant_[prev] + eff_alpha[prev];
    for (int m = 0; m <= 20; ++m) expect_constant(core[j] + (core[(j + 1) % n] - core[j]) * (m / 20.0), value);
  }
  for (int i = 0; i < k; ++i) {
    const OutletSpec& o = d.outlet(i);
    const double w0 = o.halfwidth(0.0);
    for (int b = 0; b <= 8; ++b) {
      const double off = w0 - windows_[i].collar * b / 8.0;
      expect_constant(o.centerline.position(0.0) - off * o.centerline.normal(0.0), right_constant_[i]);
      expect_constant(o.centerline.position(0.0) + off * o.centerline.normal(0.0), right_constant_[i] + eff_alpha[i]);
    }
  }
  compute_bounds();
}

std::optional<CarrierField::Location> CarrierField::locate(const Point& x) const {
  const auto& core = domain_->core();
  const int n = static_cast<int>(core.size());
  bool in_core = true;
  for (int j = 0; j < n && in_core; ++j) {
    const Point& a = core[j];
    const Point& b = core[(j + 1) % n];
    if (cross(b - a, x - a) < -1e-12 * (b - a).norm()) in_core = false;
  }
  if (in_core) return Location{-1, 0.0, 0.0};
  // second pass admits polygonal walls that bulge past the curved ones
  for (double slack : {1e-9, 0.05}) {
    for (int i = 0; i < domain_->k(); ++i) {
      const OutletSpec& o = domain_->outlet(i);
      const auto pr = o.centerline.project(x);
      if (!pr || pr->s < 0.0) continue;
      if (std::abs(pr->offset) <= o.halfwidth(pr->s) * (1.0 + slack) + 1e-12) return Location{i, pr->s, pr->offset};
    }
  }
  return std::nullopt;
}

double CarrierField::fan_profile(double theta, double* d1, double* d2) const {
  *d1 = 0.0;
  *d2 = 0.0;
  for (const Window& w : windows_) {
    const double d = wrap(theta - w.mid);
    if (d > w.lo && d < w.hi) {
      const double len = w.hi - w.lo;
      const Smooth3 q = quintic_step((d - w.lo) / len);
      *d1 = w.alpha * q.d1 / len;
      *d2 = w.alpha * q.d2 / (len * len);
      return w.c_right + w.alpha * q.value;
    }
  }
  // constant on the arc following the nearest window clockwise
  double best = std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (const Window& w : windows_) {
    const double gap = wrap_positive(theta - (w.mid + w.hi));
    if (gap < best) {
      best = gap;
      value = w.c_right + w.alpha;
    }
  }
  return value;
}

CarrierField::Psi CarrierField::fan(const Point& x) const {
  // f(theta) is blended into the constant centre_value_ over the disc of radius r0
  Psi out{centre_value_, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
  const Eigen::Vector2d d = x - origin_;
  const double r = d.norm();
  const Smooth3 chi = quintic_step(r / r0_);
  if (chi.value == 0.0) return out;
  const double th = std::atan2(d.y(), d.x());
  double f1 = 0.0, f2 = 0.0;
  const double f = fan_profile(th, &f1, &f2) - centre_value_;
  const double r2 = r * r, r4 = r2 * r2;
  const Eigen::Vector2d gth(-d.y() / r2, d.x() / r2);
  Eigen::Matrix2d hth;
  hth << 2.0 * d.x() * d.y() / r4, (d.y() * d.y() - d.x() * d.x()) / r4, (d.y() * d.y() - d.x() * d.x()) / r4,
      -2.0 * d.x() * d.y() / r4;
  const Eigen::Vector2d gg = f1 * gth;
  const Eigen::Matrix2d hg = f2 * outer(gth, gth) + f1 * hth;
  if (chi.value == 1.0 && chi.d1 == 0.0) {
    out.v += f;
    out.g = gg;
    out.H = hg;
    return out;
  }
  const Eigen::Vector2d e = d / r;
  const Eigen::Matrix2d hr = (Eigen::Matrix2d::Identity() - outer(e, e)) / r;
  const double c1 = chi.d1 / r0_, c2 = chi.d2 / (r0_ * r0_);
  out.v += chi.value * f;
  out.g = c1 * f * e + chi.value * gg;
  out.H = c2 * f * outer(e, e) + c1 * f * hr + c1 * (outer(e, gg) + outer(gg, e)) + chi.value * hg;
  return out;
}

CarrierField::Psi CarrierField::tube(int i, double s, double o, const Point&) const {
  const OutletSpec& spec = domain_->outlet(i);
  const Window& win = windows_[i];
  const double w = spec.halfwidth(s), w1 = spec.halfwidth.derivative(s), w2 = spec.halfwidth.second_derivative(s);
  const double W = w - delta_;
  const double r = (o + W) / (2.0 * W);
  const Smooth3 q = quintic_step(r);
  Psi out{win.c_right + win.alpha * q.value, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
  if (q.d1 == 0.0 && q.d2 == 0.0) return out;
  const double rs = -o * w1 / (2.0 * W * W);
  const double ro = 1.0 / (2.0 * W);
  const double rss = -o * w2 / (2.0 * W * W) + o * w1 * w1 / (W * W * W);
  const double rso = -w1 / (2.0 * W * W);
  const double a = win.alpha;
  const double ps = a * q.d1 * rs, po = a * q.d1 * ro;
  const double pss = a * (q.d2 * rs * rs + q.d1 * rss);
  const double pso = a * (q.d2 * rs * ro + q.d1 * rso);
  const double poo = a * q.d2 * ro * ro;

  const Eigen::Vector2d T = spec.centerline.tangent(s), N = spec.centerline.normal(s);
  const double kappa = spec.centerline.curvature(s), dkappa = spec.centerline.curvature_derivative(s);
  const double g = 1.0 - kappa * o;
  const Eigen::Vector2d gs = T / g;
  const Eigen::Matrix2d hs = kappa * (outer(N, T) + outer(T, N)) / (g * g) + dkappa * o * outer(T, T) / (g * g * g);
  const Eigen::Matrix2d ho = -kappa * outer(T, T) / g;
  out.g = ps * gs + po * N;
  out.H = pss * outer(gs, gs) + pso * (outer(gs, N) + outer(N, gs)) + poo * outer(N, N) + ps * hs + po * ho;
  return out;
}

// fan evaluated at the mouth point with the same relative offset: q = o w(0)/w(s)
CarrierField::Psi CarrierField::mouth_fan(int i, double s, double o) const {
  const OutletSpec& spec = domain_->outlet(i);
  const double w0 = spec.halfwidth(0.0), w = spec.halfwidth(s), w1 = spec.halfwidth.derivative(s),
               w2 = spec.halfwidth.second_derivative(s);
  const Eigen::Vector2d N0 = spec.centerline.normal(0.0);
  const Psi F = fan(spec.centerline.position(0.0) + (o * w0 / w) * N0);
  const double f1 = F.g.dot(N0), f2 = N0.dot(F.H * N0);

  const Eigen::Vector2d T = spec.centerline.tangent(s), N = spec.centerline.normal(s);
  const double kappa = spec.centerline.curvature(s), dkappa = spec.centerline.curvature_derivative(s);
  const double g = 1.0 - kappa * o;
  const Eigen::Vector2d gs = T / g;
  const Eigen::Matrix2d hs = kappa * (outer(N, T) + outer(T, N)) / (g * g) + dkappa * o * outer(T, T) / (g * g * g);
  const Eigen::Matrix2d ho = -kappa * outer(T, T) / g;
  const Eigen::Vector2d gq = w0 * (N / w - o * w1 / (w * w) * gs);
  const Eigen::Matrix2d hq = w0 * (ho / w - w1 / (w * w) * (outer(N, gs) + outer(gs, N)) +
                                   o * (2.0 * w1 * w1 / (w * w * w) - w2 / (w * w)) * outer(gs, gs) - o * w1 / (w * w) * hs);
  return Psi{F.v, f1 * gq, f2 * outer(gq, gq) + f1 * hq};
}

CarrierSample CarrierField::eval(const Point& x) const {
  const auto loc = locate(x);
  if (!loc) throw Error(ErrorCode::InvalidGeometry, "carrier evaluated outside the domain");
  Psi P;
  if (loc->outlet < 0) {
    P = fan(x);
  } else {
    const int i = loc->outlet;
    const OutletSpec& spec = domain_->outlet(i);
    P = tube(i, loc->s, loc->offset, x);
    const double Lb = spec.halfwidth(0.0);
    if (loc->s < Lb) {
      const Psi F = mouth_fan(i, loc->s, loc->offset);
      const Smooth3 beta = quintic_step(loc->s / Lb);
      const double b1 = beta.d1 / Lb, b2 = beta.d2 / (Lb * Lb);
      const Eigen::Vector2d T = spec.centerline.tangent(loc->s), N = spec.centerline.normal(loc->s);
      const double kappa = spec.centerline.curvature(loc->s), dkappa = spec.centerline.curvature_derivative(loc->s);
      const double o = loc->offset;
      const double g = 1.0 - kappa * o;
      const Eigen::Vector2d gs = T / g;
      const Eigen::Matrix2d hs =
          kappa * (outer(N, T) + outer(T, N)) / (g * g) + dkappa * o * outer(T, T) / (g * g * g);
      const double diff = P.v - F.v;
      const Eigen::Vector2d dg = P.g - F.g;
      Psi B;
      B.v = (1.0 - beta.value) * F.v + beta.value * P.v;
      B.g = (1.0 - beta.value) * F.g + beta.value * P.g + b1 * diff * gs;
      B.H = (1.0 - beta.value) * F.H + beta.value * P.H + b1 * (outer(gs, dg) + outer(dg, gs)) +
            diff * (b2 * outer(gs, gs) + b1 * hs);
      P = B;
    }
  }
  CarrierSample out;
  out.psi = P.v;
  out.a = Eigen::Vector2d(P.g.y(), -P.g.x());
  out.grad << P.H(1, 0), P.H(1, 1), -P.H(0, 0), -P.H(0, 1);
  return out;
}

void CarrierField::compute_bounds() {
  auto visit = [&](const Point& x) {
    const auto loc = locate(x);
    if (!loc) return;
    const CarrierSample c = eval(x);
    sup_a_ = std::max(sup_a_, c.a.norm());
    sup_grad_ = std::max(sup_grad_, c.grad.norm());
  };
  const auto& core = domain_->core();
  Point lo = core[0], hi = core[0];
  for (const Point& p : core) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  for (int a = 0; a <= 40; ++a)
    for (int b = 0; b <= 40; ++b) visit(lo + Point((hi - lo).x() * a / 40.0, (hi - lo).y() * b / 40.0));
  for (const auto& o : domain_->outlets())
    for (int a = 0; a <= 400; ++a) {
      const double s = 20.0 * a / 400.0;
      for (int b = -20; b <= 20; ++b)
        visit(o.centerline.position(s) + o.halfwidth(s) * (b / 20.0) * (1.0 - 1e-12) * o.centerline.normal(s));
    }
}

CarrierField build_carrier_2d(const DomainPtr& domain, const std::vector<double>& fluxes, std::optional<double> delta) {
  return CarrierField(domain, fluxes, delta.value_or(0.25 * domain->w_min()));
}

double segment_flux(const std::function<Eigen::Vector2d(const Point&)>& field, const Point& right, const Point& left,
                    double tol) {
  const Point d = left - right;
  const double L = d.norm();
  const Point n(d.y() / L, -d.x() / L);
  return quad::adaptive_gk([&](double sigma) { return field(right + d * (sigma / L)).dot(n); }, 0.0, L, tol);
}

Eigen::Vector2d AngleForm::operator()(const Point& x) const {
  const Point d = x - center_;
  const double r2 = d.squaredNorm();
  if (!(r2 > 0.0)) throw Error(ErrorCode::SingularPoint, "angle form evaluated at its centre");
  const double c = alpha_ / (kTwoPi * r2);
  return {-d.y() * c, d.x() * c};
}

AngleForm angle_form(const Point& center, double alpha) { return AngleForm(center, alpha); }

double loop_integral(const std::function<Eigen::Vector2d(const Point&)>& form, const std::function<Point(double)>& gamma,
                     const std::function<Point(double)>& dgamma, int n) {
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double u = static_cast<double>(j) / n;
    sum += form(gamma(u)).dot(dgamma(u));
  }
  return sum / n;
}

}  // namespace pflux
