// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "pflux/continuation.hpp"
#include "pflux/spherical.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace pflux;
using namespace pflux::shapes;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// States kept for the flux conservation check.
std::vector<FlowState> g_states;

// u = U (1 - |y|^{p'}) on |y| < 1 with unit flux.
double unit_flux_profile(double p, double y) {
  const double q = p / (p - 1.0);
  const double U = (q + 1.0) / (2.0 * q);
  return U * (1.0 - std::pow(std::abs(y), q));
}

Outcome poiseuille_recovery() {
  const DomainPtr d = strip();
  const CutDomain cd = cut_domain(d, 8.0);
  const auto mesh = std::make_shared<const Mesh>(mesh_cut_domain(cd, 1.0 / 16.0));
  const CarrierField carrier = build_carrier_2d(d, {-1.0, 1.0});
  Outcome o{true, ""};
  for (double p : {2.0, 3.0}) {
    const PoiseuilleProfile prof = poiseuille_with_flux(p, 1.0, 1.0);
    double oracle_gap = 0.0;
    for (int j = 0; j <= 200; ++j) {
      const double y = -1.0 + j / 100.0;
      oracle_gap = std::max(oracle_gap, std::abs(prof(y) - unit_flux_profile(p, y)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    FlowState st = solve_truncated(cd, mesh, carrier, SolverConfig{.p = p});
    const double secs = since(t0);
    // mid third of [-9, 9] is |x| <= 3, i.e. Omega_2
    const PoiseuilleComparison c = compare_with_poiseuille(st, prof, 2.0);
    const double tol = p == 2.0 ? 0.02 : 0.03;
    const bool ok = c.relative_l2 <= tol && secs <= 60.0 && oracle_gap <= 1e-12;
    o.pass = o.pass && ok;
    o.detail += fmt("p=%g: rel L2 %.3e (<= %.2f), %.1f s; ", p, c.relative_l2, tol, secs);
    g_states.push_back(std::move(st));
  }
  return o;
}

Outcome carrier_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    DomainPtr d;
    std::vector<double> f;
  };
  double flux_err = 0.0, wall = 0.0, div = 0.0;
  for (const Case& cs : {Case{strip(), {-1.0, 1.0}}, Case{t_junction(), {1.0, 2.0, -3.0}}}) {
    const CarrierField c = build_carrier_2d(cs.d, cs.f);
    const CutDomain cd = cut_domain(cs.d, 8.0);
    std::vector<CrossSection> sections;
    for (int i = 0; i < cs.d->k(); ++i)
      for (double s : cd.outlets[i].snaps) sections.push_back(cross_section(*cs.d, i, s));
    for (const CrossSection& x : sections) {
      const double alpha = cs.f[cs.d->outlet(x.outlet).flux_index];
      flux_err = std::max(flux_err, std::abs(segment_flux(c, x.right, x.left) - alpha));
    }

    const std::size_t n = cd.boundary.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (cd.tags[j].kind != BoundaryKind::Wall) continue;
      for (int m = 0; m < 8; ++m)
        wall = std::max(wall, c(cd.boundary[j] + (cd.boundary[(j + 1) % n] - cd.boundary[j]) * (m / 8.0)).norm());
    }
    for (const OutletSpec& o : cs.d->outlets())
      for (double s = 0.0; s <= 8.0; s += 0.01) {
        wall = std::max(wall, c(o.right_wall(s)).norm());
        wall = std::max(wall, c(o.left_wall(s)).norm());
      }

    Point lo = cd.boundary[0], hi = lo;
    for (const Point& p : cd.boundary) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
    const double h = 1e-6;
    for (int count = 0; count < 5000;) {
      const Point p(ux(rng), uy(rng));
      if (!cd.contains(p) || !c.locate(p)) continue;
      ++count;
      const double dx = (c(p + Point(h, 0)) - c(p - Point(h, 0))).x() / (2 * h);
      const double dy = (c(p + Point(0, h)) - c(p - Point(0, h))).y() / (2 * h);
      div = std::max(div, std::abs(dx + dy) / c.sup_grad());
    }
  }
  const double secs = since(t0);
  return {flux_err <= 1e-8 && wall <= 1e-12 && div <= 1e-6 && secs <= 5.0,
          fmt("section flux error %.1e, wall trace %.1e, FD divergence %.1e relative, %.1f s", flux_err, wall, div, secs)};
}

Outcome estimate_i() {
  struct Case {
    const char* name;
    DomainPtr d;
    std::vector<double> f;
  };
  Outcome o{true, ""};
  for (const Case& cs : {Case{"strip", strip(), {-1.0, 1.0}}, Case{"s_channel", s_channel(), {-1.0, 1.0}},
                         Case{"t_junction", t_junction(), {1.0, 1.0, -2.0}}}) {
    ProbeOptions opts;
    opts.count = 20;
    const CarrierReport r = verify_carrier(build_carrier_2d(cs.d, cs.f), 3.0, {2.0, 4.0, 8.0, 16.0}, opts);
    o.pass = o.pass && r.spread_i <= 3.0;
    o.detail += fmt("%s spread %.2f; ", cs.name, r.spread_i);
  }
  return o;
}

double gap_oracle(const Eigen::Matrix2d& x, const Eigen::Matrix2d& y, double p) {
  const Eigen::Matrix2d sx = std::pow(x.norm(), p - 2.0) * x, sy = std::pow(y.norm(), p - 2.0) * y;
  return ((sx - sy).array() * (x - y).array()).sum();
}

Outcome monotonicity() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  auto gaussian = [&] {
    Eigen::Matrix2d m;
    m << g(rng), g(rng), g(rng), g(rng);
    return m;
  };
  auto tensor = [&] { return Eigen::Matrix2d(std::pow(10.0, scale(rng)) * gaussian()); };
  Outcome o{true, ""};
  for (double p : {2.0, 3.0, 4.0}) {
    double c = 1e300, mismatch = 0.0;
    bool zero_ok = true;
    for (int i = 0; i < 100000; ++i) {
      const Eigen::Matrix2d x = tensor();
      // every tenth pair is a small perturbation of x
      const Eigen::Matrix2d y = i % 10 == 0 ? Eigen::Matrix2d(x + 1e-4 * x.norm() * gaussian()) : tensor();
      const MonotonicityGap m = monotonicity_gap(x, y, p);
      const double ref = gap_oracle(x, y, p);
      mismatch = std::max(mismatch, std::abs(m.gap - ref) / std::max(std::abs(ref), 1e-300));
      c = std::min(c, m.gap / m.comparator);
      zero_ok = zero_ok && monotonicity_gap(x, x, p).gap == 0.0;
    }
    // <S(x) - S(y), x - y> >= 2^{2-p} |x - y|^p
    const bool ok = c > 0.0 && c >= std::pow(2.0, 2.0 - p) * (1.0 - 1e-9) && zero_ok && mismatch <= 1e-9;
    o.pass = o.pass && ok;
    o.detail += fmt("p=%g: c = %.3f; ", p, c);
  }
  return o;
}

SweepResult g_sweep;
bool g_sweep_ok = false;

void run_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  g_sweep = run_truncation_sequence(s_channel(), {-1.0, 1.0}, {4.0, 8.0, 16.0}, SolverConfig{.p = 3.0}, SweepOptions{});
  g_sweep_ok = since(t0) <= 600.0;
  for (const FlowState& s : g_sweep.states) g_states.push_back(s);
}

Outcome growth_bound() {
  const GrowthReport& r = g_sweep.report;
  return {g_sweep_ok && r.max_excess <= 1.1,
          fmt("c1 = %.3f, c2 = %.3f, max y/(c1 tau + c2) = %.3f (<= 1.1)", r.c1, r.c2, r.max_excess)};
}

Outcome cauchy() {
  double d[2] = {-1.0, -1.0};
  for (const GrowthRow& row : g_sweep.report.rows)
    if (row.tau == 2.0 && row.cauchy) d[row.t == 8.0 ? 0 : 1] = *row.cauchy;
  const double d84 = subdomain_distance(g_sweep.states[0], g_sweep.states[1], 2.0);
  const double d168 = subdomain_distance(g_sweep.states[1], g_sweep.states[2], 2.0);
  const bool consistent = std::abs(d[0] - d84) <= 1e-12 * d84 && std::abs(d[1] - d168) <= 1e-12 * d168;
  return {consistent && d168 <= d84, fmt("|v16 - v8| = %.4e, |v8 - v4| = %.4e on Omega_2", d168, d84)};
}

Outcome korn() {
  const auto mesh = std::make_shared<const Mesh>(mesh_cut_domain(cut_domain(s_channel(), 4.0), 0.25));
  const KornPoincare k = korn_poincare_check(mesh, 1000, 3);
  return {k.samples >= 1000 && k.max_korn <= 1.0 + 1e-10, fmt("%d samples, max |grad v|^2 / 2|Dv|^2 = %.12f", k.samples, k.max_korn)};
}

Outcome spherical() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Vec3> pts{{1, 0, 0}, {0, 1, 0}, Vec3(0, -1, 1).normalized()};
  const std::vector<double> alpha{1.0, 1.0, -2.0};
  const SphericalCarrier3D s = build_spherical_carrier(pts, alpha);
  // circle of angular radius r around p, positively oriented, radius modulated by (1 + w sin 3 phi)
  auto loop = [&](int i, double r, double w) {
    const auto [u1, u2] = tangent_frame(pts[i]);
    const int n = 8192;
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / n;
      const double rr = r * (1.0 + w * std::sin(3.0 * phi)), dr = r * w * 3.0 * std::cos(3.0 * phi);
      const Vec3 dir = std::cos(phi) * u1 + std::sin(phi) * u2, ddir = -std::sin(phi) * u1 + std::cos(phi) * u2;
      const Vec3 x = std::cos(rr) * pts[i] + std::sin(rr) * dir;
      const Vec3 dx = dr * (-std::sin(rr) * pts[i] + std::cos(rr) * dir) + std::sin(rr) * ddir;
      sum += s.btilde(x).dot(dx);
    }
    return sum * 2.0 * std::numbers::pi / n;
  };
  double loop_err = 0.0, homotopy = 0.0, cap_err = 0.0;
  for (int i = 0; i < 2; ++i) loop_err = std::max(loop_err, std::abs(loop(i, 0.3, 0.0) - alpha[i]));
  for (int i = 0; i < 3; ++i) {
    homotopy = std::max(homotopy, std::abs(loop(i, 0.3, 0.0) - loop(i, 0.2, 0.4)));
    homotopy = std::max(homotopy, std::abs(loop(i, 0.3, 0.0) - loop(i, 0.5, -0.3)));
    cap_err = std::max(cap_err, std::abs(s.cap_flux(i, 0.35) - alpha[i]));
  }
  const double secs = since(t0);
  return {loop_err <= 1e-8 && cap_err <= 1e-6 && homotopy <= 1e-8 && secs <= 10.0,
          fmt("loop error %.1e, cap flux error %.1e, homotopic loops %.1e, %.1f s", loop_err, cap_err, homotopy, secs)};
}

Outcome flux_conservation() {
  double worst = 0.0;
  for (const FlowState& st : g_states) {
    const FluxAudit a = flux_audit(st, snapped_sections(*st.mesh));
    worst = std::max({worst, a.max_pairwise, a.max_relative});
  }
  return {!g_states.empty() && worst <= 1e-3, fmt("%zu converged states, max relative section flux deviation %.2e",
                                                  g_states.size(), worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"1 Poiseuille recovery", poiseuille_recovery},
      {"2 carrier exactness", carrier_exactness},
      {"3 estimate i) boundedness", estimate_i},
      {"4 monotonicity inequality", monotonicity},
      {"5 growth bound proxy", [] { run_sweep(); return growth_bound(); }},
      {"6 truncation Cauchy property", cauchy},
      {"7 Korn inequality", korn},
      {"8 spherical carrier", spherical},
      {"9 flux conservation of solves", flux_conservation},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
