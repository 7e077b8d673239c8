#include "app.hpp"

#include "config.hpp"
#include "pflux/continuation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

namespace pflux::cli {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig cfg;
  fs::path out;
  std::string command;
  std::ostream* log = nullptr;  // null when quiet
};

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonlinearDivergence:
    case ErrorCode::NumericalBlowup:
    case ErrorCode::LinearSolveFailure:
    case ErrorCode::InvalidProbe:
    case ErrorCode::SingularPoint:
      return kNumericalFailure;
    default:
      return kConfigError;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ofstream open_out(const Context& ctx, const std::string& name) {
  std::ofstream f(ctx.out / name);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + (ctx.out / name).string());
  return f;
}

void write_manifest(const Context& ctx, const std::string& status, int code, const ojson& results,
                    const std::vector<std::string>& files) {
  ojson m;
  m["schema_version"] = kSchemaVersion;
  m["command"] = ctx.command;
  m["status"] = status;
  m["exit_code"] = code;
  m["config_hash"] = hex64(fnv1a(ctx.cfg.resolved.dump()));
  m["domain_hash"] = hex64(fnv1a(ctx.cfg.domain_spec.dump()));
  m["seed"] = ctx.cfg.seed;
  m["config"] = ojson::parse(ctx.cfg.resolved.dump());
  m["files"] = files;
  m["results"] = results;
  open_out(ctx, "manifest.json") << m.dump(2) << '\n';
}

ojson history_json(const std::vector<IterationRecord>& h) {
  ojson a = ojson::array();
  for (const IterationRecord& r : h)
    a.push_back({{"iter", r.iter},
                 {"phase", r.phase == Linearization::Picard ? "picard" : "newton"},
                 {"residual", r.residual},
                 {"step", r.step}});
  return a;
}

void write_history(const Context& ctx, const std::vector<IterationRecord>& h) {
  FlowState s;
  s.history = h;
  std::ofstream f = open_out(ctx, "convergence.csv");
  write_convergence_csv(s, f);
}

int carrier_verify(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const std::vector<double> t_list = c.t_list.value_or(std::vector<double>{2.0, 4.0, 8.0, 16.0});
  const CarrierField carrier = build_carrier_2d(c.domain, c.fluxes, c.delta);

  std::vector<CrossSection> sections;
  const CutDomain cd = cut_domain(c.domain, t_list.back());
  for (int i = 0; i < c.domain->k(); ++i)
    for (double s : cd.outlets[i].snaps) sections.push_back(cross_section(*c.domain, i, s));
  const FluxAudit audit = flux_audit(carrier, sections);

  ProbeOptions po;
  po.count = c.probes;
  po.seed = c.seed;
  po.h = c.h;
  const CarrierReport rep = verify_carrier(carrier, c.p, t_list, po);

  ojson rows = ojson::array();
  for (const CarrierRow& r : rep.rows)
    rows.push_back({{"t", r.t},
                    {"ratio_i", r.ratio_i},
                    {"annulus_ii", r.annulus_ii},
                    {"ratio_iii", r.ratio_iii},
                    {"max_probe_divergence", r.max_probe_divergence}});
  ojson results{{"p", rep.p},
                {"spread_i", rep.spread_i},
                {"bounded", rep.bounded},
                {"flux_max_relative", audit.max_relative},
                {"flux_max_pairwise", audit.max_pairwise},
                {"rows", rows}};
  {
    std::ofstream f = open_out(ctx, "carrier.csv");
    write_carrier_csv(rep, f);
  }
  open_out(ctx, "carrier.json") << results.dump(2) << '\n';
  const int code = rep.bounded ? kOk : kChecksFailed;
  write_manifest(ctx, rep.bounded ? "ok" : "checks_failed", code, results, {"carrier.csv", "carrier.json"});
  if (ctx.log)
    *ctx.log << "carrier-verify: " << rep.rows.size() << " rows, spread " << rep.spread_i
             << (rep.bounded ? ", bounded" : ", NOT bounded") << ", section flux error " << audit.max_relative << '\n';
  return code;
}

double solve_t(const RunConfig& c) {
  if (c.t) return *c.t;
  if (c.t_list) return c.t_list->back();
  return 8.0;
}

int solve(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const double t = solve_t(c);
  const CutDomain cd = cut_domain(c.domain, t);
  const auto mesh = std::make_shared<const Mesh>(mesh_cut_domain(cd, c.h));
  const CarrierField carrier = build_carrier_2d(c.domain, c.fluxes, c.delta);
  const auto t0 = std::chrono::steady_clock::now();
  FlowState st;
  try {
    st = solve_truncated(cd, mesh, carrier, c.solver);
  } catch (const SolveFailure& e) {
    write_history(ctx, e.history());
    write_manifest(ctx, "failed", kNumericalFailure,
                   {{"t", t}, {"error", e.what()}, {"history", history_json(e.history())}}, {"convergence.csv"});
    throw;
  }
  const double secs = seconds_since(t0);

  const FluxAudit audit = flux_audit(st, snapped_sections(*mesh));
  {
    std::ofstream f = open_out(ctx, "solution.vtk");
    write_vtk(st, f);
  }
  {
    std::ofstream f = open_out(ctx, "convergence.csv");
    write_convergence_csv(st, f);
  }
  {
    std::ofstream f = open_out(ctx, "fluxes.csv");
    f << "outlet,s,flux,error\n" << std::setprecision(12);
    std::size_t j = 0;
    for (int i = 0; i < mesh->domain->k(); ++i)
      for (double s : mesh->snaps[i]) {
        f << i << ',' << s << ',' << audit.flux[j] << ',' << audit.error[j] << '\n';
        ++j;
      }
  }
  ojson results{{"t", t},
                {"vertices", mesh->num_vertices()},
                {"triangles", mesh->num_triangles()},
                {"unknowns", 2 * st.space->num_dofs() + st.space->num_vertices()},
                {"epsilon", st.epsilon},
                {"iterations", static_cast<int>(st.history.size()) - 1},
                {"residual", st.history.empty() ? 0.0 : st.history.back().residual},
                {"energy_residual", energy_residual(st)},
                {"outlet_flux", st.outlet_flux},
                {"flux_max_relative", audit.max_relative},
                {"flux_max_pairwise", audit.max_pairwise}};
  write_manifest(ctx, "ok", kOk, results, {"solution.vtk", "convergence.csv", "fluxes.csv"});
  if (ctx.log)
    *ctx.log << "solve: t = " << t << ", " << results["unknowns"] << " unknowns, " << results["iterations"]
             << " iterations, residual " << results["residual"] << ", " << secs << " s\n";
  return kOk;
}

void write_truncation_csv(const GrowthReport& rep, std::ostream& out) {
  out << "t,unknowns,iterations,residual,max_pairwise";
  const std::size_t k = rep.stats.empty() ? 0 : rep.stats.front().flux_error.size();
  for (std::size_t i = 0; i < k; ++i) out << ",flux_error_" << i;
  out << '\n' << std::setprecision(10);
  for (const TruncationStats& s : rep.stats) {
    out << s.t << ',' << s.unknowns << ',' << s.iterations << ',' << s.residual << ',' << s.max_pairwise;
    for (double e : s.flux_error) out << ',' << e;
    out << '\n';
  }
}

ojson growth_json(const GrowthReport& rep) {
  ojson stats = ojson::array();
  for (const TruncationStats& s : rep.stats)
    stats.push_back({{"t", s.t},
                     {"unknowns", s.unknowns},
                     {"iterations", s.iterations},
                     {"residual", s.residual},
                     {"flux_error", s.flux_error},
                     {"max_pairwise", s.max_pairwise}});
  return {{"p", rep.p},
          {"t_list", rep.t_list},
          {"c1", rep.c1},
          {"c2", rep.c2},
          {"max_excess", rep.max_excess},
          {"max_growth", rep.max_growth},
          {"growth_bounded", rep.growth_bounded},
          {"cauchy_decreasing", rep.cauchy_decreasing},
          {"complete", rep.complete},
          {"stats", stats}};
}

void write_growth(const Context& ctx, const GrowthReport& rep) {
  std::ofstream g = open_out(ctx, "growth.csv");
  write_growth_csv(rep, g);
  std::ofstream tr = open_out(ctx, "truncation.csv");
  write_truncation_csv(rep, tr);
}

int sweep(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const std::vector<double> t_list = c.t_list.value_or(std::vector<double>{4.0, 8.0, 16.0});
  SweepOptions opt;
  opt.h = c.h;
  opt.excess_limit = c.excess_limit;
  opt.cauchy_tau = c.cauchy_tau;
  opt.seed = c.seed;
  SweepResult r;
  try {
    r = run_truncation_sequence(c.domain, c.fluxes, t_list, c.solver, opt);
  } catch (const SweepFailure& e) {
    write_growth(ctx, e.partial().report);
    ojson results = growth_json(e.partial().report);
    results["error"] = e.what();
    write_manifest(ctx, "failed", kNumericalFailure, results, {"growth.csv", "truncation.csv"});
    throw;
  }
  write_growth(ctx, r.report);
  const bool pass = r.report.growth_bounded && r.report.cauchy_decreasing;
  const int code = pass ? kOk : kChecksFailed;
  write_manifest(ctx, pass ? "ok" : "checks_failed", code, growth_json(r.report), {"growth.csv", "truncation.csv"});
  if (ctx.log) {
    for (const TruncationStats& s : r.report.stats)
      *ctx.log << "sweep: t = " << s.t << ", " << s.unknowns << " unknowns, " << s.iterations << " iterations, "
               << s.seconds << " s\n";
    *ctx.log << "sweep: c1 = " << r.report.c1 << ", c2 = " << r.report.c2 << ", max excess " << r.report.max_excess
             << (r.report.growth_bounded ? " (bounded)" : " (NOT bounded)")
             << (r.report.cauchy_decreasing ? ", Cauchy distances decreasing" : ", Cauchy distances NOT decreasing")
             << '\n';
  }
  return code;
}

struct StripShape {
  int right = -1;
  double half_width = 0.0;
  double core_half_length = 0.0;
};

StripShape check_strip(const ChannelDomain& d) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::ConfigError, "benchmark-poiseuille needs a straight strip: " + why); };
  if (d.k() != 2) throw bad("two outlets required");
  StripShape s;
  for (int i = 0; i < 2; ++i) {
    const OutletSpec& o = d.outlet(i);
    if (!o.halfwidth.terms.empty()) throw bad("constant half-width required");
    if (o.centerline.max_abs_curvature() != 0.0) throw bad("straight outlets required");
    const Point tan = o.centerline.tangent(0.0), start = o.centerline.position(0.0);
    if (std::abs(tan.y()) > 1e-12 || std::abs(start.y()) > 1e-12) throw bad("outlets must lie on the x axis");
    if (tan.x() > 0.0) {
      s.right = i;
      s.core_half_length = start.x();
    }
  }
  if (s.right < 0) throw bad("no outlet points along +x");
  s.half_width = d.outlet(s.right).halfwidth.base;
  if (d.outlet(1 - s.right).halfwidth.base != s.half_width) throw bad("equal half-widths required");
  for (const Point& v : d.core())
    if (std::abs(std::abs(v.x()) - s.core_half_length) > 1e-12 || std::abs(std::abs(v.y()) - s.half_width) > 1e-12)
      throw bad("core must be the rectangle between the outlets");
  return s;
}

int benchmark_poiseuille(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const StripShape shape = check_strip(*c.domain);
  const double t = solve_t(c);
  const double tau = c.tau ? *c.tau : std::floor((shape.core_half_length + t) / 3.0 - shape.core_half_length);
  const double tol = c.tolerance ? *c.tolerance : (c.p <= 2.0 ? 0.02 : 0.03);

  const CutDomain cd = cut_domain(c.domain, t);
  const auto mesh = std::make_shared<const Mesh>(mesh_cut_domain(cd, c.h));
  if (mesh->snap_index(shape.right, tau) < 0)
    throw Error(ErrorCode::SectionNotAligned, "tau = " + std::to_string(tau) + " is not a snapped section");
  const CarrierField carrier = build_carrier_2d(c.domain, c.fluxes, c.delta);
  const auto t0 = std::chrono::steady_clock::now();
  FlowState st;
  try {
    st = solve_truncated(cd, mesh, carrier, c.solver);
  } catch (const SolveFailure& e) {
    write_history(ctx, e.history());
    write_manifest(ctx, "failed", kNumericalFailure, {{"t", t}, {"error", e.what()}}, {"convergence.csv"});
    throw;
  }
  const double secs = seconds_since(t0);

  const double alpha = c.fluxes[c.domain->outlet(shape.right).flux_index];
  if (alpha < 0.0) st.velocity = -st.velocity;
  const PoiseuilleProfile prof = poiseuille_with_flux(c.p, shape.half_width, std::abs(alpha));
  const PoiseuilleComparison cmp = compare_with_poiseuille(st, prof, tau);

  std::set<int> dofs;
  for (const Edge& e : mesh->section(shape.right, tau)) {
    dofs.insert(e[0]);
    dofs.insert(e[1]);
    dofs.insert(st.space->edge_dof(e[0], e[1]));
  }
  std::vector<int> order(dofs.begin(), dofs.end());
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return st.space->dof_point(a).y() < st.space->dof_point(b).y(); });
  {
    std::ofstream f = open_out(ctx, "poiseuille.csv");
    f << "y,exact,numeric\n" << std::setprecision(12);
    for (int d : order) {
      const double y = st.space->dof_point(d).y();
      f << y << ',' << prof(y) << ',' << st.velocity[d] << '\n';
    }
  }
  {
    std::ofstream f = open_out(ctx, "convergence.csv");
    write_convergence_csv(st, f);
  }
  const bool pass = cmp.relative_l2 <= tol;
  const int code = pass ? kOk : kChecksFailed;
  ojson results{{"t", t},
                {"tau", tau},
                {"p", c.p},
                {"pressure_gradient", prof.G},
                {"profile_flux", prof.flux},
                {"area", cmp.area},
                {"relative_l2", cmp.relative_l2},
                {"tolerance", tol},
                {"pass", pass},
                {"unknowns", 2 * st.space->num_dofs() + st.space->num_vertices()},
                {"iterations", cmp.iterations}};
  write_manifest(ctx, pass ? "ok" : "checks_failed", code, results, {"poiseuille.csv", "convergence.csv"});
  if (ctx.log)
    *ctx.log << "benchmark-poiseuille: p = " << c.p << ", relative L2 error " << cmp.relative_l2 << " on |x| <= "
             << shape.core_half_length + tau << " (tolerance " << tol << "), " << secs << " s\n";
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Steady power-law flows in channel domains with outlets to infinity"};
  app.name("pflux");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "pflux-out";
  std::uint64_t seed = 0;
  bool quiet = false;
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const Sub subs[] = {
      {"carrier-verify", "Check the flux carrier estimates on a family of truncations", carrier_verify},
      {"solve", "Solve on one truncated domain", solve},
      {"sweep", "Solve on increasing truncations and check growth and Cauchy behaviour", sweep},
      {"benchmark-poiseuille", "Compare a strip solution with the exact power-law Poiseuille profile",
       benchmark_poiseuille},
  };
  std::vector<CLI::App*> handles;
  std::vector<CLI::Option*> seed_opts;
  for (const Sub& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config", config_path, "JSON run configuration")->required();
    sc->add_option("--out", out_dir, "Output directory")->capture_default_str();
    seed_opts.push_back(sc->add_option("--seed", seed, "Overrides the seed of the configuration"));
    sc->add_flag("--quiet", quiet, "No progress output");
    handles.push_back(sc);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  for (std::size_t i = 0; i < handles.size(); ++i) {
    if (!handles[i]->parsed()) continue;
    Context ctx;
    ctx.command = subs[i].name;
    ctx.out = out_dir;
    ctx.log = quiet ? nullptr : &out;
    try {
      std::optional<std::uint64_t> seed_override;
      if (seed_opts[i]->count() > 0) seed_override = seed;
      ctx.cfg = load_config(config_path, seed_override);
      fs::create_directories(ctx.out);
      return subs[i].fn(ctx);
    } catch (const Error& e) {
      err << "pflux " << ctx.command << ": " << e.what() << '\n';
      return exit_for(e.code());
    } catch (const fs::filesystem_error& e) {
      err << "pflux " << ctx.command << ": " << e.what() << '\n';
      return kConfigError;
    }
  }
  return kConfigError;
}

}  // namespace pflux::cli
