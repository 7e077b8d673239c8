#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace pflux::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || it.key() == a;
    if (!ok) fail("unknown key '" + it.key() + "' in " + std::string(where));
  }
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

DomainPtr shape_from_json(const json& j) {
  only_keys(j, "domain", {"shape", "params"});
  const std::string name = j.at("shape").get<std::string>();
  const json params = j.value("params", json::object());
  if (name == "strip") {
    only_keys(params, "strip params", {"half_width", "core_half_length", "t_min"});
    return shapes::strip(value_or(params, "half_width", 1.0), value_or(params, "core_half_length", 1.0),
                         value_or(params, "t_min", 1.0));
  }
  if (name == "wavy_strip") {
    only_keys(params, "wavy_strip params", {"amplitude", "t_min"});
    return shapes::wavy_strip(value_or(params, "amplitude", 0.2), value_or(params, "t_min", 2.0));
  }
  if (name == "t_junction") {
    only_keys(params, "t_junction params", {"t_min"});
    return shapes::t_junction(value_or(params, "t_min", 1.0));
  }
  if (name == "s_channel") {
    only_keys(params, "s_channel params", {"curvature", "bend_length", "t_min"});
    return shapes::s_channel(value_or(params, "curvature", 0.25), value_or(params, "bend_length", 2.0),
                             value_or(params, "t_min", 1.0));
  }
  fail("unknown shape '" + name + "'");
}

HalfWidth halfwidth_from_json(const json& j) {
  only_keys(j, "halfwidth", {"base", "terms"});
  HalfWidth w;
  w.base = value_or(j, "base", 1.0);
  for (const json& t : j.value("terms", json::array())) {
    only_keys(t, "halfwidth term", {"amplitude", "frequency", "phase"});
    w.terms.push_back({value_or(t, "amplitude", 0.0), value_or(t, "frequency", 0.0), value_or(t, "phase", 0.0)});
  }
  return w;
}

std::vector<double> number_list(const json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be a list of numbers");
  std::vector<double> out;
  for (const json& v : j) {
    if (!v.is_number()) fail(std::string(what) + " must be a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

DomainPtr domain_from_json(const json& j) {
  try {
    if (j.contains("shape")) return shape_from_json(j);
    only_keys(j, "domain", {"core", "t_min", "outlets"});
    std::vector<Point> core;
    for (const json& v : j.at("core")) {
      if (!v.is_array() || v.size() != 2) fail("core vertices must be [x, y] pairs");
      core.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    std::vector<OutletSpec> outlets;
    for (const json& o : j.at("outlets")) {
      only_keys(o, "outlet", {"core_edge", "flux_index", "pieces", "halfwidth"});
      std::vector<CurvaturePiece> pieces;
      for (const json& pc : o.value("pieces", json::array())) {
        only_keys(pc, "centerline piece", {"length", "coeffs"});
        pieces.push_back({pc.at("length").get<double>(), number_list(pc.value("coeffs", json::array()), "coeffs")});
      }
      const int edge = o.at("core_edge").get<int>();
      if (edge < 0 || edge >= static_cast<int>(core.size())) fail("core_edge out of range");
      outlets.push_back(make_outlet(core, edge, std::move(pieces), halfwidth_from_json(o.value("halfwidth", json::object())),
                                    o.at("flux_index").get<int>()));
    }
    return std::make_shared<const ChannelDomain>(std::move(core), std::move(outlets), value_or(j, "t_min", 1.0));
  } catch (const json::exception& e) {
    fail(std::string("domain: ") + e.what());
  }
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir, std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  try {
    only_keys(j, "config",
              {"schema_version", "domain", "fluxes", "p", "t", "t_list", "h", "solver", "seed", "probes", "cauchy_tau",
               "excess_limit", "tau", "tolerance", "delta"});
    if (!j.contains("schema_version")) fail("missing schema_version");
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      fail("unsupported schema_version " + j.at("schema_version").dump());

    const json& d = j.at("domain");
    if (d.is_string()) {
      const std::filesystem::path dp = base_dir / d.get<std::string>();
      std::ifstream in(dp);
      if (!in) fail("cannot read domain file " + dp.string());
      try {
        c.domain_spec = json::parse(in);
      } catch (const json::parse_error& e) {
        fail(dp.string() + ": " + e.what());
      }
    } else {
      c.domain_spec = d;
    }
    c.domain = domain_from_json(c.domain_spec);

    c.fluxes = number_list(j.at("fluxes"), "fluxes");
    if (static_cast<int>(c.fluxes.size()) != c.domain->k())
      fail("expected " + std::to_string(c.domain->k()) + " fluxes, got " + std::to_string(c.fluxes.size()));
    double sum = 0.0, scale = 0.0;
    for (double a : c.fluxes) {
      sum += a;
      scale += std::abs(a);
    }
    if (std::abs(sum) > 1e-12 * std::max(1.0, scale))
      throw Error(ErrorCode::FluxImbalance, "fluxes sum to " + std::to_string(sum));

    c.p = value_or(j, "p", 2.0);
    if (j.contains("t")) c.t = j.at("t").get<double>();
    if (j.contains("t_list")) {
      c.t_list = number_list(j.at("t_list"), "t_list");
      if (c.t_list->empty()) fail("t_list is empty");
      for (std::size_t i = 1; i < c.t_list->size(); ++i)
        if (!((*c.t_list)[i] > (*c.t_list)[i - 1])) fail("t_list must be increasing");
    }
    c.h = value_or(j, "h", 0.125);
    if (!(c.h > 0.0)) fail("h must be positive");

    c.solver.p = c.p;
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      only_keys(s, "solver", {"epsilon", "picard_tol", "newton_tol", "max_iters", "convection"});
      if (s.contains("epsilon")) c.solver.epsilon = s.at("epsilon").get<double>();
      c.solver.picard_tol = value_or(s, "picard_tol", c.solver.picard_tol);
      c.solver.newton_tol = value_or(s, "newton_tol", c.solver.newton_tol);
      c.solver.max_iters = value_or(s, "max_iters", c.solver.max_iters);
      c.solver.include_convection = value_or(s, "convection", c.solver.include_convection);
    }
    c.solver.validate();

    c.seed = seed_override ? *seed_override : value_or<std::uint64_t>(j, "seed", 1);
    c.probes = value_or(j, "probes", 20);
    if (c.probes < 1) fail("probes must be positive");
    if (j.contains("cauchy_tau")) c.cauchy_tau = number_list(j.at("cauchy_tau"), "cauchy_tau");
    c.excess_limit = value_or(j, "excess_limit", 1.1);
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
  } catch (const json::exception& e) {
    fail(e.what());
  }

  c.resolved = j;
  c.resolved["domain"] = c.domain_spec;
  c.resolved["seed"] = c.seed;
  return c;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) fail("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path(), seed_override);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pflux::cli
