#pragma once

#include "pflux/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace pflux::cli {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  nlohmann::json resolved;  // config with the domain inlined and the seed applied
  nlohmann::json domain_spec;
  DomainPtr domain;
  std::vector<double> fluxes;
  double p = 2.0;
  std::optional<double> t;
  std::optional<std::vector<double>> t_list;
  double h = 0.125;
  SolverConfig solver;
  std::uint64_t seed = 1;
  int probes = 20;
  std::vector<double> cauchy_tau{2.0};
  double excess_limit = 1.1;
  std::optional<double> tau;
  std::optional<double> tolerance;
  std::optional<double> delta;
};

/// Throws Error(ConfigError) for unreadable files, malformed JSON and unknown keys,
/// FluxImbalance when the fluxes do not sum to zero.
RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

/// Either {"shape": name, "params": {...}} or an explicit core polygon with outlets.
DomainPtr domain_from_json(const nlohmann::json& j);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace pflux::cli
