#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "nls/spike_geometry.hpp"

namespace nls {

struct GridSpec {
  double L = 20.0;
  double h = 0.1;
};

struct Tolerances {
  double ground_state = 1e-10;
  double newton = 1e-8;
  int newton_max_iter = 30;
  double krylov = 1e-10;
  double eigen_margin = 1e-2;
};

// Everything a pipeline run reads from the config file.
struct RunConfig {
  SystemParams system;
  int theta = 4;
  double rho_star = 0.8;
  std::vector<double> alpha_star;   // empty means balanced angles
  std::vector<double> rho_offsets;  // per-component O(1) radius shifts
  double rho_override = 0.0;        // when > 0, every ρ_j equals this value
  GridSpec grid;
  Tolerances tol;
  double dprime_factor = 1.0;
  double epsilon = 1e-2;
  std::uint64_t seed = 0;
};

// Accepts beta either as the strict upper triangle (row i lists β_{i,i+1..d-1})
// or as the full symmetric matrix.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

// FNV-1a 64 digest of the canonical JSON dump.
std::string config_digest(const RunConfig& c);

}  // namespace nls
