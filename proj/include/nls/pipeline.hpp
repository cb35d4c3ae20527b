#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nls/config.hpp"
#include "nls/field_solver.hpp"
#include "nls/ground_state.hpp"
#include "nls/reduced_energy.hpp"

namespace nls {

// Config after sorting by λ, with profiles and fitted constants. Per-component config arrays
// (alpha_star, rho_offsets) are read in sorted order.
struct Pipeline {
  RunConfig config;
  GroupStructure groups;
  std::vector<RadialProfile> profiles;
  ReducedProblem problem;

  const SystemParams& system() const { return problem.system; }
};

// One solve per distinct (λ, μ) pair.
std::vector<RadialProfile> solve_profiles(const SystemParams& s, double tol);

Pipeline prepare(const RunConfig& config);

// Sorting, grouping and profiles only; constants left empty.
Pipeline prepare_profiles(const RunConfig& config);

ValidationInputs validation_inputs(const Pipeline& p);
ValidationReport validate(const Pipeline& p);

// α* from the config, or the balanced angles when none is given.
std::vector<double> scaled_angles(const Pipeline& p);

// Radii ρ*θlogθ + offsets, or the fixed radius override of the config.
SpikeConfiguration solver_configuration(const Pipeline& p);

struct SolveResult {
  SpikeConfiguration configuration;
  Grid grid;
  Fields ansatz, correction, u;
  LinearCorrection linear;
  NewtonReport newton;
  Diagnostics diag;
  double box_margin = 0.0;
};

SolveResult solve(const Pipeline& p);

struct RunManifest {
  std::string digest;
  std::string command;
  std::vector<std::string> inputs, outputs;
  std::string version;
  double wall_time = 0.0;
};

nlohmann::json to_json(const RunManifest& m);

// JSON text with every floating-point number printed at 17 significant digits.
std::string dump_json(const nlohmann::json& j, int indent = 2);
void write_json(const nlohmann::json& j, const std::string& path);

const char* tool_version();

}  // namespace nls
