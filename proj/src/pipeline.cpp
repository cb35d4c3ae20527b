#include "nls/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <tuple>
#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nls/error.hpp"

namespace nls {

std::vector<RadialProfile> solve_profiles(const SystemParams& s, double tol) {
  std::map<std::pair<double, double>, RadialProfile> cache;
  std::vector<RadialProfile> out;
  for (int j = 0; j < s.d; ++j) {
    const auto key = std::make_pair(s.lambda[j], s.mu[j]);
    auto it = cache.find(key);
    if (it == cache.end()) {
      spdlog::info("ground state lambda={} mu={} dim={}", s.lambda[j], s.mu[j], s.dim);
      const ScalarParams sp{s.lambda[j], s.mu[j], s.dim};
      it = cache.emplace(key, solve_ground_state(sp, default_r_max(sp.lambda), tol)).first;
    }
    out.push_back(it->second);
  }
  return out;
}

Pipeline prepare_profiles(const RunConfig& config) {
  Pipeline p;
  p.config = config;
  const auto original = group_components(config.system.lambda);
  p.problem.system = permute_system(config.system, original.permutation);
  p.groups = group_components(p.problem.system.lambda);
  p.groups.permutation = original.permutation;
  p.problem.groups = p.groups;
  p.profiles = solve_profiles(p.problem.system, config.tol.ground_state);
  for (const auto& w : p.profiles) p.problem.energies.push_back(w.energy);
  return p;
}

Pipeline prepare(const RunConfig& config) {
  Pipeline p = prepare_profiles(config);
  spdlog::info("fitting interaction constants (k = {})", p.groups.k);
  ConstantsOptions opts;
  opts.dprime_factor = config.dprime_factor;
  p.problem.constants = constants_from_system(p.problem.system, p.groups, p.profiles, opts);
  return p;
}

ValidationInputs validation_inputs(const Pipeline& p) {
  const auto& s = p.system();
  ValidationInputs in;
  in.eigen_margin = p.config.tol.eigen_margin;
  in.coupling_eigen.assign(s.d, std::vector<double>(s.d, 0.0));
  // Keyed on (λ_target, λ_weight, μ_weight) so repeated pairs are solved once.
  std::map<std::tuple<double, double, double>, double> cache;
  for (int i = 0; i < s.d; ++i)
    for (int j = 0; j < s.d; ++j) {
      if (i == j) continue;
      const auto key = std::make_tuple(s.lambda[j], s.lambda[i], s.mu[i]);
      auto it = cache.find(key);
      if (it == cache.end())
        it = cache.emplace(key, coupling_eigenvalue(s.lambda[j], p.profiles[i])).first;
      in.coupling_eigen[i][j] = it->second;
    }
  for (int j : s.m_star()) in.sum_B_delta += p.problem.constants.B[j] * s.delta[j];
  if (!p.problem.constants.C.empty() && !p.problem.constants.D.empty())
    in.jump_threshold = jumping_threshold(p.problem.constants).coefficient_root;
  return in;
}

ValidationReport validate(const Pipeline& p) {
  return validate_hypotheses(p.system(), p.groups, validation_inputs(p));
}

std::vector<double> scaled_angles(const Pipeline& p) {
  if (!p.config.alpha_star.empty()) return p.config.alpha_star;
  return balanced_angles(p.system(), p.groups);
}

SpikeConfiguration solver_configuration(const Pipeline& p) {
  const auto& s = p.system();
  const int theta = p.config.theta;
  const auto astar = scaled_angles(p);
  if (p.config.rho_override > 0) {
    std::vector<double> rho(s.d, p.config.rho_override);
    for (int j = 0; j < s.d && j < static_cast<int>(p.config.rho_offsets.size()); ++j)
      rho[j] += p.config.rho_offsets[j];
    std::vector<double> alpha;
    for (int j = 0; j + 1 < s.d; ++j) alpha.push_back(astar[j] / theta);
    return make_configuration(s.dim, theta, rho, alpha);
  }
  return build_configuration(s, theta, p.config.rho_star, astar, p.config.rho_offsets);
}

SolveResult solve(const Pipeline& p) {
  const auto& s = p.system();
  if (s.dim != 2) throw Error("bad-config", "the field solver supports dim = 2 only");
  SolveResult r;
  r.configuration = solver_configuration(p);
  r.grid = Grid::make(p.config.grid.L, p.config.grid.h);
  r.box_margin = check_grid(s, r.configuration, r.grid);
  if (r.box_margin < 0)
    spdlog::warn("box margin {:.3g} below the recommended 12/sqrt(lambda_min)", r.box_margin);

  spdlog::info("linear correction on {}x{} grid", r.grid.n, r.grid.n);
  r.linear = linear_correction(s, r.configuration, p.profiles, r.grid, p.config.tol.krylov);
  r.ansatz = assemble_ansatz(r.configuration, p.profiles, r.grid);
  r.correction = r.linear.Q;
  Fields init = r.ansatz;
  for (int j = 0; j < s.d; ++j)
    for (std::size_t k = 0; k < init[j].values.size(); ++k)
      init[j].values[k] += r.linear.Q[j].values[k];

  NewtonOptions opts;
  opts.tol = p.config.tol.newton;
  opts.max_iter = p.config.tol.newton_max_iter;
  opts.theta_count = p.config.theta;
  opts.krylov_tol = p.config.tol.krylov;
  spdlog::info("Newton from W + Q");
  r.u = newton_solve(s, init, r.grid, opts, r.newton);
  r.diag = diagnostics(s, r.u, r.configuration, r.grid);
  return r;
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"config_digest", m.digest}, {"command", m.command},   {"inputs", m.inputs},
          {"outputs", m.outputs},      {"version", m.version}, {"wall_time", m.wall_time}};
}

namespace {

void dump_to(const nlohmann::json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent) * (depth + 1), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent) * depth, ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt::format("{:.17g}", v) : "null";
      return;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += std::string(",") + nl;
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + sep;
        dump_to(it.value(), indent, depth + 1, out);
      }
      out += nl + close + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += std::string(",") + nl;
        first = false;
        out += pad;
        dump_to(v, indent, depth + 1, out);
      }
      out += nl + close + "]";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  dump_to(j, indent, 0, out);
  return out;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("io-error", fmt::format("cannot write {}", path));
  f << dump_json(j) << '\n';
}

const char* tool_version() { return "0.1.0"; }

}  // namespace nls
