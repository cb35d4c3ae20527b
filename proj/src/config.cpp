#include "nls/config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "nls/error.hpp"

namespace nls {

namespace {

template <class T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<std::vector<double>> read_beta(const nlohmann::json& jb, int d) {
  std::vector<std::vector<double>> beta(d, std::vector<double>(d, 0.0));
  if (!jb.is_array()) throw Error("bad-config", "beta must be an array of rows");
  const bool full = static_cast<int>(jb.size()) == d && jb[0].is_array() &&
                    static_cast<int>(jb[0].size()) == d;
  if (full) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) beta[i][j] = jb[i][j].get<double>();
    return beta;
  }
  if (static_cast<int>(jb.size()) < d - 1)
    throw Error("bad-config", "beta upper triangle needs d-1 rows");
  for (int i = 0; i + 1 < d; ++i) {
    const auto& row = jb[i];
    if (static_cast<int>(row.size()) != d - 1 - i)
      throw Error("bad-config", fmt::format("beta row {} needs {} entries", i, d - 1 - i));
    for (int j = i + 1; j < d; ++j) beta[i][j] = beta[j][i] = row[j - i - 1].get<double>();
  }
  return beta;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    auto& s = c.system;
    s.dim = j.at("dim").get<int>();
    if (s.dim != 2 && s.dim != 3)
      throw Error("bad-dimension", fmt::format("dim must be 2 or 3, got {}", s.dim));
    s.d = j.at("d").get<int>();
    if (s.d < 2) throw Error("bad-config", "d must be at least 2");
    s.lambda = j.at("lambda").get<std::vector<double>>();
    s.mu = j.at("mu").get<std::vector<double>>();
    s.delta = j.at("delta").get<std::vector<double>>();
    s.nu = j.at("nu").get<std::vector<double>>();
    s.beta = read_beta(j.at("beta"), s.d);
    validate_system(s);

    c.theta = value_or(j, "theta", c.theta);
    c.rho_star = value_or(j, "rho_star", c.rho_star);
    c.alpha_star = value_or(j, "alpha_star", c.alpha_star);
    c.rho_offsets = value_or(j, "rho_offsets", c.rho_offsets);
    c.rho_override = value_or(j, "rho", c.rho_override);
    c.dprime_factor = value_or(j, "dprime_factor", c.dprime_factor);
    c.epsilon = value_or(j, "epsilon", c.epsilon);
    c.seed = value_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("grid")) {
      c.grid.L = value_or(j["grid"], "L", c.grid.L);
      c.grid.h = value_or(j["grid"], "h", c.grid.h);
    }
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      c.tol.ground_state = value_or(t, "ground_state", c.tol.ground_state);
      c.tol.newton = value_or(t, "newton", c.tol.newton);
      c.tol.newton_max_iter = value_or(t, "newton_max_iter", c.tol.newton_max_iter);
      c.tol.krylov = value_or(t, "krylov", c.tol.krylov);
      c.tol.eigen_margin = value_or(t, "eigen_margin", c.tol.eigen_margin);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-config", e.what());
  }
  if (c.theta < 2) throw Error("bad-config", "theta must be at least 2");
  if (!c.alpha_star.empty() && static_cast<int>(c.alpha_star.size()) != c.system.d)
    throw Error("bad-config", "alpha_star needs d entries");
  if (!(c.grid.L > 0) || !(c.grid.h > 0)) throw Error("bad-config", "grid L and h must be positive");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", fmt::format("cannot open config {}", path));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-config", fmt::format("{}: {}", path, e.what()));
  }
  return parse_config(j);
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& s = c.system;
  nlohmann::json beta = nlohmann::json::array();
  for (int i = 0; i + 1 < s.d; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = i + 1; j < s.d; ++j) row.push_back(s.beta[i][j]);
    beta.push_back(row);
  }
  nlohmann::json j = {{"dim", s.dim},       {"d", s.d},         {"lambda", s.lambda},
                      {"mu", s.mu},         {"beta", beta},     {"delta", s.delta},
                      {"nu", s.nu},         {"theta", c.theta}, {"rho_star", c.rho_star},
                      {"alpha_star", c.alpha_star},
                      {"rho_offsets", c.rho_offsets},
                      {"grid", {{"L", c.grid.L}, {"h", c.grid.h}}},
                      {"tolerances",
                       {{"ground_state", c.tol.ground_state},
                        {"newton", c.tol.newton},
                        {"newton_max_iter", c.tol.newton_max_iter},
                        {"krylov", c.tol.krylov},
                        {"eigen_margin", c.tol.eigen_margin}}},
                      {"dprime_factor", c.dprime_factor},
                      {"epsilon", c.epsilon},
                      {"seed", c.seed}};
  if (c.rho_override > 0) j["rho"] = c.rho_override;
  return j;
}

std::string config_digest(const RunConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace nls
