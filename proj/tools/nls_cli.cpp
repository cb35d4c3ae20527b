// Batch front-end for the spike pipeline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nls/error.hpp"
#include "nls/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitChecksFailed = 1;

struct HypothesisFailure {
  nls::ValidationReport report;
};

std::string upper_code(std::string code) {
  for (char& ch : code) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(ch));
  return code;
}

int exit_for(const std::string& code) {
  static const std::vector<std::string> config_codes = {"bad-config", "bad-dimension", "io-error",
                                                        "invalid-argument"};
  return std::find(config_codes.begin(), config_codes.end(), code) != config_codes.end()
             ? kExitConfig
             : kExitNumerical;
}

void emit_error(const std::string& code, const std::string& message, const json& extra = {}) {
  json e = {{"code", code}, {"message", message}};
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) e[it.key()] = it.value();
  std::cout << nls::dump_json(json{{"error", e}}, 0) << std::endl;
}

struct Options {
  std::string config, out = "out";
  std::optional<int> theta;
  std::optional<std::uint64_t> seed;
  std::string case_label;
  int threads = 0;
  double lambda = 1.0, mu = 1.0;
  int dim = 2;
};

class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {
    fs::create_directories(o.out);
  }

  std::string path(const std::string& name) {
    const std::string p = (fs::path(opts_.out) / name).string();
    outputs_.push_back(p);
    return p;
  }

  nls::RunConfig config() {
    inputs_.push_back(opts_.config);
    auto c = nls::load_config(opts_.config);
    if (opts_.theta) {
      if (*opts_.theta < 2) throw nls::Error("bad-config", "theta must be at least 2");
      c.theta = *opts_.theta;
    }
    if (opts_.seed) c.seed = *opts_.seed;
    digest_ = nls::config_digest(c);
    return c;
  }

  void set_digest(std::string d) { digest_ = std::move(d); }

  void finish() {
    nls::RunManifest m;
    m.digest = digest_;
    m.command = command_;
    m.inputs = inputs_;
    const std::string manifest = (fs::path(opts_.out) / "manifest.json").string();
    m.outputs = outputs_;
    m.outputs.push_back(manifest);
    m.version = nls::tool_version();
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    nls::write_json(nls::to_json(m), manifest);
    spdlog::info("{} done in {:.2f} s, {} outputs", command_, m.wall_time, m.outputs.size());
  }

 private:
  std::string command_;
  Options opts_;
  std::string digest_;
  std::vector<std::string> inputs_, outputs_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json pipeline_summary(const nls::Pipeline& p) {
  json comps = json::array();
  for (int j = 0; j < p.system().d; ++j)
    comps.push_back({{"sorted_index", j},
                     {"original_index", p.groups.permutation[j]},
                     {"lambda", p.system().lambda[j]},
                     {"group", p.groups.group_of(j)}});
  return {{"k", p.groups.k}, {"components", comps}};
}

int cmd_ground_state(const Options& o) {
  if (o.dim < 1 || o.dim > 3)
    throw nls::Error("bad-dimension", fmt::format("dim must be 1, 2 or 3, got {}", o.dim));
  if (!(o.lambda > 0) || !(o.mu > 0))
    throw nls::Error("bad-config", "lambda and mu must be positive");
  Run run("ground-state", o);
  const nls::ScalarParams sp{o.lambda, o.mu, o.dim};
  const json flags = {{"lambda", o.lambda}, {"mu", o.mu}, {"dim", o.dim}};
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : nls::dump_json(flags, 0)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  run.set_digest(fmt::format("{:016x}", h));
  const auto w = nls::solve_ground_state(sp);
  nls::write_profile_csv(w, run.path("ground_state.csv"));
  nls::write_json(nls::profile_sidecar(w), run.path("ground_state.json"));
  run.finish();
  return 0;
}

int cmd_constants(const Options& o) {
  Run run("constants", o);
  const auto p = nls::prepare(run.config());
  json j = nls::to_json(p.problem.constants);
  j["ordering"] = pipeline_summary(p);
  nls::write_json(j, run.path("constants.json"));
  nls::write_samples_csv(p.problem.constants, run.path("overlap_samples.csv"));
  for (int j2 = 0; j2 < p.system().d; ++j2) {
    nls::write_profile_csv(p.profiles[j2], run.path(fmt::format("profile_{}.csv", j2)));
  }
  run.finish();
  return 0;
}

int cmd_validate(const Options& o) {
  Run run("validate", o);
  const auto p = nls::prepare(run.config());
  const auto in = nls::validation_inputs(p);
  const auto rep = nls::validate_hypotheses(p.system(), p.groups, in);
  json j = nls::to_json(rep);
  j["sum_B_delta"] = in.sum_B_delta;
  j["coupling_eigen"] = in.coupling_eigen;
  j["jump_threshold"] = {{"coefficient_root", nls::jumping_threshold(p.problem.constants).coefficient_root},
                         {"theorem_form", nls::jumping_threshold(p.problem.constants).theorem_form}};
  j["ordering"] = pipeline_summary(p);
  nls::write_json(j, run.path("validation.json"));
  run.finish();
  if (!rep.passes()) throw HypothesisFailure{rep};
  return 0;
}

int cmd_landscape(const Options& o) {
  Run run("landscape", o);
  const auto p = nls::prepare(run.config());
  const double hi = 3.0 * p.system().nu_star();
  const double eps = p.config.epsilon;
  std::vector<double> rho;
  for (int i = 0; i < 60; ++i) rho.push_back(eps + (hi - eps) * i / 59.0);
  const int grid = p.system().d <= 2 ? 61 : (p.system().d == 3 ? 31 : 9);
  nls::write_landscape_csv(p.problem, p.config.theta, rho, grid, run.path("landscape.csv"));
  run.finish();
  return 0;
}

int cmd_optimize(const Options& o) {
  Run run("optimize", o);
  const auto p = nls::prepare(run.config());
  const auto in = nls::validation_inputs(p);
  const auto rep = nls::validate_hypotheses(p.system(), p.groups, in);
  char label = rep.case_label;
  if (!o.case_label.empty()) {
    label = o.case_label[0];
    if (o.case_label.size() != 1 || label < 'a' || label > 'd')
      throw nls::Error("bad-config", "--case must be one of a, b, c, d");
  }
  if (label == 'N') throw HypothesisFailure{rep};
  if (label != rep.case_label)
    spdlog::warn("requested case {} differs from the classified case {}", label, rep.case_label);
  nls::OptimizerOptions opts;
  opts.eps = p.config.epsilon;
  opts.rho_offsets = p.config.rho_offsets;
  const auto cp = nls::find_critical_point(p.problem, p.config.theta, label, opts);
  json j = nls::to_json(cp);
  j["theta"] = p.config.theta;
  j["classified_case"] = std::string(1, rep.case_label);
  j["validation"] = nls::to_json(rep);
  j["ordering"] = pipeline_summary(p);
  nls::write_json(j, run.path("critical_point.json"));
  run.finish();
  return 0;
}

json solve_report(const nls::SolveResult& r) {
  return {{"configuration", nls::to_json(r.configuration)},
          {"grid", {{"L", r.grid.L}, {"h", r.grid.h}, {"n", r.grid.n}}},
          {"box_margin", r.box_margin},
          {"linear_correction",
           {{"krylov_iterations", r.linear.krylov_iterations},
            {"relative_residual", r.linear.relative_residual},
            {"gamma_theta", r.linear.gamma_theta},
            {"gamma_rho", r.linear.gamma_rho},
            {"sup_Q", nls::sup_norm(r.linear.Q)},
            {"sup_W", nls::sup_norm(r.ansatz)}}},
          {"newton", nls::to_json(r.newton)},
          {"diagnostics", nls::to_json(r.diag)}};
}

int cmd_solve(const Options& o) {
  Run run("solve", o);
  const auto p = nls::prepare_profiles(run.config());
  const auto r = nls::solve(p);
  nls::write_fields_csv(r.grid, r.u, run.path("fields.csv"));
  nls::write_fields_binary(r.grid, r.u, run.path("fields.bin"));
  json j = solve_report(r);
  j["ordering"] = pipeline_summary(p);
  nls::write_json(j, run.path("solve.json"));
  run.finish();
  return 0;
}

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

int cmd_verify(const Options& o) {
  Run run("verify", o);
  const auto p = nls::prepare(run.config());
  const auto& s = p.system();
  std::vector<Check> checks;

  for (int j = 0; j < s.d; ++j) {
    const auto v = nls::profile_invariant_violations(p.profiles[j]);
    checks.push_back({fmt::format("profile_{}_invariants", j), v.empty(),
                      static_cast<double>(v.size()), 0.0, v.empty() ? "" : v.front()});
  }
  const auto rep = nls::validate(p);
  checks.push_back({"hypotheses", rep.passes(), static_cast<double>(rep.failed_clauses.size()), 0.0,
                    rep.passes() ? std::string(1, rep.case_label) : rep.failed_clauses.front()});

  // Analytic gradient of the scaled reduced energy against central differences.
  {
    std::vector<double> z{p.config.rho_star};
    const auto a = nls::scaled_angles(p);
    for (int g = 0; g + 1 < s.d; ++g) z.push_back(a[g]);
    const auto v = nls::evaluate_scaled(p.problem, p.config.theta, z, p.config.rho_offsets);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double hstep = 1e-6 * std::max(1.0, std::abs(z[i]));
      auto zp = z, zm = z;
      zp[i] += hstep;
      zm[i] -= hstep;
      const double fd = (nls::evaluate_scaled(p.problem, p.config.theta, zp, p.config.rho_offsets).total -
                         nls::evaluate_scaled(p.problem, p.config.theta, zm, p.config.rho_offsets).total) /
                        (2 * hstep);
      err = std::max(err, std::abs(fd - v.grad[i]));
      scale = std::max(scale, std::abs(v.grad[i]));
    }
    const double rel = err / std::max(scale, 1e-300);
    checks.push_back({"reduced_gradient_fd", rel < 1e-6, rel, 1e-6, ""});
  }

  if (s.dim == 2) {
    const auto r = nls::solve(p);
    const double h = r.grid.h;
    checks.push_back({"newton_residual", r.newton.converged && r.newton.residual < 1e-8,
                      r.newton.residual, 1e-8, fmt::format("{} iterations", r.newton.iterations)});
    double minv = INFINITY;
    for (double m : r.diag.interior_min) minv = std::min(minv, m);
    checks.push_back({"positivity", minv > 0.0, minv, 0.0, "interior minimum"});
    double dev = 0.0;
    for (int j = 0; j < s.d; ++j)
      dev = std::max(dev, std::abs(r.diag.center_value[j] / p.profiles[j].w0() - 1.0));
    checks.push_back({"center_values", dev < 0.02, dev, 0.02, ""});
    const double sym_limit = 10.0 * h * h * r.diag.sup_norm;
    checks.push_back({"rotation_symmetry", r.diag.symmetry_defect < sym_limit, r.diag.symmetry_defect,
                      sym_limit, ""});
  }

  bool all = true;
  json rows = json::array();
  std::string csv = "check,status,value,limit,detail\n";
  for (const auto& c : checks) {
    all = all && c.pass;
    rows.push_back({{"check", c.name},
                    {"status", c.pass ? "PASS" : "FAIL"},
                    {"value", c.value},
                    {"limit", c.limit},
                    {"detail", c.detail}});
    csv += fmt::format("{},{},{:.17g},{:.17g},{}\n", c.name, c.pass ? "PASS" : "FAIL", c.value,
                       c.limit, c.detail);
    spdlog::info("{:<24} {}  value={:.3g} limit={:.3g} {}", c.name, c.pass ? "PASS" : "FAIL",
                 c.value, c.limit, c.detail);
  }
  {
    std::ofstream f(run.path("verify.csv"));
    f << csv;
  }
  nls::write_json({{"all_pass", all}, {"checks", rows}}, run.path("verify.json"));
  run.finish();
  return all ? 0 : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("nls");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %v");

  CLI::App app{"Multi-spike solutions of coupled cubic Schrodinger systems"};
  app.require_subcommand(1);
  Options o;

  auto* gs = app.add_subcommand("ground-state", "Radial ground state and its sidecar");
  gs->add_option("--lambda", o.lambda, "Frequency lambda > 0");
  gs->add_option("--mu", o.mu, "Self-coupling mu > 0");
  gs->add_option("--dim", o.dim, "Space dimension 1, 2 or 3");
  gs->add_option("--out", o.out, "Output directory");

  const std::vector<std::pair<std::string, std::string>> pipeline_cmds = {
      {"constants", "Fit the interaction constants"},
      {"validate", "Check the existence hypotheses and classify the case"},
      {"landscape", "Tabulate the reduced energy"},
      {"optimize", "Locate the critical point of the reduced energy"},
      {"solve", "Newton solve of the discretized system (N = 2)"},
      {"verify", "Run the invariant suite and write a pass/fail table"}};
  for (const auto& [name, help] : pipeline_cmds) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--config", o.config, "Run config (JSON)")->required();
    sc->add_option("--out", o.out, "Output directory");
    sc->add_option("--theta", o.theta, "Override the spike count");
    sc->add_option("--seed", o.seed, "Override the seed");
    sc->add_option("--threads", o.threads, "Worker threads for overlap quadrature (0 = auto)");
    if (name == "optimize") sc->add_option("--case", o.case_label, "Case a, b, c or d");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("BAD_ARGUMENTS", e.what());
    return kExitConfig;
  }

  nls::set_worker_threads(o.threads);
  try {
    if (gs->parsed()) return cmd_ground_state(o);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "constants") return cmd_constants(o);
    if (cmd == "validate") return cmd_validate(o);
    if (cmd == "landscape") return cmd_landscape(o);
    if (cmd == "optimize") return cmd_optimize(o);
    if (cmd == "solve") return cmd_solve(o);
    if (cmd == "verify") return cmd_verify(o);
  } catch (const HypothesisFailure& f) {
    const std::string code = f.report.failed_clauses.empty() ? "NO_CASE" : f.report.failed_clauses.front();
    emit_error(code, "hypothesis validation failed",
               {{"clauses", f.report.failed_clauses}, {"notes", f.report.notes}});
    return kExitHypothesis;
  } catch (const nls::Error& e) {
    emit_error(upper_code(e.code()), e.what());
    return exit_for(e.code());
  } catch (const std::exception& e) {
    emit_error("INTERNAL", e.what());
    return kExitNumerical;
  }
  return 0;
}
