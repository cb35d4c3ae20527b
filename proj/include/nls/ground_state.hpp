#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace nls {

struct ScalarParams {
  double lambda = 1.0;
  double mu = 1.0;
  int dim = 2;
};

// Radial ground state of -Δw + λw = μw³ sampled on a uniform grid r_i = i*h.
struct RadialProfile {
  ScalarParams params;
  double r_max = 0.0;
  double h = 0.0;
  std::vector<double> r, w, dw;

  double tail_constant = 0.0;      // A in w ~ A r^{(1-N)/2} e^{-√λ r}, from the window fit
  double decay_rate = 0.0;         // fitted rate, close to √λ
  double tail_fit_residual = 0.0;  // max abs log-residual of the window fit
  double seam_amplitude = 0.0;     // amplitude used past r_max, matched to w(r_max)
  double energy = 0.0;
  double int_w2 = 0.0;
  double int_w4 = 0.0;
  double int_dw2 = 0.0;
  double ode_residual = 0.0;  // sup |w'' + (N-1)w'/r - λw + μw³| over interior samples

  double w0() const { return w.front(); }
  std::size_t size() const { return r.size(); }
};

struct GroundStateOptions {
  // Sample spacing in units of 1/√λ.
  double spacing = 0.005;
};

double default_r_max(double lambda);

// Surface measure of the unit sphere in R^N (2 for N = 1).
double sphere_area(int dim);

RadialProfile solve_ground_state(const ScalarParams& params, double r_max, double tol,
                                 const GroundStateOptions& opts = {});

// Convenience overload with default r_max and tol = 1e-10.
RadialProfile solve_ground_state(const ScalarParams& params);

double evaluate_profile(const RadialProfile& p, double r);
double evaluate_profile_derivative(const RadialProfile& p, double r);

struct TailFit {
  double A = 0.0;
  double rate = 0.0;
  double residual = 0.0;
};

// Least-squares fit of log w - ((1-N)/2) log r = log A - rate*r on [0.5, 0.9]*r_max.
TailFit tail_constant(const RadialProfile& p);

double energy(const RadialProfile& p);

// Smallest β with -Δv + λ_t v = β w² v, w the weight profile.
double coupling_eigenvalue(double lambda_target, const RadialProfile& weight);

// Violated invariants of a solved profile, empty if all hold.
std::vector<std::string> profile_invariant_violations(const RadialProfile& p);

void write_profile_csv(const RadialProfile& p, const std::string& path);
nlohmann::json profile_sidecar(const RadialProfile& p);

}  // namespace nls
