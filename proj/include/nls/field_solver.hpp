#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nls/ground_state.hpp"
#include "nls/spike_geometry.hpp"

namespace nls {

// Square [-L, L]² with n points per side (n odd, origin on the grid).
struct Grid {
  double L = 20.0;
  double h = 0.1;
  int n = 401;

  static Grid make(double L, double h);
  double coord(int i) const { return -L + i * h; }
  long size() const { return static_cast<long>(n) * n; }
  long index(int i, int k) const { return static_cast<long>(i) * n + k; }  // x = coord(i), y = coord(k)
};

// Values on the whole grid, boundary ring held at zero.
struct GridField {
  int component = 0;
  std::vector<double> values;
};

using Fields = std::vector<GridField>;

// Throws grid-too-small when a spike lies within 8/√λ_j of the boundary; returns the
// margin L - max ρ_j - 12/√λ_min, negative when the recommended box is not met.
double check_grid(const SystemParams& s, const SpikeConfiguration& c, const Grid& g);

Fields assemble_ansatz(const SpikeConfiguration& c, const std::vector<RadialProfile>& profiles,
                       const Grid& g);

struct DerivativeFields {
  Fields d_rho;    // ∂_{ρ_j} W_j
  Fields d_theta;  // ∂_{θ_j} W_j (rotation of all spikes of component j)
};

DerivativeFields ansatz_derivatives(const SpikeConfiguration& c,
                                    const std::vector<RadialProfile>& profiles, const Grid& g);

struct ErrorFields {
  Fields E1, E2, E3;
};

ErrorFields error_fields(const SystemParams& s, const SpikeConfiguration& c,
                         const std::vector<RadialProfile>& profiles, const Grid& g);

// Five-point Laplacian at interior points, zero on the boundary ring.
std::vector<double> laplacian(const Grid& g, const std::vector<double>& u);

// F_j(u) = -Δ_h u_j + V_j u_j - μ_j u_j³ - Σ_{i≠j} β_ij u_i² u_j at interior points.
Fields residual(const SystemParams& s, const Fields& u, const Grid& g);

// F'(u)v.
Fields apply_jacobian(const SystemParams& s, const Fields& u, const Fields& v, const Grid& g);

double inner(const Grid& g, const std::vector<double>& a, const std::vector<double>& b);
double sup_norm(const Fields& f);

struct GammaProjections {
  std::vector<double> gamma_theta, gamma_rho;
  std::vector<double> e3_dtheta, e3_drho;  // ∫E_{j,3}∂_θW_j, ∫E_{j,3}∂_ρW_j
  std::vector<double> norm2_drho, norm2_dtheta;
};

GammaProjections gamma_projections(const ErrorFields& e, const DerivativeFields& dw, const Grid& g);

struct LinearCorrection {
  Fields Q;
  std::vector<double> gamma_theta, gamma_rho;
  int krylov_iterations = 0;
  double relative_residual = 0.0;
};

// Bordered solve of 𝓛Q = E_3 - Σ_j (γ_θj ∂_θW_j + γ_ρj ∂_ρW_j) with Q_j ⊥ ∂_ρW_j, ∂_θW_j.
LinearCorrection linear_correction(const SystemParams& s, const SpikeConfiguration& c,
                                   const std::vector<RadialProfile>& profiles, const Grid& g,
                                   double tol = 1e-10);

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 30;
  int theta_count = 1;  // rotation order used for the symmetry defect
  double krylov_tol = 1e-10;  // inexact Newton: steps are kept when the solve stalls above it
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> min_value, max_value;
  double symmetry_defect = 0.0;
  std::vector<double> damping;
  std::vector<double> residual_history;
  std::vector<double> krylov_residual;  // achieved relative residual of each step solve
};

Fields newton_solve(const SystemParams& s, const Fields& initial, const Grid& g,
                    const NewtonOptions& opts, NewtonReport& report);

// Nonlinear problem with the spike positions held fixed: F(u) + Σ_k γ_k Z_k = 0 with
// ⟨Z_k, u - W⟩ = 0, Z = (∂_θW_j, ∂_ρW_j). γ vanishes exactly when W's radii and angles are
// an equilibrium of the discrete system.
struct ProjectedSolution {
  Fields u;
  std::vector<double> gamma_theta, gamma_rho;
  int iterations = 0;
  double residual = 0.0;
};

ProjectedSolution projected_newton(const SystemParams& s, const SpikeConfiguration& c,
                                   const std::vector<RadialProfile>& profiles, const Grid& g,
                                   const NewtonOptions& opts);

double sample_bilinear(const Grid& g, const std::vector<double>& u, double x, double y);

// max |u(Rx) - u(x)| over the grid, R the rotation by 2π/θ.
double symmetry_defect(const Grid& g, const std::vector<double>& u, int theta_count);

struct Diagnostics {
  std::vector<double> min_value, max_value;
  std::vector<double> interior_min;  // boundary ring excluded
  double residual = 0.0;
  double symmetry_defect = 0.0;
  double sup_norm = 0.0;
  std::vector<double> center_value;  // u_j at the first spike of component j
  std::vector<double> decay_rate;    // fitted along the outward ray through that spike
  std::vector<bool> sign_change;
  double box_margin = 0.0;           // L - max ρ - 12/√λ_min
};

Diagnostics diagnostics(const SystemParams& s, const Fields& u, const SpikeConfiguration& c,
                        const Grid& g);

nlohmann::json to_json(const NewtonReport& r);
nlohmann::json to_json(const Diagnostics& d);

void write_fields_csv(const Grid& g, const Fields& u, const std::string& path);
// Flat little-endian f64 array preceded by a length-prefixed JSON header {n, L, h, d}.
void write_fields_binary(const Grid& g, const Fields& u, const std::string& path);
Fields read_fields_binary(const std::string& path, Grid& g);

}  // namespace nls
