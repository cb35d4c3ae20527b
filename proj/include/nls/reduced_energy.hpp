#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nls/interaction.hpp"
#include "nls/spike_geometry.hpp"

namespace nls {

// Inputs of the leading-order reduced functional; the system is sorted by λ.
struct ReducedProblem {
  SystemParams system;
  GroupStructure groups;
  InteractionConstants constants;
  std::vector<double> energies;  // m_j
};

enum class GapKind { InGroup, Boundary, Wrap };
const char* to_string(GapKind k);

// Gap g couples component g and g+1 (mod d) across the angle α_g.
struct GapTerm {
  GapKind kind = GapKind::InGroup;
  int from = 0, to = 0;
  double beta = 0.0;
  DecayLaw law;
};

std::vector<GapTerm> gap_terms(const ReducedProblem& p);

struct ReducedEnergyBreakdown {
  double total = 0.0;
  double base = 0.0;                    // θ Σ m_j
  std::vector<double> potential;        // θ B_j δ_j ρ_j^{-ν_j}
  std::vector<double> same_component;   // -θ C_j η̃_j^{(1-N)/2} e^{-√λ_j η̃_j}
  std::vector<double> gap;              // -θ β_g ℓ_g(ρ_g α_g)
  std::vector<GapKind> gap_kind;
  std::vector<double> grad_rho;         // ∂J/∂ρ_j
  std::vector<double> grad_alpha;       // ∂J/∂α_g, all d gaps independent

  double interaction() const { return total - base; }
};

ReducedEnergyBreakdown evaluate_J(const ReducedProblem& p, const SpikeConfiguration& c);

// Same functional on explicit radii and d gaps (no closure imposed).
ReducedEnergyBreakdown evaluate_J(const ReducedProblem& p, int theta, const std::vector<double>& rho,
                                  const std::vector<double>& alpha);

// Scaled coordinates z = (ρ*, α*_1, ..., α*_{d-1}); α*_d = 2π - Σ closes the circle.
struct ScaledValue {
  double interaction = 0.0;  // J - θ Σ m_j
  double total = 0.0;
  std::vector<double> grad;  // ∂J/∂z
};

ScaledValue evaluate_scaled(const ReducedProblem& p, int theta, const std::vector<double>& z,
                            const std::vector<double>& rho_offsets = {});

std::vector<double> balanced_angles(const SystemParams& s, const GroupStructure& g);

// Slowest θ-exponent among all exponential channels at the scaled angles α* (d entries).
double dominant_rate(const ReducedProblem& p, const std::vector<double>& alpha_star);

struct RadiusResult {
  double rho_star = 0.0;
  double lambda_star = 0.0;
  double value = 0.0;
};

// Critical point of a scalar function of ρ* on [eps, hi] from sign changes of its derivative.
RadiusResult optimal_radius_1d(const std::function<double(double)>& value,
                               const std::function<double(double)>& derivative, double eps,
                               double hi, bool maximize);

RadiusResult optimal_radius(const ReducedProblem& p, int theta,
                            const std::vector<double>& alpha_star, bool maximize,
                            double eps = 1e-2);

// Bδ (ρθ log θ)^{-ν} - K θ^{-λρ}.
struct TwoTermModel {
  double b_delta = 1.0;
  double K = 1.0;
  double nu = 1.5;
  double lambda = 1.0;

  double value(double rho, int theta) const;
  double derivative(double rho, int theta) const;
};

RadiusResult optimal_radius(const TwoTermModel& m, int theta, double eps = 1e-2);

struct OptimizerOptions {
  double eps = 1e-2;
  int angle_grid = 31;  // points per free angle
  int rho_grid = 48;
  std::vector<double> rho_offsets;
};

struct CriticalPointReport {
  char case_label = 'a';
  double rho_star = 0.0;
  std::vector<double> alpha_star;  // d entries
  double value = 0.0;
  double interaction = 0.0;
  double gradient_norm = 0.0;
  std::vector<double> hessian_eigenvalues;
  std::array<int, 3> signature{0, 0, 0};  // (+, -, 0)
  int iterations = 0;
  double margin = 0.0;
  double lambda_star = 0.0;
  std::vector<double> balanced;
  bool m_set_lemma_form = false;  // α_{n_{τ+1}} < α_{n_τ}, τ = 1..k-2
  bool m_set_prop_form = false;   // α_{n_τ+1} ≤ α_{n_τ}, τ = 2..k-1
  bool signature_ok = false;
};

CriticalPointReport find_critical_point(const ReducedProblem& p, int theta, char case_label,
                                        const OptimizerOptions& opts = {});

struct Projection {
  int lemma_case = 0;              // 1..5
  double proj_theta = 0.0;         // leading-order ϑ^{-1}∫E_{j,3}∂_{θ_j}W_j
  double proj_rho = 0.0;           // leading-order ϑ^{-1}∫E_{j,3}∂_{ρ_j}W_j
  double proj_theta_exact = 0.0;   // same projection with the exact law derivatives
  double scale = 0.0;              // size of the individual terms
};

Projection projection_asymptotics(const ReducedProblem& p, const SpikeConfiguration& c, int j);

struct JumpThreshold {
  double coefficient_root = 0.0;  // -2√π C_1/D_1
  double theorem_form = 0.0;      // -2 C_1/(√π D_1)
};

JumpThreshold jumping_threshold(const InteractionConstants& k);

// 2C_1 + π^{-1/2} D_1 β, the attraction coefficient of the d = 2, N = 2, λ_1 = λ_2 gap channel.
double gap_channel_coefficient(const InteractionConstants& k, double beta);

// Root in β_12 of the same-gap channel of evaluate_J at α = (π/θ, π/θ), exact geometry.
double exact_channel_root(const ReducedProblem& p, int theta, double rho_star);

nlohmann::json to_json(const ReducedEnergyBreakdown& b);
nlohmann::json to_json(const CriticalPointReport& r);

void write_landscape_csv(const ReducedProblem& p, int theta, const std::vector<double>& rho_values,
                         int angle_grid, const std::string& path);

}  // namespace nls
