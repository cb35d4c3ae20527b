#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

namespace nls {

// Problem instance for -Δu_j + V_j u_j = μ_j u_j³ + Σ_{i≠j} β_ij u_i² u_j with
// V_j(x) = λ_j + δ_j |x|^{-ν_j} for |x| ≥ 1, with a C¹ quadratic cap inside the unit ball.
struct SystemParams {
  int dim = 2;
  int d = 2;
  std::vector<double> lambda, mu, delta, nu;
  std::vector<std::vector<double>> beta;  // d×d, symmetric, zero diagonal

  double nu_star() const;
  std::vector<int> m_star() const;  // 0-based components attaining nu_star
};

// Throws Error("bad-config") when the instance violates the structural invariants.
void validate_system(const SystemParams& s);

double potential(const SystemParams& s, int j, double r);

// λ-groups after sorting. Components are 0-based; group τ = 1..k holds
// components n[τ-1] .. n[τ]-1, with n[0] = 0 and n[k] = d.
struct GroupStructure {
  int k = 0;
  std::vector<int> n;
  std::vector<int> permutation;  // sorted position -> original index

  int group_of(int j) const;  // 1-based τ
  int first(int tau) const { return n[tau - 1]; }
  int last(int tau) const { return n[tau] - 1; }
  int size(int tau) const { return n[tau] - n[tau - 1]; }
};

GroupStructure group_components(const std::vector<double>& lambda);

// Reorder components so that λ is nondecreasing.
SystemParams permute_system(const SystemParams& s, const std::vector<int>& permutation);

struct SpikeConfiguration {
  int dim = 2;
  int theta_count = 1;
  double phase = 0.0;          // α_0
  std::vector<double> rho;     // ρ_j
  std::vector<double> alpha;   // alpha[j] = gap from component j to j+1 (cyclic); sums to 2π/θ
  std::vector<double> offset;  // θ_j = α_0 + Σ_{i<j} alpha[i]
  std::vector<std::vector<std::array<double, 3>>> centers;  // centers[j][t]

  int d() const { return static_cast<int>(rho.size()); }
};

// Configuration from explicit radii and the first d-1 gaps; the last gap closes the circle.
SpikeConfiguration make_configuration(int dim, int theta_count, const std::vector<double>& rho,
                                      const std::vector<double>& alpha);

// ρ_j = ρ*·θ·log θ + offsets_j, α_j = α*_j / θ.
SpikeConfiguration build_configuration(const SystemParams& s, int theta_count, double rho_star,
                                       const std::vector<double>& alpha_star,
                                       const std::vector<double>& rho_offsets = {});

struct GapDistances {
  std::vector<double> eta_tilde;      // per component
  std::vector<double> eta_hat_group;  // per group
  double eta_hat = 0.0;
  std::vector<double> eta_tilde_formula;      // 2πρ_j/θ (arc length)
  std::vector<double> eta_hat_group_formula;  // ρ·α̂_τ
  double eta_hat_formula = 0.0;               // ρ·min α
};

GapDistances gap_distances(const SpikeConfiguration& c, const GroupStructure& g);

// Rotation by 2π/θ about the x3-axis.
std::array<double, 3> rotate(const std::array<double, 3>& x, double angle);

struct ValidationInputs {
  // coupling_eigen[i][j] = first eigenvalue of -Δ+λ_j in L²(w_i²), i ≠ j.
  std::vector<std::vector<double>> coupling_eigen;
  double sum_B_delta = 0.0;       // Σ_{j ∈ m_*} B_j δ_j
  double jump_threshold = 0.0;    // -2√π C_1/D_1, used for d = 2, N = 2, λ_1 = λ_2
  double eigen_margin = 1e-2;
};

struct ValidationReport {
  bool pinching = false;
  bool nu_star_gt_one = false;
  bool eigen_margin = false;
  bool below_principal = false;
  char case_label = 'N';  // 'a'..'d' or 'N'
  std::vector<std::string> failed_clauses;
  std::vector<std::string> notes;

  bool passes() const { return failed_clauses.empty(); }
};

ValidationReport validate_hypotheses(const SystemParams& s, const GroupStructure& g,
                                     const ValidationInputs& in);

nlohmann::json to_json(const SpikeConfiguration& c);
SpikeConfiguration configuration_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ValidationReport& r);

}  // namespace nls
