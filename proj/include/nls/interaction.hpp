#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nls/ground_state.hpp"
#include "nls/spike_geometry.hpp"

namespace nls {

enum class OverlapKind { PotentialB, CrossC, SameGroupD, CrossGroupDPrime };

const char* to_string(OverlapKind k);

// Worker threads for overlap quadrature; 0 picks min(8, hardware). Results do not depend on it.
void set_worker_threads(int n);

struct OverlapSample {
  double separation = 0.0;
  double value = 0.0;
  OverlapKind kind = OverlapKind::CrossC;
};

struct OverlapOptions {
  double h = 0.0;        // 0 selects min(0.1/√λ_max, 0.2)
  bool refine_check = true;
  double nu = 0.0;       // exponent of |x|^{-ν} for PotentialB
};

// PotentialB: ∫|x|^{-ν} b²(x-ξ), the ball |x| < h excluded.
// CrossC:     ∫a³(x) b(x-ξ).
// SameGroupD, CrossGroupDPrime: ∫a²(x) b²(x-ξ).
double overlap_integral(const RadialProfile& a, const RadialProfile& b, double xi, OverlapKind kind,
                        const OverlapOptions& opts = {});

enum class DecayModel { PowerExp, PowerExpLog };

// value ≈ K ξ^p e^{-cξ} (log ξ if log_factor).
struct DecayLaw {
  double K = 0.0;
  double p = 0.0;
  double c = 0.0;
  bool log_factor = false;

  double operator()(double xi) const;
  double derivative(double xi) const;
};

struct DecayFit {
  DecayLaw law;
  double residual = 0.0;   // RMS of log residuals
  double condition = 0.0;  // design matrix condition number
};

// Free three-parameter fit of log K, p, c.
DecayFit fit_decay_law(const std::vector<OverlapSample>& samples, DecayModel model);

// Only K is fitted; p, c (and the log factor) are held at the given law.
DecayFit fit_constant(const std::vector<OverlapSample>& samples, double p, double c, bool log_factor);

struct ConstantsOptions {
  double window_lo = 8.0;  // in units of 1/√λ
  double window_hi = 16.0;
  int points = 6;
  double dprime_factor = 1.0;
  double h = 0.0;
};

struct FamilyRecord {
  std::string family;  // "B", "C", "D", "Dprime"
  int index = 0;       // component (B, C) or group τ-1 (D, Dprime)
  int comp_a = 0, comp_b = 0;
  DecayFit fit;
  std::vector<OverlapSample> samples;
};

struct InteractionConstants {
  int dim = 2;
  std::vector<double> B, C;                 // per component
  std::vector<double> D;                    // per group
  std::vector<double> Dprime, Dsecond;      // per group; entry k-1 is the wrap pair (d, 1)
  std::vector<DecayLaw> C_law, D_law, Dprime_law;
  std::vector<double> int_w2;               // ∫w_j² for the B cross-check
  std::vector<double> fit_residuals;
  double dprime_factor = 1.0;
  std::vector<FamilyRecord> records;
};

// Profiles indexed like the (sorted) system components.
InteractionConstants constants_from_system(const SystemParams& s, const GroupStructure& g,
                                           const std::vector<RadialProfile>& profiles,
                                           const ConstantsOptions& opts = {});

void write_samples_csv(const InteractionConstants& c, const std::string& path);
nlohmann::json to_json(const InteractionConstants& c);

}  // namespace nls
