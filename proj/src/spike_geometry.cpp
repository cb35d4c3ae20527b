#include "nls/spike_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "nls/error.hpp"

namespace nls {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

}  // namespace

double SystemParams::nu_star() const { return *std::min_element(nu.begin(), nu.end()); }

std::vector<int> SystemParams::m_star() const {
  const double ns = nu_star();
  std::vector<int> out;
  for (int j = 0; j < d; ++j)
    if (nu[j] == ns) out.push_back(j);
  return out;
}

void validate_system(const SystemParams& s) {
  if (s.dim != 2 && s.dim != 3)
    throw Error("bad-dimension", fmt::format("dim must be 2 or 3, got {}", s.dim));
  if (s.d < 2) throw Error("bad-config", fmt::format("need d >= 2 components, got {}", s.d));
  auto check_size = [&](const std::vector<double>& v, const char* name) {
    if (static_cast<int>(v.size()) != s.d)
      throw Error("bad-config", fmt::format("{} has {} entries, expected {}", name, v.size(), s.d));
  };
  check_size(s.lambda, "lambda");
  check_size(s.mu, "mu");
  check_size(s.delta, "delta");
  check_size(s.nu, "nu");
  for (int j = 0; j < s.d; ++j) {
    if (!(s.lambda[j] > 0)) throw Error("bad-config", "lambda must be positive");
    if (!(s.mu[j] > 0)) throw Error("bad-config", "mu must be positive");
    if (!(s.nu[j] > 0) || !(s.nu[j] < s.dim))
      throw Error("bad-config", fmt::format("nu[{}] = {} must lie in (0, N)", j, s.nu[j]));
    if (!std::isfinite(s.delta[j])) throw Error("bad-config", "delta must be finite");
  }
  if (static_cast<int>(s.beta.size()) != s.d) throw Error("bad-config", "beta must be d x d");
  for (int i = 0; i < s.d; ++i) {
    if (static_cast<int>(s.beta[i].size()) != s.d) throw Error("bad-config", "beta must be d x d");
    if (s.beta[i][i] != 0.0) throw Error("bad-config", "beta diagonal must be zero");
    for (int j = 0; j < s.d; ++j) {
      if (i == j) continue;
      if (s.beta[i][j] != s.beta[j][i]) throw Error("bad-config", "beta must be symmetric");
      if (s.beta[i][j] == 0.0 || !std::isfinite(s.beta[i][j]))
        throw Error("bad-config", fmt::format("beta[{}][{}] must be nonzero", i, j));
    }
  }
}

double potential(const SystemParams& s, int j, double r) {
  const double nu = s.nu[j];
  // |x|^{-ν} outside the unit ball, even C¹ quadratic cap inside.
  const double f = r >= 1.0 ? std::pow(r, -nu) : 1.0 + 0.5 * nu * (1.0 - r * r);
  return s.lambda[j] + s.delta[j] * f;
}

int GroupStructure::group_of(int j) const {
  for (int tau = 1; tau <= k; ++tau)
    if (j < n[tau]) return tau;
  throw Error("invalid-argument", fmt::format("component {} out of range", j));
}

GroupStructure group_components(const std::vector<double>& lambda) {
  const int d = static_cast<int>(lambda.size());
  GroupStructure g;
  g.permutation.resize(d);
  std::iota(g.permutation.begin(), g.permutation.end(), 0);
  std::stable_sort(g.permutation.begin(), g.permutation.end(),
                   [&](int a, int b) { return lambda[a] < lambda[b]; });
  g.n.push_back(0);
  for (int j = 1; j < d; ++j) {
    const double prev = lambda[g.permutation[j - 1]];
    const double cur = lambda[g.permutation[j]];
    if (std::abs(cur - prev) > 1e-12 * std::max(1.0, std::abs(prev))) g.n.push_back(j);
  }
  if (d > 0) g.n.push_back(d);
  g.k = static_cast<int>(g.n.size()) - 1;
  return g;
}

SystemParams permute_system(const SystemParams& s, const std::vector<int>& perm) {
  SystemParams out = s;
  for (int a = 0; a < s.d; ++a) {
    const int p = perm[a];
    out.lambda[a] = s.lambda[p];
    out.mu[a] = s.mu[p];
    out.delta[a] = s.delta[p];
    out.nu[a] = s.nu[p];
    for (int b = 0; b < s.d; ++b) out.beta[a][b] = s.beta[p][perm[b]];
  }
  return out;
}

std::array<double, 3> rotate(const std::array<double, 3>& x, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]};
}

SpikeConfiguration make_configuration(int dim, int theta_count, const std::vector<double>& rho,
                                      const std::vector<double>& alpha) {
  const int d = static_cast<int>(rho.size());
  if (theta_count < 1) throw Error("degenerate-config", "theta must be at least 1");
  if (d < 1 || static_cast<int>(alpha.size()) < d - 1)
    throw Error("degenerate-config", "need d radii and at least d-1 gaps");
  SpikeConfiguration c;
  c.dim = dim;
  c.theta_count = theta_count;
  c.rho = rho;
  const double period = kTwoPi / theta_count;
  c.alpha.assign(alpha.begin(), alpha.begin() + (d - 1));
  double used = 0.0;
  for (double a : c.alpha) used += a;
  c.alpha.push_back(period - used);
  for (int j = 0; j < d; ++j) {
    if (!(c.alpha[j] > 0.0) || (d > 1 && !(c.alpha[j] < period)))
      throw Error("degenerate-config",
                  fmt::format("gap alpha[{}] = {} outside (0, 2pi/theta)", j, c.alpha[j]));
    if (!(rho[j] > 0.0) && !(theta_count == 1 && rho[j] == 0.0))
      throw Error("degenerate-config", "radii must be positive (zero only for a single spike)");
  }
  c.offset.resize(d);
  double acc = c.phase;
  for (int j = 0; j < d; ++j) {
    c.offset[j] = acc;
    acc += c.alpha[j];
  }
  c.centers.assign(d, std::vector<std::array<double, 3>>(theta_count));
  for (int j = 0; j < d; ++j)
    for (int t = 0; t < theta_count; ++t) {
      const double ang = c.offset[j] + period * t;
      c.centers[j][t] = {rho[j] * std::cos(ang), rho[j] * std::sin(ang), 0.0};
    }
  return c;
}

SpikeConfiguration build_configuration(const SystemParams& s, int theta_count, double rho_star,
                                       const std::vector<double>& alpha_star,
                                       const std::vector<double>& rho_offsets) {
  if (!(rho_star > 0.0)) throw Error("degenerate-config", "rho_star must be positive");
  if (static_cast<int>(alpha_star.size()) < s.d - 1)
    throw Error("degenerate-config", "alpha_star needs at least d-1 entries");
  if (theta_count < 2) throw Error("degenerate-config", "theta must be at least 2");
  const double base = rho_star * theta_count * std::log(static_cast<double>(theta_count));
  std::vector<double> rho(s.d, base);
  for (int j = 0; j < s.d && j < static_cast<int>(rho_offsets.size()); ++j) rho[j] += rho_offsets[j];
  std::vector<double> alpha(s.d - 1);
  for (int j = 0; j + 1 < s.d; ++j) alpha[j] = alpha_star[j] / theta_count;
  return make_configuration(s.dim, theta_count, rho, alpha);
}

GapDistances gap_distances(const SpikeConfiguration& c, const GroupStructure& g) {
  const int d = c.d();
  const int th = c.theta_count;
  const double inf = std::numeric_limits<double>::infinity();
  GapDistances out;
  out.eta_tilde.assign(d, inf);
  out.eta_hat_group.assign(g.k, inf);
  out.eta_hat = inf;

  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const bool same_group = g.group_of(i) == g.group_of(j);
      for (int t = 0; t < th; ++t)
        for (int s = 0; s < th; ++s) {
          if (i == j && s <= t) continue;
          const double r = dist(c.centers[i][t], c.centers[j][s]);
          out.eta_hat = std::min(out.eta_hat, r);
          if (i == j) out.eta_tilde[i] = std::min(out.eta_tilde[i], r);
          else if (same_group)
            out.eta_hat_group[g.group_of(i) - 1] = std::min(out.eta_hat_group[g.group_of(i) - 1], r);
        }
    }
  // A one-member group has no distinct pair; fall back to its same-component gap.
  for (int tau = 1; tau <= g.k; ++tau)
    if (g.size(tau) == 1) out.eta_hat_group[tau - 1] = out.eta_tilde[g.first(tau)];

  const double period = kTwoPi / th;
  out.eta_tilde_formula.resize(d);
  for (int j = 0; j < d; ++j) out.eta_tilde_formula[j] = period * c.rho[j];
  out.eta_hat_group_formula.resize(g.k);
  double rho_min = inf, alpha_min = inf;
  for (int j = 0; j < d; ++j) {
    rho_min = std::min(rho_min, c.rho[j]);
    alpha_min = std::min(alpha_min, c.alpha[j]);
  }
  for (int tau = 1; tau <= g.k; ++tau) {
    double inner = 0.0, amin = inf, rho_mean = 0.0;
    for (int j = g.first(tau); j < g.last(tau); ++j) {
      inner += c.alpha[j];
      amin = std::min(amin, c.alpha[j]);
    }
    for (int j = g.first(tau); j <= g.last(tau); ++j) rho_mean += c.rho[j];
    rho_mean /= g.size(tau);
    out.eta_hat_group_formula[tau - 1] = rho_mean * std::min(amin, period - inner);
  }
  out.eta_hat_formula = rho_min * std::min(alpha_min, period);
  return out;
}

ValidationReport validate_hypotheses(const SystemParams& s, const GroupStructure& g,
                                     const ValidationInputs& in) {
  ValidationReport rep;
  const int d = s.d;
  const auto& b = s.beta;

  rep.pinching = s.lambda[g.last(g.k)] < 4.0 * s.lambda[g.first(1)];
  if (!rep.pinching) rep.failed_clauses.push_back("PINCHING");

  rep.nu_star_gt_one = s.nu_star() > 1.0;
  if (!rep.nu_star_gt_one) rep.failed_clauses.push_back("NU_STAR");

  const bool have_eigen = static_cast<int>(in.coupling_eigen.size()) == d;
  rep.eigen_margin = true;
  rep.below_principal = true;
  if (have_eigen) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        if (std::abs(b[i][j] - in.coupling_eigen[i][j]) <= in.eigen_margin) {
          rep.eigen_margin = false;
          rep.notes.push_back(fmt::format("beta[{}][{}] within margin of eigenvalue {:.6g}", i, j,
                                          in.coupling_eigen[i][j]));
        }
      }
    for (int j = 0; j < d; ++j) {
      const int jn = (j + 1) % d;
      if (d == 2 && j == 1) break;
      if (!(b[j][jn] < in.coupling_eigen[j][jn])) {
        rep.below_principal = false;
        rep.notes.push_back(fmt::format("beta[{}][{}] = {:.6g} not below eigenvalue {:.6g}", j, jn,
                                        b[j][jn], in.coupling_eigen[j][jn]));
      }
    }
  } else {
    rep.notes.push_back("coupling eigenvalues not supplied; eigenvalue clauses skipped");
  }
  if (!rep.eigen_margin) rep.failed_clauses.push_back("EIGENVALUE_MARGIN");
  if (!rep.below_principal) rep.failed_clauses.push_back("BETA_BELOW_EIGENVALUE");

  // Chain sums and boundary couplings for τ = 1..k-1; an empty chain imposes nothing.
  auto chain_sum = [&](int tau) {
    double acc = 0.0;
    for (int j = g.first(tau); j < g.last(tau); ++j) acc += b[j][j + 1];
    return acc;
  };
  auto all_signed = [&](double sign) {
    for (int tau = 1; tau < g.k; ++tau) {
      if (g.size(tau) > 1 && !(sign * chain_sum(tau) > 0)) return false;
      if (!(sign * b[g.last(tau)][g.last(tau) + 1] > 0)) return false;
    }
    return true;
  };

  const double S = in.sum_B_delta;
  const bool symmetric_pair = d == 2 && g.k == 1;
  const double thr = in.jump_threshold;
  // For d = 2, N = 2, λ_1 = λ_2 the attractive branch needs β_12 > 0 explicitly.
  const bool jump_regime = symmetric_pair && s.dim == 2;
  if (S > 0 && all_signed(+1.0) && (!jump_regime || b[0][1] > 0)) {
    rep.case_label = 'a';
  } else if (S < 0 && d >= 3 && all_signed(-1.0)) {
    rep.case_label = 'b';
  } else if (S > 0 && d == 2) {
    const double b12 = b[0][1];
    if (jump_regime) {
      if (thr < b12 && b12 < 0) rep.case_label = 'c';
    } else if (b12 < 0) {
      rep.case_label = 'c';
    }
  } else if (S < 0 && jump_regime) {
    if (b[0][1] < thr && thr < 0) rep.case_label = 'd';
  }
  if (rep.case_label == 'N') rep.failed_clauses.push_back("NO_CASE");
  return rep;
}

nlohmann::json to_json(const SpikeConfiguration& c) {
  nlohmann::json j;
  j["dim"] = c.dim;
  j["theta"] = c.theta_count;
  j["phase"] = c.phase;
  j["rho"] = c.rho;
  j["alpha"] = c.alpha;
  j["offset"] = c.offset;
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& comp : c.centers) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& p : comp) row.push_back({p[0], p[1], p[2]});
    centers.push_back(row);
  }
  j["centers"] = centers;
  return j;
}

SpikeConfiguration configuration_from_json(const nlohmann::json& j) {
  try {
    const auto rho = j.at("rho").get<std::vector<double>>();
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    auto c = make_configuration(j.at("dim").get<int>(), j.at("theta").get<int>(), rho,
                                std::vector<double>(alpha.begin(), alpha.end() - 1));
    // Keep the stored closing gap bit-for-bit.
    c.alpha = alpha;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-config", fmt::format("configuration JSON: {}", e.what()));
  }
}

nlohmann::json to_json(const ValidationReport& r) {
  return {{"pinching", r.pinching},
          {"nu_star_gt_one", r.nu_star_gt_one},
          {"eigen_margin", r.eigen_margin},
          {"below_principal", r.below_principal},
          {"case", std::string(1, r.case_label)},
          {"failed_clauses", r.failed_clauses},
          {"notes", r.notes},
          {"passes", r.passes()}};
}

}  // namespace nls
