#include "nls/reduced_energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "nls/error.hpp"

namespace nls {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double theta_log(int theta) { return theta * std::log(static_cast<double>(theta)); }

// Raw (ρ_j, α_g) from z = (ρ*, α*_0..α*_{d-2}).
void unscale(int d, int theta, const std::vector<double>& z, const std::vector<double>& off,
             std::vector<double>& rho, std::vector<double>& alpha) {
  rho.assign(d, z[0] * theta_log(theta));
  for (int j = 0; j < d && j < static_cast<int>(off.size()); ++j) rho[j] += off[j];
  alpha.assign(d, 0.0);
  double used = 0.0;
  for (int g = 0; g + 1 < d; ++g) {
    alpha[g] = z[g + 1] / theta;
    used += z[g + 1];
  }
  alpha[d - 1] = (kTwoPi - used) / theta;
}

bool feasible(const std::vector<double>& z, double eps) {
  if (!(z[0] > eps)) return false;
  double used = 0.0;
  for (size_t g = 1; g < z.size(); ++g) {
    if (!(z[g] > 0.0)) return false;
    used += z[g];
  }
  return used < kTwoPi;
}

double margin_of(const std::vector<double>& z, double eps) {
  double m = z[0] - eps;
  double used = 0.0;
  for (size_t g = 1; g < z.size(); ++g) {
    m = std::min(m, z[g]);
    used += z[g];
  }
  return std::min(m, kTwoPi - used);
}

// Quasi-Newton search for the extremum of the interaction over the free angles at fixed ρ*.
struct AngleSearch {
  const ReducedProblem& p;
  int theta;
  double rho_star;
  const std::vector<double>& off;
  double sign;  // +1 minimizes, -1 maximizes

  double f(const std::vector<double>& a, std::vector<double>* grad) const {
    std::vector<double> z(a.size() + 1);
    z[0] = rho_star;
    std::copy(a.begin(), a.end(), z.begin() + 1);
    const ScaledValue v = evaluate_scaled(p, theta, z, off);
    if (grad) {
      grad->resize(a.size());
      for (size_t i = 0; i < a.size(); ++i) (*grad)[i] = sign * v.grad[i + 1];
    }
    return sign * v.interaction;
  }

  bool inside(const std::vector<double>& a) const {
    double used = 0.0;
    for (double x : a) {
      if (!(x > 0.0)) return false;
      used += x;
    }
    return used < kTwoPi;
  }

  std::vector<double> grid_start(int m) const {
    const int n = static_cast<int>(p.system.d) - 1;
    std::vector<int> idx(n, 1);
    std::vector<double> best, a(n);
    double best_f = std::numeric_limits<double>::infinity();
    while (true) {
      int sum = std::accumulate(idx.begin(), idx.end(), 0);
      if (sum <= m) {
        for (int i = 0; i < n; ++i) a[i] = kTwoPi * idx[i] / (m + 1);
        const double v = f(a, nullptr);
        if (v < best_f) {
          best_f = v;
          best = a;
        }
      }
      int i = 0;
      while (i < n) {
        if (++idx[i] <= m) break;
        idx[i] = 1;
        ++i;
      }
      if (i == n) break;
    }
    return best;
  }

  std::vector<double> run(std::vector<double> a) const {
    const int n = static_cast<int>(a.size());
    if (n == 0) return a;
    std::vector<double> g, gn, an(n);
    double fa = f(a, &g);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    for (int it = 0; it < 400; ++it) {
      Eigen::Map<Eigen::VectorXd> gv(g.data(), n);
      Eigen::VectorXd dir = -H * gv;
      if (dir.dot(gv) >= 0.0) {
        H.setIdentity();
        dir = -gv;
      }
      // Keep the first trial inside the simplex and within 0.5 rad.
      double t = std::min(1.0, 0.5 / std::max(dir.cwiseAbs().maxCoeff(), 1e-300));
      double fn = fa;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
        for (int i = 0; i < n; ++i) an[i] = a[i] + t * dir[i];
        if (!inside(an)) continue;
        fn = f(an, &gn);
        if (fn <= fa + 1e-4 * t * dir.dot(gv)) {
          moved = true;
          break;
        }
      }
      if (!moved) break;
      Eigen::VectorXd s(n), y(n);
      for (int i = 0; i < n; ++i) {
        s[i] = an[i] - a[i];
        y[i] = gn[i] - g[i];
      }
      const double sy = s.dot(y);
      const double df = fa - fn;
      a = an;
      g = gn;
      fa = fn;
      if (s.cwiseAbs().maxCoeff() < 1e-13 || df <= 1e-16 * std::abs(fa)) break;
      if (sy > 0.0) {
        if (!scaled) {
          H *= sy / y.dot(y);
          scaled = true;
        }
        const double r = 1.0 / sy;
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        H = (I - r * s * y.transpose()) * H * (I - r * y * s.transpose()) + r * s * s.transpose();
      }
    }
    return a;
  }
};

Eigen::MatrixXd hessian(const ReducedProblem& p, int theta, const std::vector<double>& z,
                        const std::vector<double>& off) {
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd H(n, n);
  for (int i = 0; i < n; ++i) {
    const double h = 1e-5 * std::max(std::abs(z[i]), 1e-2);
    std::vector<double> zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const auto gp = evaluate_scaled(p, theta, zp, off).grad;
    const auto gm = evaluate_scaled(p, theta, zm, off).grad;
    for (int r = 0; r < n; ++r) H(r, i) = (gp[r] - gm[r]) / (2 * h);
  }
  return 0.5 * (H + H.transpose());
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

DecayLaw scaled_law(const DecayLaw& l, double factor) {
  DecayLaw out = l;
  out.K *= factor;
  return out;
}

}  // namespace

const char* to_string(GapKind k) {
  switch (k) {
    case GapKind::InGroup: return "in_group";
    case GapKind::Boundary: return "boundary";
    case GapKind::Wrap: return "wrap";
  }
  return "?";
}

std::vector<GapTerm> gap_terms(const ReducedProblem& p) {
  const auto& s = p.system;
  const auto& g = p.groups;
  const auto& k = p.constants;
  const int d = s.d;
  const double power = 1.0 - s.dim;
  std::vector<GapTerm> out(d);
  for (int j = 0; j < d; ++j) {
    GapTerm& t = out[j];
    t.from = j;
    t.to = (j + 1) % d;
    t.beta = s.beta[t.from][t.to];
    const int tau = g.group_of(j);
    if (j == d - 1) {
      t.kind = GapKind::Wrap;
      t.law = {k.Dsecond[g.k - 1], power, 2.0 * std::sqrt(s.lambda[0]), false};
    } else if (j == g.last(tau)) {
      t.kind = GapKind::Boundary;
      t.law = scaled_law(k.Dprime_law[tau - 1], k.dprime_factor);
    } else {
      t.kind = GapKind::InGroup;
      t.law = k.D_law[tau - 1];
    }
  }
  return out;
}

ReducedEnergyBreakdown evaluate_J(const ReducedProblem& p, int theta, const std::vector<double>& rho,
                                  const std::vector<double>& alpha) {
  const auto& s = p.system;
  const auto& k = p.constants;
  const int d = s.d;
  if (static_cast<int>(rho.size()) != d || static_cast<int>(alpha.size()) != d)
    throw Error("degenerate-config", "need d radii and d gaps");
  const double th = theta;
  const double chord = 2.0 * std::sin(kPi / th);
  ReducedEnergyBreakdown b;
  b.potential.assign(d, 0.0);
  b.same_component.assign(d, 0.0);
  b.gap.assign(d, 0.0);
  b.grad_rho.assign(d, 0.0);
  b.grad_alpha.assign(d, 0.0);
  for (int j = 0; j < d; ++j) {
    b.base += th * p.energies[j];
    const double bd = k.B[j] * s.delta[j];
    b.potential[j] = th * bd * std::pow(rho[j], -s.nu[j]);
    b.grad_rho[j] += -th * s.nu[j] * bd * std::pow(rho[j], -s.nu[j] - 1.0);
    const double eta = chord * rho[j];
    b.same_component[j] = -th * k.C_law[j](eta);
    b.grad_rho[j] += -th * k.C_law[j].derivative(eta) * chord;
  }
  for (const GapTerm& t : gap_terms(p)) {
    const int g = t.from;
    const double x = rho[g] * alpha[g];
    b.gap[g] = -th * t.beta * t.law(x);
    b.gap_kind.push_back(t.kind);
    const double dl = -th * t.beta * t.law.derivative(x);
    b.grad_rho[g] += dl * alpha[g];
    b.grad_alpha[g] += dl * rho[g];
  }
  b.total = b.base;
  for (int j = 0; j < d; ++j) b.total += b.potential[j] + b.same_component[j] + b.gap[j];
  return b;
}

ReducedEnergyBreakdown evaluate_J(const ReducedProblem& p, const SpikeConfiguration& c) {
  return evaluate_J(p, c.theta_count, c.rho, c.alpha);
}

ScaledValue evaluate_scaled(const ReducedProblem& p, int theta, const std::vector<double>& z,
                            const std::vector<double>& off) {
  const int d = p.system.d;
  if (static_cast<int>(z.size()) != d) throw Error("degenerate-config", "z must have d entries");
  std::vector<double> rho, alpha;
  unscale(d, theta, z, off, rho, alpha);
  const ReducedEnergyBreakdown b = evaluate_J(p, theta, rho, alpha);
  ScaledValue v;
  v.total = b.total;
  v.interaction = b.interaction();
  v.grad.assign(d, 0.0);
  for (int j = 0; j < d; ++j) v.grad[0] += b.grad_rho[j];
  v.grad[0] *= theta_log(theta);
  for (int g = 0; g + 1 < d; ++g) v.grad[g + 1] = (b.grad_alpha[g] - b.grad_alpha[d - 1]) / theta;
  return v;
}

std::vector<double> balanced_angles(const SystemParams& s, const GroupStructure& g) {
  const int k = g.k;
  double S = g.size(k) / std::sqrt(s.lambda[0]);
  for (int tau = 1; tau < k; ++tau) S += g.size(tau) / std::sqrt(s.lambda[g.last(tau)]);
  std::vector<double> a(s.d);
  for (int j = 0; j < s.d; ++j) {
    const int tau = g.group_of(j);
    const double l = tau < k ? s.lambda[g.last(tau)] : s.lambda[0];
    a[j] = kTwoPi / (std::sqrt(l) * S);
  }
  return a;
}

double dominant_rate(const ReducedProblem& p, const std::vector<double>& alpha_star) {
  double r = std::numeric_limits<double>::infinity();
  for (int j = 0; j < p.system.d; ++j) r = std::min(r, kTwoPi * std::sqrt(p.system.lambda[j]));
  for (const GapTerm& t : gap_terms(p)) r = std::min(r, t.law.c * alpha_star[t.from]);
  return r;
}

RadiusResult optimal_radius_1d(const std::function<double(double)>& value,
                               const std::function<double(double)>& derivative, double eps,
                               double hi, bool maximize) {
  if (!(hi > eps)) throw Error("no-interior-critical-point", "empty radius interval");
  constexpr int kScan = 400;
  std::vector<double> xs(kScan), ds(kScan);
  for (int i = 0; i < kScan; ++i) {
    xs[i] = eps * std::pow(hi / eps, static_cast<double>(i) / (kScan - 1));
    ds[i] = derivative(xs[i]);
  }
  RadiusResult best;
  bool found = false;
  for (int i = 0; i + 1 < kScan; ++i) {
    const bool right_type = maximize ? (ds[i] > 0 && ds[i + 1] <= 0) : (ds[i] < 0 && ds[i + 1] >= 0);
    if (!right_type) continue;
    double x = xs[i + 1];
    if (ds[i + 1] != 0.0) {
      std::uintmax_t iters = 200;
      auto br = boost::math::tools::toms748_solve(
          derivative, xs[i], xs[i + 1], ds[i], ds[i + 1],
          boost::math::tools::eps_tolerance<double>(52), iters);
      x = 0.5 * (br.first + br.second);
    }
    const double v = value(x);
    if (!found || (maximize ? v > best.value : v < best.value)) {
      best.rho_star = x;
      best.value = v;
      found = true;
    }
  }
  if (!found)
    throw Error("no-interior-critical-point",
                fmt::format("no {} of the radial profile in [{:.6g}, {:.6g}]",
                            maximize ? "maximum" : "minimum", eps, hi));
  return best;
}

RadiusResult optimal_radius(const ReducedProblem& p, int theta,
                            const std::vector<double>& alpha_star, bool maximize, double eps) {
  const int d = p.system.d;
  const double ls = dominant_rate(p, alpha_star);
  auto z_of = [&](double r) {
    std::vector<double> z(d);
    z[0] = r;
    for (int g = 0; g + 1 < d; ++g) z[g + 1] = alpha_star[g];
    return z;
  };
  RadiusResult out = optimal_radius_1d(
      [&](double r) { return evaluate_scaled(p, theta, z_of(r)).interaction; },
      [&](double r) { return evaluate_scaled(p, theta, z_of(r)).grad[0]; }, eps,
      10.0 * p.system.nu_star() / ls, maximize);
  out.lambda_star = ls;
  return out;
}

double TwoTermModel::value(double rho, int theta) const {
  return b_delta * std::pow(rho * theta_log(theta), -nu) -
         K * std::exp(-lambda * rho * std::log(static_cast<double>(theta)));
}

double TwoTermModel::derivative(double rho, int theta) const {
  const double lt = std::log(static_cast<double>(theta));
  return -nu * b_delta * std::pow(theta_log(theta), -nu) * std::pow(rho, -nu - 1.0) +
         K * lambda * lt * std::exp(-lambda * rho * lt);
}

RadiusResult optimal_radius(const TwoTermModel& m, int theta, double eps) {
  RadiusResult r = optimal_radius_1d([&](double x) { return m.value(x, theta); },
                                     [&](double x) { return m.derivative(x, theta); }, eps,
                                     10.0 * m.nu / m.lambda, true);
  r.lambda_star = m.lambda;
  return r;
}

CriticalPointReport find_critical_point(const ReducedProblem& p, int theta, char case_label,
                                        const OptimizerOptions& opts) {
  const int d = p.system.d;
  const auto& off = opts.rho_offsets;
  // Inner extremum over α, outer over ρ*: (a) max/max, (b),(d) min/min, (c) min/max.
  bool inner_max = false, outer_max = false;
  switch (case_label) {
    case 'a': inner_max = outer_max = true; break;
    case 'b':
    case 'd': break;
    case 'c': outer_max = true; break;
    default: throw Error("bad-config", fmt::format("unknown case '{}'", case_label));
  }
  CriticalPointReport rep;
  rep.case_label = case_label;
  rep.balanced = balanced_angles(p.system, p.groups);
  const double hi = 10.0 * p.system.nu_star() / dominant_rate(p, rep.balanced);
  const double eps = opts.eps;

  auto inner = [&](double r, const std::vector<double>* warm) {
    AngleSearch s{p, theta, r, off, inner_max ? -1.0 : 1.0};
    std::vector<double> a0 = warm ? *warm : s.grid_start(opts.angle_grid);
    std::vector<double> a = s.run(a0);
    const double v = s.sign * s.f(a, nullptr) * (outer_max ? 1.0 : -1.0);
    return std::make_pair(a, v);  // v is maximized by the outer search
  };

  double best_v = -std::numeric_limits<double>::infinity();
  int best_i = -1;
  std::vector<double> rs(opts.rho_grid);
  std::vector<std::vector<double>> as(opts.rho_grid);
  for (int i = 0; i < opts.rho_grid; ++i) {
    rs[i] = eps + (hi - eps) * (i + 1.0) / (opts.rho_grid + 1.0);
    auto [a, v] = inner(rs[i], i > 0 ? &as[i - 1] : nullptr);
    as[i] = a;
    if (v > best_v) {
      best_v = v;
      best_i = i;
    }
  }
  if (best_i == 0 || best_i == opts.rho_grid - 1)
    throw Error("boundary-attained",
                fmt::format("outer extremum at the edge of [{:.6g}, {:.6g}]", eps, hi));

  // Golden section on the bracketing grid cells.
  double lo = rs[best_i - 1], up = rs[best_i + 1];
  std::vector<double> warm = as[best_i];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = up - gr * (up - lo), x2 = lo + gr * (up - lo);
  auto e1 = inner(x1, &warm), e2 = inner(x2, &warm);
  for (int it = 0; it < 60 && (up - lo) > 1e-10 * up; ++it) {
    if (e1.second > e2.second) {
      up = x2;
      x2 = x1;
      e2 = e1;
      x1 = up - gr * (up - lo);
      e1 = inner(x1, &e2.first);
    } else {
      lo = x1;
      x1 = x2;
      e1 = e2;
      x2 = lo + gr * (up - lo);
      e2 = inner(x2, &e1.first);
    }
  }
  const auto& mid = e1.second > e2.second ? e1 : e2;
  std::vector<double> z(d);
  z[0] = e1.second > e2.second ? x1 : x2;
  for (int g = 0; g + 1 < d; ++g) z[g + 1] = mid.first[g];

  // Newton polish on ∇J = 0 with a finite-difference Hessian of the analytic gradient.
  ScaledValue v = evaluate_scaled(p, theta, z, off);
  double gn = norm(v.grad);
  int iters = 0;
  for (; iters < 50; ++iters) {
    if (gn <= 1e-14 * std::max(1.0, std::abs(v.total))) break;
    const Eigen::MatrixXd H = hessian(p, theta, z, off);
    Eigen::Map<Eigen::VectorXd> gv(v.grad.data(), d);
    const Eigen::VectorXd step = H.fullPivLu().solve(-gv);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      std::vector<double> zn = z;
      for (int i = 0; i < d; ++i) zn[i] += t * step[i];
      if (!feasible(zn, eps)) continue;
      const ScaledValue vn = evaluate_scaled(p, theta, zn, off);
      const double nn = norm(vn.grad);
      if (nn < gn) {
        z = zn;
        v = vn;
        gn = nn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  rep.iterations = iters;
  rep.rho_star = z[0];
  rep.alpha_star.assign(z.begin() + 1, z.end());
  double used = 0.0;
  for (double a : rep.alpha_star) used += a;
  rep.alpha_star.push_back(kTwoPi - used);
  rep.value = v.total;
  rep.interaction = v.interaction;
  rep.gradient_norm = gn;
  rep.margin = margin_of(z, eps);
  if (rep.margin <= 1e-6 * std::max(1.0, z[0]))
    throw Error("boundary-attained", "critical point lies on the boundary of the domain");
  rep.lambda_star = dominant_rate(p, rep.alpha_star);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian(p, theta, z, off));
  const Eigen::VectorXd ev = es.eigenvalues();
  const double zero = 1e-9 * ev.cwiseAbs().maxCoeff();
  for (int i = 0; i < d; ++i) {
    rep.hessian_eigenvalues.push_back(ev[i]);
    if (ev[i] > zero) ++rep.signature[0];
    else if (ev[i] < -zero) ++rep.signature[1];
    else ++rep.signature[2];
  }
  switch (case_label) {
    case 'a': rep.signature_ok = rep.signature[1] == d; break;
    case 'b':
    case 'd': rep.signature_ok = rep.signature[0] == d; break;
    case 'c': rep.signature_ok = rep.signature[1] == 1 && rep.signature[0] == d - 1; break;
  }

  const auto& g = p.groups;
  const auto& a = rep.alpha_star;
  rep.m_set_lemma_form = true;
  for (int tau = 1; tau + 2 <= g.k; ++tau)
    if (!(a[g.last(tau + 1)] < a[g.last(tau)])) rep.m_set_lemma_form = false;
  rep.m_set_prop_form = true;
  for (int tau = 2; tau + 1 <= g.k; ++tau)
    if (!(a[g.first(tau + 1)] <= a[g.last(tau)])) rep.m_set_prop_form = false;
  return rep;
}

Projection projection_asymptotics(const ReducedProblem& p, const SpikeConfiguration& c, int j) {
  const int d = p.system.d;
  if (j < 0 || j >= d) throw Error("bad-config", fmt::format("component {} out of range", j));
  const auto& g = p.groups;
  const auto terms = gap_terms(p);
  const GapTerm& R = terms[j];
  const GapTerm& L = terms[(j + d - 1) % d];
  const double rho = c.rho[j];
  const double aR = c.alpha[j], aL = c.alpha[(j + d - 1) % d];

  Projection out;
  const int tau = g.group_of(j);
  if (g.k == 1 || (j != g.first(tau) && j != g.last(tau))) out.lemma_case = 1;
  else if (j == 0) out.lemma_case = 3;
  else if (j == d - 1) out.lemma_case = 5;
  else if (j == g.first(tau)) out.lemma_case = 2;
  else out.lemma_case = 4;

  // Fitted pair law of a gap; the wrap pair of a single group obeys the same-group law.
  auto pair_law = [&](const GapTerm& t) {
    const auto& k = p.constants;
    if (t.kind == GapKind::InGroup) return k.D_law[g.group_of(t.from) - 1];
    if (t.kind == GapKind::Wrap) return k.Dprime_law[g.k - 1];
    return k.Dprime_law[g.group_of(t.from) - 1];
  };
  const DecayLaw lR = pair_law(R), lL = pair_law(L);
  // ∂_θ ℓ(ρα) ≈ ρ c ℓ and ∂_ρ (chord) ≈ α/2 at leading order.
  const double tR = R.beta * lR.c * lR(rho * aR);
  const double tL = L.beta * lL.c * lL(rho * aL);
  out.proj_theta = 0.5 * rho * (tR - tL);
  out.proj_rho = -0.25 * (tR * aR + tL * aL);
  const double rR = c.rho[R.from], rL = c.rho[L.from];
  const double xR = -R.beta * rR * R.law.derivative(rR * aR);
  const double xL = L.beta * rL * L.law.derivative(rL * aL);
  out.proj_theta_exact = 0.5 * (xR + xL);
  out.scale = 0.5 * std::max(std::abs(xR), std::abs(xL));
  return out;
}

JumpThreshold jumping_threshold(const InteractionConstants& k) {
  const double C1 = k.C.at(0), D1 = k.D.at(0);
  return {-2.0 * std::sqrt(kPi) * C1 / D1, -2.0 * C1 / (std::sqrt(kPi) * D1)};
}

double gap_channel_coefficient(const InteractionConstants& k, double beta) {
  return 2.0 * k.C.at(0) + k.D.at(0) * beta / std::sqrt(kPi);
}

double exact_channel_root(const ReducedProblem& p, int theta, double rho_star) {
  const auto& k = p.constants;
  const double rho = rho_star * theta_log(theta);
  const double eta = 2.0 * rho * std::sin(kPi / theta);
  double c_terms = 0.0;
  for (int j = 0; j < p.system.d; ++j) c_terms += k.C_law[j](eta);
  return -c_terms / k.D_law.at(0)(rho * kPi / theta);
}

nlohmann::json to_json(const ReducedEnergyBreakdown& b) {
  std::vector<std::string> kinds;
  for (GapKind g : b.gap_kind) kinds.emplace_back(to_string(g));
  return {{"total", b.total},
          {"base", b.base},
          {"interaction", b.interaction()},
          {"potential", b.potential},
          {"same_component", b.same_component},
          {"gap", b.gap},
          {"gap_kind", kinds},
          {"grad_rho", b.grad_rho},
          {"grad_alpha", b.grad_alpha}};
}

nlohmann::json to_json(const CriticalPointReport& r) {
  return {{"case", std::string(1, r.case_label)},
          {"rho_star", r.rho_star},
          {"alpha_star", r.alpha_star},
          {"value", r.value},
          {"interaction", r.interaction},
          {"gradient_norm", r.gradient_norm},
          {"hessian_eigenvalues", r.hessian_eigenvalues},
          {"signature", {{"positive", r.signature[0]}, {"negative", r.signature[1]},
                         {"zero", r.signature[2]}}},
          {"signature_ok", r.signature_ok},
          {"iterations", r.iterations},
          {"interior_margin", r.margin},
          {"lambda_star", r.lambda_star},
          {"balanced_angles", r.balanced},
          {"m_set_lemma_form", r.m_set_lemma_form},
          {"m_set_prop_form", r.m_set_prop_form}};
}

void write_landscape_csv(const ReducedProblem& p, int theta, const std::vector<double>& rho_values,
                         int angle_grid, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("io-error", fmt::format("cannot write {}", path));
  const int d = p.system.d;
  f << "rho_star";
  for (int g = 0; g < d; ++g) f << ",alpha_star_" << g;
  f << ",J,interaction\n";
  const int n = d - 1;
  for (double r : rho_values) {
    std::vector<int> idx(n, 1);
    while (true) {
      if (std::accumulate(idx.begin(), idx.end(), 0) <= angle_grid) {
        std::vector<double> z(d);
        z[0] = r;
        double used = 0.0;
        for (int i = 0; i < n; ++i) used += z[i + 1] = kTwoPi * idx[i] / (angle_grid + 1);
        const ScaledValue v = evaluate_scaled(p, theta, z);
        f << fmt::format("{:.17g}", r);
        for (int i = 0; i < n; ++i) f << fmt::format(",{:.17g}", z[i + 1]);
        f << fmt::format(",{:.17g},{:.17g},{:.17g}\n", kTwoPi - used, v.total, v.interaction);
      }
      int i = 0;
      while (i < n) {
        if (++idx[i] <= angle_grid) break;
        idx[i] = 1;
        ++i;
      }
      if (i == n) break;
    }
  }
}

}  // namespace nls
