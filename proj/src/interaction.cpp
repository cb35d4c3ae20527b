#include "nls/interaction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "nls/error.hpp"

namespace nls {

namespace {

std::atomic<int> g_threads{0};

// Row sums are computed in parallel and reduced in row order, so the result
// does not depend on the thread count.
template <class RowFn>
double ordered_row_sum(long rows, RowFn&& row) {
  std::vector<double> sums(rows, 0.0);
  const int req = g_threads.load();
  const long nt = req > 0 ? req : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (long t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (long i = t; i < rows; i += nt) sums[i] = row(i);
    });
  for (auto& th : pool) th.join();
  double acc = 0.0;
  for (double v : sums) acc += v;
  return acc;
}

double quadrature(const RadialProfile& a, const RadialProfile& b, double xi, OverlapKind kind,
                  double nu, double h) {
  const int N = a.params.dim;
  const double H = std::max(a.r_max, xi + b.r_max);
  const long m = static_cast<long>(std::ceil(H / h));
  const double excl2 = h * h * (1.0 - 1e-12);

  auto integrand = [&](double x1, double s) {
    const double ra2 = x1 * x1 + s * s;
    const double rb = std::hypot(x1 - xi, s);
    switch (kind) {
      case OverlapKind::PotentialB: {
        if (ra2 < excl2) return 0.0;
        const double wb = evaluate_profile(b, rb);
        return std::pow(ra2, -0.5 * nu) * wb * wb;
      }
      case OverlapKind::CrossC: {
        const double wa = evaluate_profile(a, std::sqrt(ra2));
        return wa * wa * wa * evaluate_profile(b, rb);
      }
      default: {
        const double wa = evaluate_profile(a, std::sqrt(ra2));
        const double wb = evaluate_profile(b, rb);
        return wa * wa * wb * wb;
      }
    }
  };

  return ordered_row_sum(2 * m + 1, [&](long row) {
    const double x1 = (row - m) * h;
    const double wx = (row == 0 || row == 2 * m) ? 0.5 * h : h;
    const double f0 = integrand(x1, 0.0);
    const double f1 = integrand(x1, h);
    const double f2 = integrand(x1, 2 * h);
    auto f = [&](long j) { return j == 1 ? f1 : j == 2 ? f2 : integrand(x1, j * h); };
    double acc = 0.0;
    if (N == 2) {
      // Even integrand over s in R: the plain trapezoid is spectrally accurate.
      acc = h * f0;
      for (long j = 1; j <= m; ++j) acc += 2.0 * h * f(j);
    } else {
      // g(s) = s f(s) is odd, so the trapezoid error on [0, inf) is the Euler-Maclaurin
      // series in g'(0) = f(0), g'''(0) = 3 f''(0), g^(5)(0) = 5 f^(4)(0).
      for (long j = 1; j <= m; ++j) acc += h * (j * h) * f(j);
      const bool singular_axis = kind == OverlapKind::PotentialB && std::abs(x1) < 3 * h;
      if (!singular_axis) {
        const double d2 = (-2 * f2 + 32 * f1 - 30 * f0) / (12 * h * h);
        const double d4 = (2 * f2 - 8 * f1 + 6 * f0) / std::pow(h, 4);
        acc += h * h / 12 * f0 - std::pow(h, 4) / 720 * 3 * d2 + std::pow(h, 6) / 30240 * 5 * d4;
      }
      acc *= 2.0 * M_PI;
    }
    return wx * acc;
  });
}

}  // namespace

void set_worker_threads(int n) { g_threads.store(std::max(0, n)); }

const char* to_string(OverlapKind k) {
  switch (k) {
    case OverlapKind::PotentialB: return "POTENTIAL_B";
    case OverlapKind::CrossC: return "CROSS_C";
    case OverlapKind::SameGroupD: return "SAME_GROUP_D";
    case OverlapKind::CrossGroupDPrime: return "CROSS_GROUP_DPRIME";
  }
  return "?";
}

double overlap_integral(const RadialProfile& a, const RadialProfile& b, double xi, OverlapKind kind,
                        const OverlapOptions& opts) {
  if (!(xi >= 0)) throw Error("invalid-argument", "separation must be nonnegative");
  if (a.params.dim != b.params.dim || (a.params.dim != 2 && a.params.dim != 3))
    throw Error("invalid-argument", "overlap integrals need two profiles of dimension 2 or 3");
  if (kind == OverlapKind::PotentialB && !(opts.nu > 0 && opts.nu < a.params.dim))
    throw Error("invalid-argument", fmt::format("nu = {} must lie in (0, N)", opts.nu));
  const double lam_max = std::max(a.params.lambda, b.params.lambda);
  const double h = opts.h > 0 ? opts.h : std::min(0.1 / std::sqrt(lam_max), 0.2);

  const double fine = quadrature(a, b, xi, kind, opts.nu, 0.5 * h);
  if (opts.refine_check) {
    const double coarse = quadrature(a, b, xi, kind, opts.nu, h);
    if (std::abs(coarse - fine) > 5e-3 * std::abs(fine))
      throw Error("resolution-unresolved",
                  fmt::format("{} at xi = {}: h and h/2 differ by {:.3g} relative", to_string(kind),
                              xi, std::abs(coarse - fine) / std::abs(fine)));
  }
  return fine;
}

double DecayLaw::operator()(double xi) const {
  double v = K * std::pow(xi, p) * std::exp(-c * xi);
  return log_factor ? v * std::log(xi) : v;
}

double DecayLaw::derivative(double xi) const {
  double logd = p / xi - c;
  if (log_factor) logd += 1.0 / (xi * std::log(xi));
  return (*this)(xi)*logd;
}

DecayFit fit_decay_law(const std::vector<OverlapSample>& samples, DecayModel model) {
  const int n = static_cast<int>(samples.size());
  if (n < 3) throw Error("ill-conditioned-fit", "need at least three samples");
  const bool lf = model == DecayModel::PowerExpLog;
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double x = samples[i].separation;
    if (!(samples[i].value > 0) || !(x > 1.0))
      throw Error("ill-conditioned-fit", "samples must be positive with separation > 1");
    A(i, 0) = 1.0;
    A(i, 1) = std::log(x);
    A(i, 2) = -x;
    y(i) = std::log(samples[i].value) - (lf ? std::log(std::log(x)) : 0.0);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  DecayFit f;
  f.condition = sv(0) / sv(sv.size() - 1);
  if (!(f.condition <= 1e8))
    throw Error("ill-conditioned-fit", fmt::format("design condition {:.3g}", f.condition));
  const Eigen::VectorXd coef = svd.solve(y);
  f.law = {std::exp(coef(0)), coef(1), coef(2), lf};
  f.residual = std::sqrt((A * coef - y).squaredNorm() / n);
  return f;
}

DecayFit fit_constant(const std::vector<OverlapSample>& samples, double p, double c, bool log_factor) {
  const int n = static_cast<int>(samples.size());
  if (n < 1) throw Error("ill-conditioned-fit", "no samples");
  std::vector<double> r(n);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = samples[i].separation;
    if (!(samples[i].value > 0))
      throw Error("ill-conditioned-fit", "constant fit needs positive samples");
    r[i] = std::log(samples[i].value) - p * std::log(x) + c * x -
           (log_factor ? std::log(std::log(x)) : 0.0);
    mean += r[i];
  }
  mean /= n;
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  DecayFit f;
  f.law = {std::exp(mean), p, c, log_factor};
  f.residual = std::sqrt(ss / n);
  f.condition = 1.0;
  return f;
}

InteractionConstants constants_from_system(const SystemParams& s, const GroupStructure& g,
                                           const std::vector<RadialProfile>& profiles,
                                           const ConstantsOptions& opts) {
  if (static_cast<int>(profiles.size()) != s.d)
    throw Error("invalid-argument", "one profile per component required");
  if (opts.points < 2 || !(opts.window_hi > opts.window_lo))
    throw Error("invalid-argument", "bad fit window");
  const int N = s.dim;
  InteractionConstants out;
  out.dim = N;
  out.dprime_factor = opts.dprime_factor;

  OverlapOptions qo;
  qo.h = opts.h;

  auto window = [&](double lambda_ref) {
    std::vector<double> xs(opts.points);
    for (int i = 0; i < opts.points; ++i)
      xs[i] = (opts.window_lo + (opts.window_hi - opts.window_lo) * i / (opts.points - 1)) /
              std::sqrt(lambda_ref);
    return xs;
  };
  auto run = [&](const std::string& family, int index, int ia, int ib, OverlapKind kind,
                 double lambda_ref, double p, double c, bool lf, double nu = 0.0) {
    FamilyRecord rec;
    rec.family = family;
    rec.index = index;
    rec.comp_a = ia;
    rec.comp_b = ib;
    OverlapOptions o = qo;
    o.nu = nu;
    for (double x : window(lambda_ref))
      rec.samples.push_back({x, overlap_integral(profiles[ia], profiles[ib], x, kind, o), kind});
    rec.fit = fit_constant(rec.samples, p, c, lf);
    out.fit_residuals.push_back(rec.fit.residual);
    out.records.push_back(rec);
    return rec.fit.law;
  };

  const double same_p = N == 2 ? -0.5 : -2.0;
  const bool same_log = N == 3;
  for (int j = 0; j < s.d; ++j) {
    const double lj = s.lambda[j];
    out.B.push_back(run("B", j, j, j, OverlapKind::PotentialB, lj, -s.nu[j], 0.0, false, s.nu[j]).K);
    out.int_w2.push_back(profiles[j].int_w2);
    const DecayLaw cl =
        run("C", j, j, j, OverlapKind::CrossC, lj, 0.5 * (1 - N), std::sqrt(lj), false);
    out.C.push_back(cl.K);
    out.C_law.push_back(cl);
  }
  for (int tau = 1; tau <= g.k; ++tau) {
    const int i = g.first(tau);
    const int j = g.size(tau) > 1 ? i + 1 : i;
    const double lt = s.lambda[i];
    const DecayLaw dl =
        run("D", tau - 1, i, j, OverlapKind::SameGroupD, lt, same_p, 2 * std::sqrt(lt), same_log);
    out.D.push_back(dl.K);
    out.D_law.push_back(dl);
  }
  for (int tau = 1; tau <= g.k; ++tau) {
    DecayLaw law;
    if (tau < g.k) {
      const int i = g.last(tau);
      const double lt = s.lambda[i];
      law = run("Dprime", tau - 1, i, i + 1, OverlapKind::CrossGroupDPrime, lt, 1.0 - N,
                2 * std::sqrt(lt), false);
    } else if (g.k > 1) {
      const double l1 = s.lambda[0];
      law = run("Dprime", tau - 1, s.d - 1, 0, OverlapKind::CrossGroupDPrime, l1, 1.0 - N,
                2 * std::sqrt(l1), false);
    } else {
      // With one group the wrap pair (d, 1) is a same-group pair and obeys the D law.
      const double l1 = s.lambda[0];
      law = run("Dprime", tau - 1, s.d - 1, 0, OverlapKind::SameGroupD, l1, same_p,
                2 * std::sqrt(l1), same_log);
    }
    out.Dprime.push_back(law.K);
    out.Dprime_law.push_back(law);
    out.Dsecond.push_back(opts.dprime_factor * law.K);
  }
  return out;
}

void write_samples_csv(const InteractionConstants& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("io-error", fmt::format("cannot write {}", path));
  f << "family,index,kind,xi,value\n";
  for (const auto& r : c.records)
    for (const auto& s : r.samples)
      f << fmt::format("{},{},{},{:.17g},{:.17g}\n", r.family, r.index, to_string(s.kind),
                       s.separation, s.value);
}

nlohmann::json to_json(const InteractionConstants& c) {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& r : c.records)
    fits.push_back({{"family", r.family},
                    {"index", r.index},
                    {"components", {r.comp_a, r.comp_b}},
                    {"K", r.fit.law.K},
                    {"p", r.fit.law.p},
                    {"c", r.fit.law.c},
                    {"log_factor", r.fit.law.log_factor},
                    {"residual", r.fit.residual}});
  return {{"dim", c.dim},     {"B", c.B},           {"C", c.C},
          {"D", c.D},         {"Dprime", c.Dprime}, {"Dsecond", c.Dsecond},
          {"dprime_factor", c.dprime_factor},
          {"int_w2", c.int_w2},
          {"fit_residuals", c.fit_residuals},
          {"fits", fits}};
}

}  // namespace nls
