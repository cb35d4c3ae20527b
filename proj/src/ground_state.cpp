#include "nls/ground_state.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Sparse>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "nls/error.hpp"

namespace nls {
namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

struct RadialOde {
  double lambda, mu;
  int dim;
  void operator()(const State& x, State& dxdt, double r) const {
    dxdt[0] = x[1];
    dxdt[1] = -(dim - 1) / r * x[1] + lambda * x[0] - mu * x[0] * x[0] * x[0];
  }
};

// Two-term series w(r) = a + (λa - μa³) r²/(2N) at a small r0.
State series_start(const ScalarParams& p, double a, double r0) {
  double c = (p.lambda * a - p.mu * a * a * a) / p.dim;
  return {a + 0.5 * c * r0 * r0, c * r0};
}

// Decaying solution of the linearized equation w'' + (N-1)w'/r = λw.
State linear_tail(int dim, double k, double r) {
  if (dim == 1) {
    double e = std::exp(-k * r);
    return {e, -k * e};
  }
  if (dim == 3) {
    double e = std::exp(-k * r) / r;
    return {e, -(k + 1.0 / r) * e};
  }
  return {std::cyl_bessel_k(0.0, k * r), -k * std::cyl_bessel_k(1.0, k * r)};
}

enum class Shot { Over, Under, Reached };

class Integrator {
 public:
  Integrator(const ScalarParams& p, double abs_tol, double rel_tol)
      : ode_{p.lambda, p.mu, p.dim},
        stepper_(odeint::make_controlled(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>())) {}

  // Integrate from t0 to t1 (either direction), landing exactly on t1.
  void advance(State& x, double t0, double t1, double& dt) {
    if (t0 == t1) return;
    double dir = t1 > t0 ? 1.0 : -1.0;
    dt = dir * std::abs(dt);
    double t = t0;
    int failures = 0;
    stepper_.reset();  // the FSAL stepper caches dxdt from the previous call
    while (dir * (t1 - t) > 0) {
      if (dir * (t + dt - t1) > 0) dt = t1 - t;
      auto res = stepper_.try_step(ode_, x, t, dt);
      if (res == odeint::fail) {
        if (++failures > 500 || std::abs(dt) < 1e-14 * (1.0 + std::abs(t)))
          throw Error("nonconvergence", fmt::format("ODE step control failed near r = {}", t));
        continue;
      }
      failures = 0;
      if (dir * (t1 - t) < 1e-14 * std::abs(t1)) t = t1;
    }
  }

  Shot classify(State x, double t, double t_end, double dt) {
    int failures = 0;
    stepper_.reset();
    while (t < t_end) {
      if (t + dt > t_end) dt = t_end - t;
      auto res = stepper_.try_step(ode_, x, t, dt);
      if (res == odeint::fail) {
        if (++failures > 500 || dt < 1e-14 * (1.0 + t))
          throw Error("nonconvergence", fmt::format("ODE step control failed near r = {}", t));
        continue;
      }
      failures = 0;
      if (x[0] <= 0.0) return Shot::Over;
      if (x[1] > 0.0) return Shot::Under;
    }
    return Shot::Reached;
  }

 private:
  RadialOde ode_;
  odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>> stepper_;
};

double simpson(const std::vector<double>& f, double h) {
  std::size_t n = f.size() - 1;  // even by construction
  double s = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return s * h / 3.0;
}

}  // namespace

double default_r_max(double lambda) { return 25.0 / std::sqrt(lambda); }

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
  }
  throw Error("invalid-argument", fmt::format("unsupported dimension {}", dim));
}

RadialProfile solve_ground_state(const ScalarParams& params) {
  return solve_ground_state(params, default_r_max(params.lambda), 1e-10);
}

RadialProfile solve_ground_state(const ScalarParams& params, double r_max, double tol,
                                 const GroundStateOptions& opts) {
  if (!(params.lambda > 0) || !(params.mu > 0))
    throw Error("invalid-argument", "lambda and mu must be positive");
  if (params.dim < 1 || params.dim > 3)
    throw Error("invalid-argument", fmt::format("dimension {} not in {{1,2,3}}", params.dim));
  if (!(tol > 0) || tol > 1e-6) throw Error("invalid-argument", "tol must lie in (0, 1e-6]");
  const double k = std::sqrt(params.lambda);
  if (r_max * k < 20.0 - 1e-12) throw Error("invalid-argument", "r_max must be at least 20/sqrt(lambda)");

  const double scale = std::sqrt(params.lambda / params.mu);
  const double rel = std::clamp(tol * 1e-4, 1e-14, 1e-12);
  Integrator integ(params, 1e-3 * rel * scale, rel);
  Integrator integ_tail(params, 1e-30 * scale, rel);

  std::size_t n = static_cast<std::size_t>(std::ceil(r_max * k / opts.spacing));
  if (n % 2) ++n;
  const double h = r_max / static_cast<double>(n);
  const double r0 = std::min(1e-3 * h, 1e-5 / k);
  const double dt0 = 0.01 / k;

  auto shoot = [&](double a) { return integ.classify(series_start(params, a, r0), r0, r_max, dt0); };

  // Bracket: a_lo turns upward, a_hi crosses zero.
  double a_lo = 0.5 * scale, a_hi = 8.0 * scale;
  if (shoot(a_lo) != Shot::Under)
    throw Error("bracket-failure", "lower shooting value does not turn upward");
  int expand = 0;
  while (shoot(a_hi) != Shot::Over) {
    a_hi *= 2.0;
    if (++expand > 10) throw Error("bracket-failure", "upper shooting value never crosses zero");
  }
  bool separated = false;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a_lo + a_hi);
    if (mid <= a_lo || mid >= a_hi || a_hi - a_lo <= 4 * std::numeric_limits<double>::epsilon() * a_hi) {
      separated = true;
      break;
    }
    Shot s = shoot(mid);
    if (s == Shot::Reached) {
      a_lo = a_hi = mid;
      separated = true;
      break;
    }
    (s == Shot::Over ? a_hi : a_lo) = mid;
  }
  if (!separated) throw Error("bracket-failure", "bisection did not separate blow-up from crossing in 200 iterations");

  // Outward from the origin and inward from r_max meet at r_m; (a, c) are
  // refined so that w and w' agree there.
  const std::size_t i_m = static_cast<std::size_t>(std::lround(5.0 / k / h));
  const double r_m = h * static_cast<double>(i_m);
  auto outward = [&](double a) {
    State x = series_start(params, a, r0);
    double dt = dt0;
    integ.advance(x, r0, r_m, dt);
    return x;
  };
  auto inward = [&](double c) {
    State x = linear_tail(params.dim, k, r_max);
    x[0] *= c;
    x[1] *= c;
    double dt = dt0;
    integ_tail.advance(x, r_max, r_m, dt);
    return x;
  };

  double a = 0.5 * (a_lo + a_hi);
  State lin_m = linear_tail(params.dim, k, r_m);
  State xo = outward(a);
  double c = xo[0] / lin_m[0];
  for (int it = 0; it < 20; ++it) {
    State xi = inward(c);
    double f0 = xo[0] - xi[0], f1 = xo[1] - xi[1];
    if (std::abs(f0) + std::abs(f1) < 1e-15 * a) break;
    double da = 1e-7 * a, dc = 1e-7 * c;
    State xo_a = outward(a + da), xi_c = inward(c + dc);
    double j00 = (xo_a[0] - xo[0]) / da, j01 = -(xi_c[0] - xi[0]) / dc;
    double j10 = (xo_a[1] - xo[1]) / da, j11 = -(xi_c[1] - xi[1]) / dc;
    double det = j00 * j11 - j01 * j10;
    if (det == 0.0) break;
    double step_a = (f0 * j11 - f1 * j01) / det;
    double step_c = (j00 * f1 - j10 * f0) / det;
    a -= step_a;
    c -= step_c;
    xo = outward(a);
    if (std::abs(step_a) < 1e-16 * a && std::abs(step_c) < 1e-15 * c) break;
  }
  {
    State xi = inward(c);
    double mismatch = std::abs(xo[0] - xi[0]) + std::abs(xo[1] - xi[1]);
    if (mismatch > tol * a) throw Error("nonconvergence", fmt::format("matching failed, mismatch {}", mismatch));
  }

  RadialProfile p;
  p.params = params;
  p.r_max = r_max;
  p.h = h;
  p.r.resize(n + 1);
  p.w.resize(n + 1);
  p.dw.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) p.r[i] = h * static_cast<double>(i);
  p.r[n] = r_max;
  p.w[0] = a;
  p.dw[0] = 0.0;
  {
    State x = series_start(params, a, r0);
    double t = r0, dt = dt0;
    for (std::size_t i = 1; i <= i_m; ++i) {
      integ.advance(x, t, p.r[i], dt);
      t = p.r[i];
      p.w[i] = x[0];
      p.dw[i] = x[1];
    }
  }
  {
    State x = linear_tail(params.dim, k, r_max);
    x[0] *= c;
    x[1] *= c;
    p.w[n] = x[0];
    p.dw[n] = x[1];
    double t = r_max, dt = dt0;
    for (std::size_t i = n; i-- > i_m;) {
      integ_tail.advance(x, t, p.r[i], dt);
      t = p.r[i];
      if (i == i_m) {
        p.w[i] = 0.5 * (p.w[i] + x[0]);
        p.dw[i] = 0.5 * (p.dw[i] + x[1]);
      } else {
        p.w[i] = x[0];
        p.dw[i] = x[1];
      }
    }
  }

  // ODE residual from an eighth-order derivative of w' (odd extension at r = 0).
  {
    static const double cd[] = {1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0,
                                4.0 / 5,   -1.0 / 5,   4.0 / 105, -1.0 / 280};
    auto dw_at = [&](long j) { return j < 0 ? -p.dw[static_cast<std::size_t>(-j)] : p.dw[static_cast<std::size_t>(j)]; };
    double res = 0.0;
    for (std::size_t i = 0; i + 4 <= n; ++i) {
      double d2 = 0.0;
      for (int s = -4; s <= 4; ++s) d2 += cd[s + 4] * dw_at(static_cast<long>(i) + s);
      d2 /= h;
      double wi = p.w[i];
      double lhs = i == 0 ? params.dim * d2 : d2 + (params.dim - 1) / p.r[i] * p.dw[i];
      res = std::max(res, std::abs(lhs - params.lambda * wi + params.mu * wi * wi * wi));
    }
    p.ode_residual = res;
    if (!(res < tol * a))
      throw Error("nonconvergence", fmt::format("ODE residual {} exceeds tol*w(0) = {}", res, tol * a));
  }

  TailFit tf = tail_constant(p);
  if (tf.residual > 1e-3)
    throw Error("window-too-noisy", fmt::format("tail fit residual {} exceeds 1e-3", tf.residual));
  p.tail_constant = tf.A;
  p.decay_rate = tf.rate;
  p.tail_fit_residual = tf.residual;
  p.seam_amplitude = p.w[n] * std::pow(r_max, 0.5 * (params.dim - 1)) * std::exp(k * r_max);

  // Radial integrals with the analytic tail beyond r_max.
  const double S = sphere_area(params.dim);
  std::vector<double> f2(n + 1), f4(n + 1), fd(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    double jac = std::pow(p.r[i], params.dim - 1);
    double w2 = p.w[i] * p.w[i];
    f2[i] = jac * w2;
    f4[i] = jac * w2 * w2;
    fd[i] = jac * p.dw[i] * p.dw[i];
  }
  const double As = p.seam_amplitude;
  double tail2 = As * As * std::exp(-2 * k * r_max) / (2 * k);
  double tail4 = std::pow(As, 4) * std::pow(r_max, 1 - params.dim) * std::exp(-4 * k * r_max) / (4 * k);
  p.int_w2 = S * (simpson(f2, h) + tail2);
  p.int_w4 = S * (simpson(f4, h) + tail4);
  p.int_dw2 = S * (simpson(fd, h) + params.lambda * tail2);
  p.energy = 0.5 * (p.int_dw2 + params.lambda * p.int_w2) - 0.25 * params.mu * p.int_w4;
  return p;
}

double evaluate_profile(const RadialProfile& p, double r) {
  r = std::abs(r);
  const std::size_t n = p.size() - 1;
  if (r >= p.r_max) {
    if (r == p.r_max) return p.w[n];
    int N = p.params.dim;
    return p.seam_amplitude * std::pow(r, 0.5 * (1 - N)) * std::exp(-std::sqrt(p.params.lambda) * r);
  }
  std::size_t i = std::min(static_cast<std::size_t>(r / p.h), n - 1);
  double t = (r - p.r[i]) / p.h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * p.w[i] + h10 * p.h * p.dw[i] + h01 * p.w[i + 1] + h11 * p.h * p.dw[i + 1];
}

double evaluate_profile_derivative(const RadialProfile& p, double r) {
  double sign = r < 0 ? -1.0 : 1.0;
  r = std::abs(r);
  const std::size_t n = p.size() - 1;
  if (r >= p.r_max) {
    if (r == p.r_max) return sign * p.dw[n];
    int N = p.params.dim;
    double k = std::sqrt(p.params.lambda);
    double v = p.seam_amplitude * std::pow(r, 0.5 * (1 - N)) * std::exp(-k * r);
    return sign * v * (0.5 * (1 - N) / r - k);
  }
  std::size_t i = std::min(static_cast<std::size_t>(r / p.h), n - 1);
  double t = (r - p.r[i]) / p.h;
  double t2 = t * t;
  double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  return sign * ((d00 * p.w[i] + d01 * p.w[i + 1]) / p.h + d10 * p.dw[i] + d11 * p.dw[i + 1]);
}

TailFit tail_constant(const RadialProfile& p) {
  const int N = p.params.dim;
  double lo = 0.5 * p.r_max, hi = 0.9 * p.r_max;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double r = p.r[i];
    if (r < lo || r > hi) continue;
    double y = std::log(p.w[i]) - 0.5 * (1 - N) * std::log(r);
    pts.emplace_back(r, y);
    sx += r;
    sy += y;
    sxx += r * r;
    sxy += r * y;
    ++m;
  }
  double md = static_cast<double>(m);
  double slope = (md * sxy - sx * sy) / (md * sxx - sx * sx);
  double icpt = (sy - slope * sx) / md;
  TailFit f;
  f.A = std::exp(icpt);
  f.rate = -slope;
  for (auto& [r, y] : pts) f.residual = std::max(f.residual, std::abs(y - (icpt + slope * r)));
  return f;
}

double energy(const RadialProfile& p) { return p.energy; }

namespace {

// Finite-volume discretization of -(r^{N-1} v')' + λ r^{N-1} v = β r^{N-1} w² v on
// nodes 0..m-1 (node m carries the zero far-field value), stride s over samples.
double principal_beta(double lambda_t, const RadialProfile& wp, std::size_t stride) {
  const int N = wp.params.dim;
  const std::size_t n = wp.size() - 1;
  const std::size_t m = n / stride;
  const double h = wp.h * static_cast<double>(stride);
  auto rr = [&](double x) { return std::pow(x, N - 1); };

  std::vector<double> mass(m), wt(m), diag(m), off(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double r = h * static_cast<double>(i);
    double lo = i == 0 ? 0.0 : r - 0.5 * h, hi = r + 0.5 * h;
    mass[i] = (std::pow(hi, N) - std::pow(lo, N)) / N;
    double w = wp.w[i * stride];
    wt[i] = mass[i] * w * w;
    double flux_hi = rr(hi) / h, flux_lo = i == 0 ? 0.0 : rr(lo) / h;
    diag[i] = flux_hi + flux_lo + lambda_t * mass[i];
    if (i + 1 < m) off[i] = -flux_hi;
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < m; ++i) {
    trip.emplace_back(i, i, diag[i]);
    if (i + 1 < m) {
      trip.emplace_back(i, i + 1, off[i]);
      trip.emplace_back(i + 1, i, off[i]);
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<long>(m), static_cast<long>(m));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw Error("discretization-unresolved", "factorization failed");

  Eigen::Map<Eigen::VectorXd> B(wt.data(), static_cast<long>(m));
  Eigen::VectorXd v(static_cast<long>(m));
  for (std::size_t i = 0; i < m; ++i) v[static_cast<long>(i)] = wp.w[i * stride];
  double beta = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd bv = B.cwiseProduct(v);
    Eigen::VectorXd nv = ldlt.solve(bv);
    double norm = std::sqrt(nv.dot(B.cwiseProduct(nv)));
    nv /= norm;
    double nb = nv.dot(A * nv) / nv.dot(B.cwiseProduct(nv));
    v = nv;
    if (it > 3 && std::abs(nb - beta) < 1e-14 * std::abs(nb)) {
      beta = nb;
      break;
    }
    beta = nb;
  }
  return beta;
}

}  // namespace

double coupling_eigenvalue(double lambda_target, const RadialProfile& weight) {
  if (!(lambda_target > 0)) throw Error("invalid-argument", "lambda_target must be positive");
  double fine = principal_beta(lambda_target, weight, 1);
  double coarse = principal_beta(lambda_target, weight, 2);
  if (std::abs(fine - coarse) > 1e-2 * std::abs(fine))
    throw Error("discretization-unresolved",
                fmt::format("refinement levels disagree: {} vs {}", fine, coarse));
  // Second-order scheme: Richardson combination of the two levels.
  return (4.0 * fine - coarse) / 3.0;
}

std::vector<std::string> profile_invariant_violations(const RadialProfile& p) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p.w[i] > 0)) {
      out.push_back(fmt::format("w not positive at r = {}", p.r[i]));
      break;
    }
    if (i > 0 && !(p.dw[i] < 0)) {
      out.push_back(fmt::format("w' not negative at r = {}", p.r[i]));
      break;
    }
  }
  if (!(p.w.back() < 1e-10 * p.w.front())) out.push_back("w(r_max) not below 1e-10 w(0)");
  double k = std::sqrt(p.params.lambda);
  if (std::abs(p.decay_rate - k) > 0.01 * k) out.push_back("decay rate not within 1% of sqrt(lambda)");
  double nehari = 0.25 * p.params.mu * p.int_w4;
  if (std::abs(p.energy - nehari) > 1e-6 * nehari) out.push_back("Nehari identity violated");
  return out;
}

void write_profile_csv(const RadialProfile& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("io-error", "cannot open " + path);
  os << "r,w,dw\n";
  for (std::size_t i = 0; i < p.size(); ++i)
    os << fmt::format("{:.17g},{:.17g},{:.17g}\n", p.r[i], p.w[i], p.dw[i]);
}

nlohmann::json profile_sidecar(const RadialProfile& p) {
  return {{"lambda", p.params.lambda},
          {"mu", p.params.mu},
          {"dim", p.params.dim},
          {"r_max", p.r_max},
          {"w0", p.w0()},
          {"tail_constant", p.tail_constant},
          {"decay_rate", p.decay_rate},
          {"energy", p.energy},
          {"int_w2", p.int_w2},
          {"int_w4", p.int_w4}};
}

}  // namespace nls
