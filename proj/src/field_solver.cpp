#include "nls/field_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>
#include <unsupported/Eigen/IterativeSolvers>

#include "nls/error.hpp"

namespace nls {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;

// Interior unknowns, component-major: j·m + (i-1)(n-2) + (k-1).
struct Layout {
  int n = 0, d = 0;
  long m = 0;
  Layout(const Grid& g, int d_) : n(g.n), d(d_), m(static_cast<long>(g.n - 2) * (g.n - 2)) {}
  long at(int j, int i, int k) const { return j * m + static_cast<long>(i - 1) * (n - 2) + (k - 1); }
  long dim() const { return d * m; }
};

Vec pack(const Layout& L, const Fields& f) {
  Vec v(L.dim());
  for (int j = 0; j < L.d; ++j)
    for (int i = 1; i < L.n - 1; ++i)
      for (int k = 1; k < L.n - 1; ++k) v[L.at(j, i, k)] = f[j].values[static_cast<long>(i) * L.n + k];
  return v;
}

Fields unpack(const Layout& L, const Vec& v) {
  Fields f(L.d);
  for (int j = 0; j < L.d; ++j) {
    f[j].component = j;
    f[j].values.assign(static_cast<long>(L.n) * L.n, 0.0);
    for (int i = 1; i < L.n - 1; ++i)
      for (int k = 1; k < L.n - 1; ++k) f[j].values[static_cast<long>(i) * L.n + k] = v[L.at(j, i, k)];
  }
  return f;
}

Vec pack_one(const Layout& L, int j, const std::vector<double>& values) {
  Vec v = Vec::Zero(L.dim());
  for (int i = 1; i < L.n - 1; ++i)
    for (int k = 1; k < L.n - 1; ++k) v[L.at(j, i, k)] = values[static_cast<long>(i) * L.n + k];
  return v;
}

std::vector<double> potential_field(const SystemParams& s, int j, const Grid& g) {
  std::vector<double> V(g.size());
  for (int i = 0; i < g.n; ++i)
    for (int k = 0; k < g.n; ++k)
      V[g.index(i, k)] = potential(s, j, std::hypot(g.coord(i), g.coord(k)));
  return V;
}

SpMat jacobian_matrix(const SystemParams& s, const Fields& u, const Grid& g) {
  const int d = static_cast<int>(u.size());
  const Layout L(g, d);
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<double>> T;
  T.reserve(static_cast<size_t>(L.dim()) * (5 + d));
  for (int j = 0; j < d; ++j) {
    const auto V = potential_field(s, j, g);
    for (int i = 1; i < g.n - 1; ++i)
      for (int k = 1; k < g.n - 1; ++k) {
        const long p = g.index(i, k);
        const long r = L.at(j, i, k);
        const double uj = u[j].values[p];
        double diag = 4.0 * ih2 + V[p] - 3.0 * s.mu[j] * uj * uj;
        for (int q = 0; q < d; ++q) {
          if (q == j) continue;
          const double uq = u[q].values[p];
          diag -= s.beta[q][j] * uq * uq;
          const double off = -2.0 * s.beta[q][j] * uq * uj;
          if (off != 0.0) T.emplace_back(r, L.at(q, i, k), off);
        }
        T.emplace_back(r, r, diag);
        if (i > 1) T.emplace_back(r, L.at(j, i - 1, k), -ih2);
        if (i < g.n - 2) T.emplace_back(r, L.at(j, i + 1, k), -ih2);
        if (k > 1) T.emplace_back(r, L.at(j, i, k - 1), -ih2);
        if (k < g.n - 2) T.emplace_back(r, L.at(j, i, k + 1), -ih2);
      }
  }
  SpMat J(L.dim(), L.dim());
  J.setFromTriplets(T.begin(), T.end());
  return J;
}

// Exact LDLᵀ of each component's diagonal-plus-Laplacian block; the β cross blocks are left
// to the Krylov iteration. With border columns Z (A = [J Z; Zᵀ 0]) the bordered block system
// [P Z; Zᵀ 0] is inverted exactly through its small Schur complement.
class BlockLdlt {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  BlockLdlt() = default;

  void set_layout(int d, long m, int border) {
    d_ = d;
    m_ = m;
    nb_ = border;
  }

  template <class M>
  BlockLdlt& analyzePattern(const M&) { return *this; }
  template <class M>
  BlockLdlt& factorize(const M& A) { return compute(A); }
  template <class M>
  BlockLdlt& compute(const M& A) {
    blocks_.clear();
    ok_ = true;
    for (int j = 0; j < d_; ++j) {
      SpMat B = A.block(j * m_, j * m_, m_, m_);
      blocks_.emplace_back(std::make_shared<Eigen::SimplicialLDLT<SpMat>>(B));
      if (blocks_.back()->info() != Eigen::Success) ok_ = false;
    }
    if (nb_ > 0 && ok_) {
      const long n = d_ * m_;
      Z_ = Eigen::MatrixXd(A.block(0, n, n, nb_));
      PZ_.resize(n, nb_);
      for (int c = 0; c < nb_; ++c) PZ_.col(c) = apply_blocks(Z_.col(c));
      schur_ = (Z_.transpose() * PZ_).fullPivLu();
    }
    return *this;
  }

  template <class Rhs>
  Vec solve(const Rhs& b) const {
    const long n = d_ * m_;
    if (nb_ == 0) return apply_blocks(b);
    Vec x(n + nb_);
    const Vec pb = apply_blocks(b.head(n));
    const Vec y = schur_.solve(Z_.transpose() * pb - b.tail(nb_));
    x.head(n) = pb - PZ_ * y;
    x.tail(nb_) = y;
    return x;
  }

  Eigen::ComputationInfo info() const { return ok_ ? Eigen::Success : Eigen::NumericalIssue; }

 private:
  template <class Rhs>
  Vec apply_blocks(const Rhs& b) const {
    Vec x(d_ * m_);
    for (int j = 0; j < d_; ++j) x.segment(j * m_, m_) = blocks_[j]->solve(Vec(b.segment(j * m_, m_)));
    return x;
  }

  int d_ = 1, nb_ = 0;
  long m_ = 0;
  bool ok_ = true;
  std::vector<std::shared_ptr<Eigen::SimplicialLDLT<SpMat>>> blocks_;
  Eigen::MatrixXd Z_, PZ_;
  Eigen::FullPivLU<Eigen::MatrixXd> schur_;
};

struct KrylovSolver {
  SpMat A;
  Eigen::GMRES<SpMat, BlockLdlt> gmres;
  int iterations = 0;
  double achieved = 0.0;

  KrylovSolver(SpMat M, int d, long m, int border = 0) : A(std::move(M)) {
    gmres.preconditioner().set_layout(d, m, border);
    gmres.set_restart(200);
    gmres.setMaxIterations(600);
    gmres.compute(A);
    if (gmres.preconditioner().info() != Eigen::Success)
      throw Error("near-singular-operator", "block factorization failed");
  }

  // Iterative refinement on the true residual around preconditioned GMRES; stops when the
  // relative residual reaches tol or stops improving, leaving the decision to the caller.
  Vec solve(const Vec& b, double tol) {
    const double bn = b.norm();
    Vec x = Vec::Zero(b.size());
    achieved = 0.0;
    if (bn == 0.0) return x;
    gmres.setTolerance(0.1 * tol);
    double prev = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 8; ++pass) {
      const Vec r = b - A * x;
      achieved = r.norm() / bn;
      if (achieved <= tol || achieved > 0.5 * prev) break;
      prev = achieved;
      x += gmres.solve(r);
      iterations += static_cast<int>(gmres.iterations());
    }
    achieved = (b - A * x).norm() / bn;
    return x;
  }
};

SpMat bordered(const SpMat& J, const std::vector<Vec>& Z) {
  const long n = J.rows();
  const int nb = static_cast<int>(Z.size());
  std::vector<Eigen::Triplet<double>> T;
  T.reserve(J.nonZeros() + 2 * n * nb);
  for (int c = 0; c < J.outerSize(); ++c)
    for (SpMat::InnerIterator it(J, c); it; ++it) T.emplace_back(it.row(), it.col(), it.value());
  for (int l = 0; l < nb; ++l)
    for (long r = 0; r < n; ++r)
      if (Z[l][r] != 0.0) {
        T.emplace_back(r, n + l, Z[l][r]);
        T.emplace_back(n + l, r, Z[l][r]);
      }
  SpMat A(n + nb, n + nb);
  A.setFromTriplets(T.begin(), T.end());
  return A;
}

std::vector<Vec> border_columns(const Layout& L, const DerivativeFields& dw) {
  std::vector<Vec> Z;
  for (int j = 0; j < L.d; ++j) {
    Z.push_back(pack_one(L, j, dw.d_theta[j].values));
    Z.push_back(pack_one(L, j, dw.d_rho[j].values));
  }
  return Z;
}

double residual_sup(const SystemParams& s, const Fields& u, const Grid& g) {
  return sup_norm(residual(s, u, g));
}

}  // namespace

Grid Grid::make(double L, double h) {
  if (!(L > 0.0) || !(h > 0.0)) throw Error("bad-config", "grid needs L > 0 and h > 0");
  Grid g;
  const long half = std::lround(L / h);
  g.h = h;
  g.L = half * h;
  g.n = static_cast<int>(2 * half + 1);
  return g;
}

double check_grid(const SystemParams& s, const SpikeConfiguration& c, const Grid& g) {
  double lmin = std::numeric_limits<double>::infinity();
  double rmax = 0.0;
  for (int j = 0; j < c.d(); ++j) {
    lmin = std::min(lmin, s.lambda[j]);
    rmax = std::max(rmax, c.rho[j]);
    const double need = 8.0 / std::sqrt(s.lambda[j]);
    for (const auto& x : c.centers[j]) {
      const double room = g.L - std::max(std::abs(x[0]), std::abs(x[1]));
      if (room < need)
        throw Error("grid-too-small",
                    fmt::format("spike of component {} is {:.4g} from the boundary (< {:.4g})", j,
                                room, need));
    }
  }
  return g.L - rmax - 12.0 / std::sqrt(lmin);
}

Fields assemble_ansatz(const SpikeConfiguration& c, const std::vector<RadialProfile>& profiles,
                       const Grid& g) {
  Fields out(c.d());
  for (int j = 0; j < c.d(); ++j) {
    out[j].component = j;
    out[j].values.assign(g.size(), 0.0);
    for (int i = 1; i < g.n - 1; ++i)
      for (int k = 1; k < g.n - 1; ++k) {
        double v = 0.0;
        for (const auto& x : c.centers[j])
          v += evaluate_profile(profiles[j], std::hypot(g.coord(i) - x[0], g.coord(k) - x[1]));
        out[j].values[g.index(i, k)] = v;
      }
  }
  return out;
}

DerivativeFields ansatz_derivatives(const SpikeConfiguration& c,
                                    const std::vector<RadialProfile>& profiles, const Grid& g) {
  DerivativeFields out;
  out.d_rho.resize(c.d());
  out.d_theta.resize(c.d());
  for (int j = 0; j < c.d(); ++j) {
    auto& fr = out.d_rho[j].values;
    auto& ft = out.d_theta[j].values;
    out.d_rho[j].component = out.d_theta[j].component = j;
    fr.assign(g.size(), 0.0);
    ft.assign(g.size(), 0.0);
    for (const auto& x : c.centers[j]) {
      const double r0 = std::hypot(x[0], x[1]);
      const double ex = r0 > 0 ? x[0] / r0 : 1.0, ey = r0 > 0 ? x[1] / r0 : 0.0;
      for (int i = 1; i < g.n - 1; ++i)
        for (int k = 1; k < g.n - 1; ++k) {
          const double dx = g.coord(i) - x[0], dy = g.coord(k) - x[1];
          const double r = std::hypot(dx, dy);
          if (r == 0.0) continue;
          const double w1 = evaluate_profile_derivative(profiles[j], r) / r;
          // d/dη of w(|x-η|) is -w'(r)(x-η)/r; η moves along e (ρ) and r0·e^⊥ (θ).
          fr[g.index(i, k)] -= w1 * (dx * ex + dy * ey);
          ft[g.index(i, k)] -= w1 * r0 * (-dx * ey + dy * ex);
        }
    }
  }
  return out;
}

ErrorFields error_fields(const SystemParams& s, const SpikeConfiguration& c,
                         const std::vector<RadialProfile>& profiles, const Grid& g) {
  const int d = c.d();
  const Fields W = assemble_ansatz(c, profiles, g);
  ErrorFields e;
  e.E1.resize(d);
  e.E2.resize(d);
  e.E3.resize(d);
  for (int j = 0; j < d; ++j) {
    const auto V = potential_field(s, j, g);
    e.E1[j].component = e.E2[j].component = e.E3[j].component = j;
    e.E1[j].values.assign(g.size(), 0.0);
    e.E2[j].values.assign(g.size(), 0.0);
    e.E3[j].values.assign(g.size(), 0.0);
    for (int i = 1; i < g.n - 1; ++i)
      for (int k = 1; k < g.n - 1; ++k) {
        const long p = g.index(i, k);
        const double w = W[j].values[p];
        double cubes = 0.0;
        for (const auto& x : c.centers[j]) {
          const double wt = evaluate_profile(profiles[j], std::hypot(g.coord(i) - x[0], g.coord(k) - x[1]));
          cubes += wt * wt * wt;
        }
        e.E1[j].values[p] = (s.lambda[j] - V[p]) * w;
        e.E2[j].values[p] = s.mu[j] * (w * w * w - cubes);
        double e3 = 0.0;
        for (int q = 0; q < d; ++q)
          if (q != j) e3 += s.beta[q][j] * W[q].values[p] * W[q].values[p] * w;
        e.E3[j].values[p] = e3;
      }
  }
  return e;
}

std::vector<double> laplacian(const Grid& g, const std::vector<double>& u) {
  std::vector<double> out(g.size(), 0.0);
  const double ih2 = 1.0 / (g.h * g.h);
  for (int i = 1; i < g.n - 1; ++i)
    for (int k = 1; k < g.n - 1; ++k) {
      const long p = g.index(i, k);
      out[p] = (u[p - g.n] + u[p + g.n] + u[p - 1] + u[p + 1] - 4.0 * u[p]) * ih2;
    }
  return out;
}

Fields residual(const SystemParams& s, const Fields& u, const Grid& g) {
  const int d = static_cast<int>(u.size());
  Fields F(d);
  for (int j = 0; j < d; ++j) {
    const auto V = potential_field(s, j, g);
    const auto lap = laplacian(g, u[j].values);
    F[j].component = j;
    F[j].values.assign(g.size(), 0.0);
    for (int i = 1; i < g.n - 1; ++i)
      for (int k = 1; k < g.n - 1; ++k) {
        const long p = g.index(i, k);
        const double uj = u[j].values[p];
        double coupling = 0.0;
        for (int q = 0; q < d; ++q)
          if (q != j) coupling += s.beta[q][j] * u[q].values[p] * u[q].values[p];
        F[j].values[p] = -lap[p] + V[p] * uj - s.mu[j] * uj * uj * uj - coupling * uj;
      }
  }
  return F;
}

Fields apply_jacobian(const SystemParams& s, const Fields& u, const Fields& v, const Grid& g) {
  const Layout L(g, static_cast<int>(u.size()));
  return unpack(L, jacobian_matrix(s, u, g) * pack(L, v));
}

double inner(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (long p = 0; p < g.size(); ++p) acc += a[p] * b[p];
  return acc * g.h * g.h;
}

double sup_norm(const Fields& f) {
  double m = 0.0;
  for (const auto& c : f)
    for (double v : c.values) m = std::max(m, std::abs(v));
  return m;
}

GammaProjections gamma_projections(const ErrorFields& e, const DerivativeFields& dw, const Grid& g) {
  const int d = static_cast<int>(e.E3.size());
  GammaProjections out;
  for (int j = 0; j < d; ++j) {
    const auto& zr = dw.d_rho[j].values;
    const auto& zt = dw.d_theta[j].values;
    const double rr = inner(g, zr, zr), tt = inner(g, zt, zt), rt = inner(g, zr, zt);
    const double et = inner(g, e.E3[j].values, zt), er = inner(g, e.E3[j].values, zr);
    const double det = rr * tt - rt * rt;
    if (!(std::abs(det) > 1e-14 * rr * tt))
      throw Error("gram-singular", fmt::format("Gram determinant {:.3g} for component {}", det, j));
    out.gamma_theta.push_back((rr * et - rt * er) / det);
    out.gamma_rho.push_back((tt * er - rt * et) / det);
    out.e3_dtheta.push_back(et);
    out.e3_drho.push_back(er);
    out.norm2_drho.push_back(rr);
    out.norm2_dtheta.push_back(tt);
  }
  return out;
}

LinearCorrection linear_correction(const SystemParams& s, const SpikeConfiguration& c,
                                   const std::vector<RadialProfile>& profiles, const Grid& g,
                                   double tol) {
  const int d = c.d();
  const Layout L(g, d);
  const Fields W = assemble_ansatz(c, profiles, g);
  const DerivativeFields dw = ansatz_derivatives(c, profiles, g);
  const ErrorFields e = error_fields(s, c, profiles, g);
  const Vec e3 = pack(L, e.E3);

  LinearCorrection out;
  out.gamma_theta.assign(d, 0.0);
  out.gamma_rho.assign(d, 0.0);
  if (e3.norm() == 0.0) {
    out.Q = unpack(L, Vec::Zero(L.dim()));
    return out;
  }

  const std::vector<Vec> Z = border_columns(L, dw);
  const int nb = static_cast<int>(Z.size());
  const long n = L.dim();
  // [𝓛 Z; Zᵀ 0][Q; γ] = [E_3; 0].
  KrylovSolver ks(bordered(jacobian_matrix(s, W, g), Z), d, L.m, nb);
  Vec rhs = Vec::Zero(n + nb);
  rhs.head(n) = e3;
  const Vec x = ks.solve(rhs, tol);
  const Vec Q = x.head(n);
  const Vec gamma = x.tail(nb);
  out.relative_residual = ks.achieved;
  out.krylov_iterations = ks.iterations;
  if (ks.achieved > tol)
    throw Error("near-singular-operator",
                fmt::format("bordered solve stagnated at relative residual {:.3g} (target {:.3g})",
                            ks.achieved, tol));
  for (int j = 0; j < d; ++j) {
    out.gamma_theta[j] = gamma[2 * j];
    out.gamma_rho[j] = gamma[2 * j + 1];
  }
  out.Q = unpack(L, Q);
  return out;
}

Fields newton_solve(const SystemParams& s, const Fields& initial, const Grid& g,
                    const NewtonOptions& opts, NewtonReport& report) {
  if (!(opts.tol >= 1e-12 && opts.tol <= 1e-6))
    throw Error("bad-config", fmt::format("Newton tolerance {:.3g} outside [1e-12, 1e-6]", opts.tol));
  for (const auto& f : initial)
    for (double v : f.values)
      if (!std::isfinite(v)) throw Error("bad-config", "initial fields must be finite");
  const int d = static_cast<int>(initial.size());
  const Layout L(g, d);
  Fields u = initial;
  report = NewtonReport{};
  double res = residual_sup(s, u, g);
  report.residual_history.push_back(res);
  int damped_run = 0;
  while (res >= opts.tol) {
    if (report.iterations >= opts.max_iter)
      throw Error("max-iter-exceeded",
                  fmt::format("residual {:.3g} after {} Newton steps", res, report.iterations));
    KrylovSolver ks(jacobian_matrix(s, u, g), d, L.m);
    const Vec F = pack(L, residual(s, u, g));
    const Fields step = unpack(L, ks.solve(-F, opts.krylov_tol));
    report.krylov_residual.push_back(ks.achieved);
    if (ks.achieved > 1e-2)
      throw Error("near-singular-operator",
                  fmt::format("Newton step solve stalled at relative residual {:.3g}", ks.achieved));
    double t = 1.0, trial_res = 0.0;
    Fields trial;
    while (true) {
      trial = u;
      for (int j = 0; j < d; ++j)
        for (long p = 0; p < g.size(); ++p) trial[j].values[p] += t * step[j].values[p];
      trial_res = residual_sup(s, trial, g);
      if (trial_res < res || t <= std::ldexp(1.0, -10)) break;
      t *= 0.5;
    }
    u = std::move(trial);
    res = trial_res;
    ++report.iterations;
    report.damping.push_back(t);
    report.residual_history.push_back(res);
    damped_run = t < 1.0 ? damped_run + 1 : 0;
    const size_t h = report.residual_history.size();
    if (damped_run >= 5 && res > 10.0 * report.residual_history[h - 6])
      throw Error("diverged", fmt::format("residual grew to {:.3g} over five damped steps", res));
  }
  report.converged = true;
  report.residual = res;
  for (int j = 0; j < d; ++j) {
    const auto [mn, mx] = std::minmax_element(u[j].values.begin(), u[j].values.end());
    report.min_value.push_back(*mn);
    report.max_value.push_back(*mx);
    report.symmetry_defect =
        std::max(report.symmetry_defect, symmetry_defect(g, u[j].values, opts.theta_count));
  }
  return u;
}

ProjectedSolution projected_newton(const SystemParams& s, const SpikeConfiguration& c,
                                   const std::vector<RadialProfile>& profiles, const Grid& g,
                                   const NewtonOptions& opts) {
  const int d = c.d();
  const Layout L(g, d);
  const Fields W = assemble_ansatz(c, profiles, g);
  const std::vector<Vec> Z = border_columns(L, ansatz_derivatives(c, profiles, g));
  const int nb = static_cast<int>(Z.size());
  const long n = L.dim();
  const Vec w = pack(L, W);
  Vec u = w;
  Vec gamma = Vec::Zero(nb);

  auto full_residual = [&](const Vec& uv, const Vec& gv) {
    Vec r(n + nb);
    r.head(n) = pack(L, residual(s, unpack(L, uv), g));
    for (int k = 0; k < nb; ++k) {
      r.head(n) += gv[k] * Z[k];
      r[n + k] = Z[k].dot(uv - w);
    }
    return r;
  };
  auto sup = [&](const Vec& r) { return r.head(n).cwiseAbs().maxCoeff(); };

  ProjectedSolution out;
  Vec r = full_residual(u, gamma);
  double res = sup(r);
  while (res >= opts.tol) {
    if (out.iterations >= opts.max_iter)
      throw Error("max-iter-exceeded",
                  fmt::format("projected residual {:.3g} after {} steps", res, out.iterations));
    KrylovSolver ks(bordered(jacobian_matrix(s, unpack(L, u), g), Z), d, L.m, nb);
    const Vec step = ks.solve(-r, opts.krylov_tol);
    if (ks.achieved > 1e-2)
      throw Error("near-singular-operator",
                  fmt::format("projected step solve stalled at relative residual {:.3g}", ks.achieved));
    double t = 1.0;
    Vec ut, gt, rt;
    while (true) {
      ut = u + t * step.head(n);
      gt = gamma + t * step.tail(nb);
      rt = full_residual(ut, gt);
      if (sup(rt) < res || t <= std::ldexp(1.0, -10)) break;
      t *= 0.5;
    }
    u = ut;
    gamma = gt;
    r = rt;
    res = sup(r);
    ++out.iterations;
  }
  out.u = unpack(L, u);
  out.residual = res;
  for (int j = 0; j < d; ++j) {
    out.gamma_theta.push_back(gamma[2 * j]);
    out.gamma_rho.push_back(gamma[2 * j + 1]);
  }
  return out;
}

double sample_bilinear(const Grid& g, const std::vector<double>& u, double x, double y) {
  const double fi = (x + g.L) / g.h, fk = (y + g.L) / g.h;
  if (fi < 0.0 || fk < 0.0 || fi > g.n - 1 || fk > g.n - 1) return 0.0;
  const int i = std::min(static_cast<int>(fi), g.n - 2), k = std::min(static_cast<int>(fk), g.n - 2);
  const double a = fi - i, b = fk - k;
  return (1 - a) * (1 - b) * u[g.index(i, k)] + a * (1 - b) * u[g.index(i + 1, k)] +
         (1 - a) * b * u[g.index(i, k + 1)] + a * b * u[g.index(i + 1, k + 1)];
}

double symmetry_defect(const Grid& g, const std::vector<double>& u, int theta_count) {
  if (theta_count <= 1) return 0.0;
  const double ang = 2.0 * kPi / theta_count;
  const double c = std::cos(ang), sn = std::sin(ang);
  double m = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int k = 0; k < g.n; ++k) {
      const double x = g.coord(i), y = g.coord(k);
      const double xr = c * x - sn * y, yr = sn * x + c * y;
      if (std::max(std::abs(xr), std::abs(yr)) > g.L) continue;
      m = std::max(m, std::abs(sample_bilinear(g, u, xr, yr) - u[g.index(i, k)]));
    }
  return m;
}

Diagnostics diagnostics(const SystemParams& s, const Fields& u, const SpikeConfiguration& c,
                        const Grid& g) {
  Diagnostics out;
  const int d = static_cast<int>(u.size());
  out.residual = residual_sup(s, u, g);
  out.sup_norm = sup_norm(u);
  double lmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (int j = 0; j < d; ++j) {
    const auto& v = u[j].values;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    out.min_value.push_back(*mn);
    out.max_value.push_back(*mx);
    double imin = std::numeric_limits<double>::infinity();
    for (int i = 1; i < g.n - 1; ++i)
      for (int k = 1; k < g.n - 1; ++k) imin = std::min(imin, v[g.index(i, k)]);
    out.interior_min.push_back(imin);
    out.sign_change.push_back(*mn < -1e-12 * std::max(1.0, *mx));
    out.symmetry_defect = std::max(out.symmetry_defect, symmetry_defect(g, v, c.theta_count));
    lmin = std::min(lmin, s.lambda[j]);
    rmax = std::max(rmax, c.rho[j]);

    const auto& x0 = c.centers[j][0];
    out.center_value.push_back(sample_bilinear(g, v, x0[0], x0[1]));
    const double r0 = std::hypot(x0[0], x0[1]);
    const double ex = r0 > 0 ? x0[0] / r0 : 1.0, ey = r0 > 0 ? x0[1] / r0 : 0.0;
    const double k = std::sqrt(s.lambda[j]);
    // Outward ray, kept 6/√λ away from the Dirichlet boundary.
    const double r_hi = std::min(6.0 / k, g.L - 6.0 / k - std::max(std::abs(x0[0]), std::abs(x0[1])));
    std::vector<double> rs, ys;
    for (double r = 2.0 / k; r <= r_hi; r += g.h) {
      const double val = sample_bilinear(g, v, x0[0] + r * ex, x0[1] + r * ey);
      if (val <= 0.0) continue;
      rs.push_back(r);
      ys.push_back(std::log(val) + 0.5 * std::log(r));
    }
    double rate = std::numeric_limits<double>::quiet_NaN();
    if (rs.size() >= 5) {
      Eigen::MatrixXd A(rs.size(), 2);
      Vec b(rs.size());
      for (size_t q = 0; q < rs.size(); ++q) {
        A(q, 0) = 1.0;
        A(q, 1) = rs[q];
        b[q] = ys[q];
      }
      rate = -A.colPivHouseholderQr().solve(b)[1];
    }
    out.decay_rate.push_back(rate);
  }
  out.box_margin = g.L - rmax - 12.0 / std::sqrt(lmin);
  return out;
}

nlohmann::json to_json(const NewtonReport& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"min_value", r.min_value},
          {"max_value", r.max_value},
          {"symmetry_defect", r.symmetry_defect},
          {"damping", r.damping},
          {"krylov_residual", r.krylov_residual},
          {"residual_history", r.residual_history}};
}

nlohmann::json to_json(const Diagnostics& d) {
  return {{"min_value", d.min_value},
          {"interior_min", d.interior_min},
          {"max_value", d.max_value},
          {"residual", d.residual},
          {"symmetry_defect", d.symmetry_defect},
          {"sup_norm", d.sup_norm},
          {"center_value", d.center_value},
          {"decay_rate", d.decay_rate},
          {"sign_change", d.sign_change},
          {"box_margin", d.box_margin}};
}

void write_fields_csv(const Grid& g, const Fields& u, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("io-error", fmt::format("cannot write {}", path));
  f << "x,y";
  for (size_t j = 0; j < u.size(); ++j) f << ",u" << j + 1;
  f << '\n';
  for (int i = 0; i < g.n; ++i)
    for (int k = 0; k < g.n; ++k) {
      f << fmt::format("{:.17g},{:.17g}", g.coord(i), g.coord(k));
      for (const auto& c : u) f << fmt::format(",{:.17g}", c.values[g.index(i, k)]);
      f << '\n';
    }
}

void write_fields_binary(const Grid& g, const Fields& u, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io-error", fmt::format("cannot write {}", path));
  const std::string header =
      nlohmann::json{{"n", g.n}, {"L", g.L}, {"h", g.h}, {"d", u.size()}}.dump();
  const std::uint64_t len = header.size();
  unsigned char lb[8];
  for (int b = 0; b < 8; ++b) lb[b] = static_cast<unsigned char>(len >> (8 * b));
  f.write(reinterpret_cast<const char*>(lb), 8);
  f.write(header.data(), static_cast<std::streamsize>(len));
  for (const auto& c : u)
    for (double v : c.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      unsigned char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(bits >> (8 * b));
      f.write(reinterpret_cast<const char*>(buf), 8);
    }
}

Fields read_fields_binary(const std::string& path, Grid& g) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io-error", fmt::format("cannot read {}", path));
  unsigned char lb[8];
  f.read(reinterpret_cast<char*>(lb), 8);
  std::uint64_t len = 0;
  for (int b = 0; b < 8; ++b) len |= static_cast<std::uint64_t>(lb[b]) << (8 * b);
  std::string header(len, '\0');
  f.read(header.data(), static_cast<std::streamsize>(len));
  if (!f) throw Error("io-error", fmt::format("truncated header in {}", path));
  const auto j = nlohmann::json::parse(header);
  g.n = j.at("n").get<int>();
  g.L = j.at("L").get<double>();
  g.h = j.at("h").get<double>();
  const int d = j.at("d").get<int>();
  Fields u(d);
  for (int c = 0; c < d; ++c) {
    u[c].component = c;
    u[c].values.resize(g.size());
    for (auto& v : u[c].values) {
      unsigned char buf[8];
      f.read(reinterpret_cast<char*>(buf), 8);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
      std::memcpy(&v, &bits, 8);
    }
  }
  if (!f) throw Error("io-error", fmt::format("truncated data in {}", path));
  return u;
}

}  // namespace nls
