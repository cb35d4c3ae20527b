#include <cmath>

#include "doctest.h"
#include "nls/error.hpp"
#include "nls/interaction.hpp"

using namespace nls;

namespace {

// Tensor-grid Simpson rule on a box around both bumps, second profile centred at (ξ, 0).
double brute_overlap(const RadialProfile& a, const RadialProfile& b, double xi, int pa, int pb) {
  const double h = 0.04, R = 16.0;
  const int nx = static_cast<int>(std::ceil((xi + 2 * R) / h / 2)) * 2;
  const int ny = static_cast<int>(std::ceil(2 * R / h / 2)) * 2;
  const double hx = (xi + 2 * R) / nx, hy = 2 * R / ny;
  auto weight = [](int i, int n) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double acc = 0.0;
  for (int i = 0; i <= nx; ++i) {
    const double x = -R + i * hx;
    for (int k = 0; k <= ny; ++k) {
      const double y = -R + k * hy;
      const double va = evaluate_profile(a, std::hypot(x, y));
      const double vb = evaluate_profile(b, std::hypot(x - xi, y));
      acc += weight(i, nx) * weight(k, ny) * std::pow(va, pa) * std::pow(vb, pb);
    }
  }
  return acc * hx * hy / 9.0;
}

}  // namespace

TEST_CASE("overlap quadrature agrees with a Cartesian Simpson rule") {
  const auto w1 = solve_ground_state({1.0, 1.0, 2});
  const auto w2 = solve_ground_state({1.6, 0.8, 2});
  for (double xi : {3.0, 6.0}) {
    CHECK(overlap_integral(w1, w2, xi, OverlapKind::CrossGroupDPrime) ==
          doctest::Approx(brute_overlap(w1, w2, xi, 2, 2)).epsilon(2e-4));
    CHECK(overlap_integral(w1, w1, xi, OverlapKind::CrossC) ==
          doctest::Approx(brute_overlap(w1, w1, xi, 3, 1)).epsilon(2e-4));
  }
}

TEST_CASE("squared-product overlap is symmetric in its arguments") {
  const auto a = solve_ground_state({1.0, 1.0, 3});
  const auto b = solve_ground_state({2.0, 1.3, 3});
  const double ab = overlap_integral(a, b, 5.0, OverlapKind::SameGroupD);
  const double ba = overlap_integral(b, a, 5.0, OverlapKind::SameGroupD);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-6));
}

TEST_CASE("potential overlap approaches ξ^{-ν}∫w² at large separation") {
  const auto w = solve_ground_state({1.0, 1.0, 2});
  OverlapOptions o;
  o.nu = 1.5;
  const double xi = 30.0;
  const double v = overlap_integral(w, w, xi, OverlapKind::PotentialB, o);
  CHECK(v * std::pow(xi, 1.5) / w.int_w2 == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("worker thread count does not change the result") {
  const auto w = solve_ground_state({1.0, 1.0, 2});
  set_worker_threads(1);
  const double one = overlap_integral(w, w, 7.0, OverlapKind::SameGroupD);
  set_worker_threads(3);
  const double three = overlap_integral(w, w, 7.0, OverlapKind::SameGroupD);
  set_worker_threads(0);
  CHECK(one == three);
}

TEST_CASE("decay fits recover synthetic laws") {
  for (auto model : {DecayModel::PowerExp, DecayModel::PowerExpLog}) {
    DecayLaw truth{3.7, -0.8, 1.9, model == DecayModel::PowerExpLog};
    std::vector<OverlapSample> s;
    for (int i = 0; i < 6; ++i) {
      const double x = 8.0 + 1.6 * i;
      s.push_back({x, truth(x), OverlapKind::CrossC});
    }
    const auto f = fit_decay_law(s, model);
    CHECK(f.law.K == doctest::Approx(truth.K).epsilon(1e-6));
    CHECK(f.law.p == doctest::Approx(truth.p).epsilon(1e-6));
    CHECK(f.law.c == doctest::Approx(truth.c).epsilon(1e-6));
    CHECK(f.residual < 1e-8);
    const auto k = fit_constant(s, truth.p, truth.c, truth.log_factor);
    CHECK(k.law.K == doctest::Approx(truth.K).epsilon(1e-10));
  }
}

TEST_CASE("decay law derivative matches central differences") {
  for (bool lf : {false, true}) {
    const DecayLaw law{2.0, -1.5, 1.2, lf};
    for (double x : {3.0, 9.0}) {
      const double e = 1e-5;
      const double fd = (law(x + e) - law(x - e)) / (2 * e);
      CHECK(law.derivative(x) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("overlap argument checks") {
  const auto w = solve_ground_state({1.0, 1.0, 2});
  CHECK_THROWS_AS(overlap_integral(w, w, -1.0, OverlapKind::CrossC), Error);
  OverlapOptions o;
  o.nu = 2.5;
  CHECK_THROWS_AS(overlap_integral(w, w, 4.0, OverlapKind::PotentialB, o), Error);
  std::vector<OverlapSample> two{{9.0, 1e-3, OverlapKind::CrossC}, {10.0, 5e-4, OverlapKind::CrossC}};
  CHECK_THROWS_AS(fit_decay_law(two, DecayModel::PowerExp), Error);
}
