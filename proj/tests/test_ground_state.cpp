#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nls/error.hpp"
#include "nls/ground_state.hpp"

using namespace nls;

namespace {

// w = √(2λ/μ) sech(√λ r) solves w'' = λw - μw³ on the line.
double sech_oracle(double lambda, double mu, double r) {
  return std::sqrt(2.0 * lambda / mu) / std::cosh(std::sqrt(lambda) * r);
}

}  // namespace

TEST_CASE("one-dimensional profile matches the sech solution") {
  for (auto [lambda, mu] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.7, 3.0}}) {
    const auto w = solve_ground_state({lambda, mu, 1});
    CHECK(w.w0() == doctest::Approx(std::sqrt(2.0 * lambda / mu)).epsilon(1e-8));
    for (double r : {0.3, 1.0, 2.5, 6.0})
      CHECK(evaluate_profile(w, r / std::sqrt(lambda)) ==
            doctest::Approx(sech_oracle(lambda, mu, r / std::sqrt(lambda))).epsilon(1e-7));
    CHECK(w.tail_constant == doctest::Approx(2.0 * std::sqrt(2.0 * lambda / mu)).epsilon(1e-4));
    // ∫w⁴ over the line is 16λ^{3/2}/(3μ²).
    CHECK(w.int_w4 == doctest::Approx(16.0 * std::pow(lambda, 1.5) / (3.0 * mu * mu)).epsilon(1e-7));
  }
}

TEST_CASE("two- and three-dimensional central values") {
  // Townes profile and the cubic ground state in R³, shooting literature values.
  CHECK(solve_ground_state({1.0, 1.0, 2}).w0() == doctest::Approx(2.20620086465075).epsilon(1e-9));
  CHECK(solve_ground_state({1.0, 1.0, 3}).w0() == doctest::Approx(4.33738767997697).epsilon(1e-9));
  // Critical mass ‖Q‖² = 11.7008965 in two dimensions.
  CHECK(solve_ground_state({1.0, 1.0, 2}).int_w2 == doctest::Approx(11.7008965).epsilon(1e-6));
}

TEST_CASE("scaling identity w_{λ,μ}(r) = √(λ/μ) w_{1,1}(√λ r)") {
  for (int dim : {2, 3}) {
    const auto ref = solve_ground_state({1.0, 1.0, dim});
    for (auto [lambda, mu] : {std::pair{0.5, 2.0}, {3.0, 0.7}}) {
      const auto w = solve_ground_state({lambda, mu, dim});
      for (double r : {0.0, 0.4, 1.3, 3.0, 7.0}) {
        const double expect = std::sqrt(lambda / mu) * evaluate_profile(ref, std::sqrt(lambda) * r);
        CHECK(evaluate_profile(w, r) == doctest::Approx(expect).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("Nehari and Pohozaev identities") {
  for (int dim : {2, 3})
    for (auto [lambda, mu] : {std::pair{1.0, 1.0}, {2.5, 0.4}}) {
      const auto w = solve_ground_state({lambda, mu, dim});
      const double N = dim;
      CHECK(w.int_dw2 + lambda * w.int_w2 == doctest::Approx(mu * w.int_w4).epsilon(1e-6));
      CHECK((N - 2) / 2 * w.int_dw2 + N / 2 * lambda * w.int_w2 ==
            doctest::Approx(N / 4 * mu * w.int_w4).epsilon(1e-6));
      CHECK(w.energy == doctest::Approx(0.25 * mu * w.int_w4).epsilon(1e-6));
    }
}

TEST_CASE("profile invariants and tail fit") {
  for (int dim : {1, 2, 3}) {
    const auto w = solve_ground_state({1.7, 0.9, dim});
    CHECK(profile_invariant_violations(w).empty());
    CHECK(w.decay_rate == doctest::Approx(std::sqrt(1.7)).epsilon(1e-2));
    CHECK(w.ode_residual < 1e-6 * w.w0());
    CHECK(evaluate_profile_derivative(w, 0.0) == doctest::Approx(0.0).epsilon(1e-8));
  }
}

TEST_CASE("principal coupling eigenvalue equals μ for equal frequencies") {
  for (int dim : {2, 3})
    for (double mu : {0.5, 2.0}) {
      const auto w = solve_ground_state({1.3, mu, dim});
      CHECK(coupling_eigenvalue(1.3, w) == doctest::Approx(mu).epsilon(1e-3));
    }
}

TEST_CASE("coupling eigenvalue grows with the target frequency") {
  const auto w = solve_ground_state({1.0, 1.0, 2});
  CHECK(coupling_eigenvalue(2.0, w) > coupling_eigenvalue(1.0, w));
}

TEST_CASE("invalid ground-state arguments") {
  CHECK_THROWS_AS(solve_ground_state({1.0, 1.0, 4}), Error);
  CHECK_THROWS_AS(solve_ground_state({-1.0, 1.0, 2}), Error);
  CHECK_THROWS_AS(solve_ground_state({1.0, 1.0, 2}, 30.0, 1e-3), Error);
  CHECK_THROWS_AS(solve_ground_state({1.0, 1.0, 2}, 5.0, 1e-10), Error);
}
