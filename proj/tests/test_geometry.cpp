#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nls/config.hpp"
#include "nls/error.hpp"
#include "nls/spike_geometry.hpp"

using namespace nls;

namespace {

constexpr double kPi = std::numbers::pi;

SystemParams three_component(double l0, double l1, double l2) {
  SystemParams s;
  s.dim = 2;
  s.d = 3;
  s.lambda = {l0, l1, l2};
  s.mu = {1.0, 1.5, 2.0};
  s.delta = {1.0, 1.0, 1.0};
  s.nu = {1.5, 1.2, 1.8};
  s.beta = {{0, 0.1, 0.2}, {0.1, 0, 0.3}, {0.2, 0.3, 0}};
  return s;
}

ValidationInputs inputs_for(int d, double S, double thr = -0.4) {
  ValidationInputs in;
  in.coupling_eigen.assign(d, std::vector<double>(d, 1.0));
  in.sum_B_delta = S;
  in.jump_threshold = thr;
  return in;
}

SystemParams pair(double l0, double l1, double delta, double beta) {
  SystemParams s;
  s.dim = 2;
  s.d = 2;
  s.lambda = {l0, l1};
  s.mu = {1.0, 1.0};
  s.delta = {delta, delta};
  s.nu = {1.5, 1.5};
  s.beta = {{0, beta}, {beta, 0}};
  return s;
}

}  // namespace

TEST_CASE("groups follow sorted frequencies") {
  const auto g = group_components({3.0, 1.0, 3.0, 2.0, 1.0});
  CHECK(g.k == 3);
  CHECK(g.n == std::vector<int>{0, 2, 3, 5});
  CHECK(g.permutation == std::vector<int>{1, 4, 3, 0, 2});
  CHECK(g.group_of(0) == 1);
  CHECK(g.group_of(2) == 2);
  CHECK(g.group_of(4) == 3);
  CHECK(g.first(3) == 3);
  CHECK(g.last(3) == 4);
  CHECK(g.size(1) == 2);
}

TEST_CASE("permutation carries couplings along") {
  const auto s = three_component(3.0, 1.0, 2.0);
  const auto g = group_components(s.lambda);
  const auto p = permute_system(s, g.permutation);
  CHECK(p.lambda == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(p.mu == std::vector<double>{1.5, 2.0, 1.0});
  // Original (1, 2) is sorted (0, 1); original (0, 1) is sorted (2, 0).
  CHECK(p.beta[0][1] == 0.3);
  CHECK(p.beta[2][0] == 0.1);
  CHECK(p.beta[1][2] == 0.2);
  for (int i = 0; i < 3; ++i) CHECK(p.beta[i][i] == 0.0);
}

TEST_CASE("configuration places θ rotated copies on circles") {
  const auto s = three_component(1.0, 2.0, 3.0);
  const int theta = 7;
  const auto c = build_configuration(s, theta, 0.6, {2.0, 1.5, 0.0}, {0.1, -0.2, 0.0});
  const double base = 0.6 * theta * std::log(7.0);
  CHECK(c.rho[0] == doctest::Approx(base + 0.1));
  CHECK(c.rho[1] == doctest::Approx(base - 0.2));
  double sum = 0.0;
  for (double a : c.alpha) sum += a;
  CHECK(sum == doctest::Approx(2 * kPi / theta));
  CHECK(c.alpha[0] == doctest::Approx(2.0 / theta));
  for (int j = 0; j < 3; ++j)
    for (int t = 0; t < theta; ++t) {
      const auto& x = c.centers[j][t];
      CHECK(std::hypot(x[0], x[1]) == doctest::Approx(c.rho[j]));
      const auto y = rotate(x, 2 * kPi / theta);
      const auto& next = c.centers[j][(t + 1) % theta];
      CHECK(y[0] == doctest::Approx(next[0]));
      CHECK(y[1] == doctest::Approx(next[1]));
    }
  CHECK(c.offset[1] - c.offset[0] == doctest::Approx(c.alpha[0]));
}

TEST_CASE("degenerate configurations are rejected") {
  CHECK_THROWS_AS(make_configuration(2, 4, {5.0, 5.0}, {2 * kPi / 4}), Error);
  CHECK_THROWS_AS(make_configuration(2, 4, {5.0, -1.0}, {0.3}), Error);
  CHECK_THROWS_AS(make_configuration(2, 0, {5.0}, {}), Error);
  CHECK_NOTHROW(make_configuration(2, 1, {0.0}, {}));
}

TEST_CASE("gap distances agree with the chord formulas") {
  const auto s = three_component(1.0, 1.0, 2.0);
  const auto g = group_components(s.lambda);
  const int theta = 9;
  const auto c = make_configuration(2, theta, {30.0, 30.0, 30.0}, {0.2, 0.25});
  const auto gd = gap_distances(c, g);
  for (int j = 0; j < 3; ++j) {
    CHECK(gd.eta_tilde[j] == doctest::Approx(2 * 30.0 * std::sin(kPi / theta)));
    CHECK(gd.eta_tilde_formula[j] == doctest::Approx(30.0 * 2 * kPi / theta));
  }
  // Group 1 is components {0, 1} separated by the chord of α_0.
  CHECK(gd.eta_hat_group[0] == doctest::Approx(2 * 30.0 * std::sin(0.1)));
  CHECK(gd.eta_hat == doctest::Approx(2 * 30.0 * std::sin(0.1)));
  CHECK(gd.eta_hat_formula == doctest::Approx(30.0 * 0.2));
}

TEST_CASE("pinching clause") {
  auto s = pair(1.0, 4.1, 1.0, 0.2);
  auto rep = validate_hypotheses(s, group_components(s.lambda), inputs_for(2, 1.0));
  CHECK_FALSE(rep.pinching);
  CHECK(rep.failed_clauses.front() == "PINCHING");
  s = pair(1.0, 3.9, 1.0, 0.2);
  rep = validate_hypotheses(s, group_components(s.lambda), inputs_for(2, 1.0));
  CHECK(rep.pinching);
}

TEST_CASE("ν_* and eigenvalue clauses") {
  auto s = pair(1.0, 1.0, 1.0, 0.2);
  s.nu = {0.9, 1.5};
  auto rep = validate_hypotheses(s, group_components(s.lambda), inputs_for(2, 1.0));
  CHECK_FALSE(rep.nu_star_gt_one);

  s = pair(1.0, 1.0, 1.0, 0.995);
  rep = validate_hypotheses(s, group_components(s.lambda), inputs_for(2, 1.0));
  CHECK_FALSE(rep.eigen_margin);

  s = pair(1.0, 1.0, 1.0, 1.2);
  rep = validate_hypotheses(s, group_components(s.lambda), inputs_for(2, 1.0));
  CHECK_FALSE(rep.below_principal);
}

TEST_CASE("case classification for two components") {
  auto classify = [](double l1, double delta, double beta, double S) {
    const auto s = pair(1.0, l1, delta, beta);
    return validate_hypotheses(s, group_components(s.lambda), inputs_for(2, S, -0.4)).case_label;
  };
  CHECK(classify(1.0, 1.0, 0.2, 1.0) == 'a');
  CHECK(classify(1.0, 1.0, -0.2, 1.0) == 'c');
  CHECK(classify(1.0, 1.0, -0.5, 1.0) == 'N');
  CHECK(classify(1.0, -1.0, -0.5, -1.0) == 'd');
  CHECK(classify(1.0, -1.0, -0.2, -1.0) == 'N');
  CHECK(classify(2.0, 1.0, -0.2, 1.0) == 'c');
  CHECK(classify(2.0, 1.0, 0.2, 1.0) == 'a');
}

TEST_CASE("case classification for three components") {
  auto s = three_component(1.0, 2.0, 3.0);
  auto g = group_components(s.lambda);
  CHECK(validate_hypotheses(s, g, inputs_for(3, 1.0)).case_label == 'a');
  for (auto& row : s.beta)
    for (auto& b : row) b = -b;
  CHECK(validate_hypotheses(s, g, inputs_for(3, -1.0)).case_label == 'b');
  CHECK(validate_hypotheses(s, g, inputs_for(3, 1.0)).case_label == 'N');
}

TEST_CASE("config parsing, round trip and digest") {
  const nlohmann::json j = {{"dim", 2},           {"d", 3},
                            {"lambda", {1, 2, 3}}, {"mu", {1, 1, 1}},
                            {"delta", {1, 1, 1}},  {"nu", {1.5, 1.5, 1.5}},
                            {"beta", {{0.5, 0.4}, {0.3}}},
                            {"theta", 40}};
  const auto c = parse_config(j);
  CHECK(c.system.beta[0][2] == 0.4);
  CHECK(c.system.beta[2][1] == 0.3);
  CHECK(c.theta == 40);
  const auto c2 = parse_config(to_json(c));
  CHECK(config_digest(c) == config_digest(c2));
  auto j3 = j;
  j3["theta"] = 41;
  CHECK(config_digest(parse_config(j3)) != config_digest(c));

  auto bad = j;
  bad["dim"] = 4;
  try {
    parse_config(bad);
    FAIL("expected bad-dimension");
  } catch (const Error& e) {
    CHECK(e.code() == "bad-dimension");
  }
  bad = j;
  bad["beta"] = {{0.5}};
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = j;
  bad["theta"] = 1;
  CHECK_THROWS_AS(parse_config(bad), Error);
}
