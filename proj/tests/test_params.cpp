#include <catch_amalgamated.hpp>

#include <random>

#include "cascade/params.hpp"

using namespace cascade;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("microscopic parameters map to effective ones", "[params]") {
  MicroscopicParams m;
  m.g = 1.0;
  m.r_a = 50.0;
  m.gamma = 1.0;
  CHECK_THAT(from_microscopic(m).A, WithinRel(100.0, 1e-15));

  m.g = 2.0;
  m.r_a = 25.0;
  m.gamma = 2.0;
  CHECK_THAT(from_microscopic(m).A, WithinRel(50.0, 1e-15));

  m.g_prime = 0.0;
  m.mu = 3.0;
  m.lambda_c = 0.1;
  const SystemParams p = from_microscopic(m);
  CHECK(p.beta == 0.0);
  CHECK_THAT(p.epsilon, WithinRel(0.3, 1e-15));

  m.g_prime = 1.5;
  m.mu = 0.0;
  CHECK(from_microscopic(m).beta == 0.0);
  CHECK(from_microscopic(m).epsilon == 0.0);

  m.g_prime = 0.5;
  m.mu = 2.0;
  m.gamma = 4.0;
  CHECK_THAT(from_microscopic(m).beta, WithinRel(0.5, 1e-15));
}

TEST_CASE("microscopic preconditions are enforced", "[params]") {
  MicroscopicParams m;
  m.gamma = 0.0;
  CHECK_THROWS_AS(from_microscopic(m), Error);
  m.gamma = -1.0;
  CHECK_THROWS_AS(from_microscopic(m), Error);
  m.gamma = 1.0;
  m.r_a = -1.0;
  try {
    from_microscopic(m);
    FAIL("expected invalid parameter");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_parameter);
  }
}

TEST_CASE("system parameter validation", "[params]") {
  CHECK_THROWS_AS(coefficients({-1.0, 0.8, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(coefficients({1.0, 0.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(coefficients({1.0, 0.8, -0.1, 0.0}), Error);
  CHECK_THROWS_AS(coefficients({1.0, 0.8, 0.1, -0.1}), Error);
  CHECK_THROWS_AS(coefficients({std::nan(""), 0.8, 0.1, 0.0}), Error);
}

TEST_CASE("coefficients at beta = 0", "[params]") {
  const Coefficients c = coefficients({100.0, 0.8, 0.0, 0.0});
  CHECK_THAT(c.R, WithinRel(25.0, 1e-15));
  CHECK_THAT(c.S, WithinRel(25.4, 1e-15));
  CHECK_THAT(c.U, WithinRel(-25.0, 1e-15));
  CHECK_THAT(c.V, WithinRel(-25.0, 1e-15));
  CHECK(c.B == 1.0);
  CHECK_THAT(c.lambda_minus, WithinRel(0.4, 1e-14));
  CHECK_THAT(c.lambda_plus, WithinRel(0.4, 1e-14));
}

TEST_CASE("coefficients without atoms", "[params]") {
  for (double beta : {0.0, 0.3, 2.0}) {
    const Coefficients c = coefficients({0.0, 0.8, beta, 0.15});
    CHECK(c.R == 0.0);
    CHECK(c.U == 0.0);
    CHECK(c.V == 0.0);
    CHECK_THAT(c.S, WithinRel(0.4, 1e-15));
    CHECK_THAT(c.lambda_minus, WithinRel(0.4 - 0.15, 1e-14));
    CHECK_THAT(c.lambda_plus, WithinRel(0.4 + 0.15, 1e-14));
  }
}

TEST_CASE("coefficients against 20-digit reference at beta = 0.5", "[params]") {
  // Evaluated independently in 30-digit decimal arithmetic.
  const Coefficients c = coefficients({100.0, 0.8, 0.5, 0.0});
  CHECK_THAT(c.B, WithinRel(1.328125, 1e-15));
  CHECK_THAT(c.R, WithinRel(9.4117647058823529412, 1e-14));
  CHECK_THAT(c.S, WithinRel(38.047058823529411765, 1e-14));
  CHECK_THAT(c.U, WithinRel(-10.588235294117647059, 1e-14));
  CHECK_THAT(c.V, WithinRel(-22.352941176470588235, 1e-14));
}

TEST_CASE("threshold drive", "[params]") {
  CHECK_THAT(threshold_epsilon({100.0, 0.8, 0.0, 0.0}), WithinRel(0.4, 1e-15));
  CHECK_THAT(threshold_epsilon({7.0, 0.8, 0.0, 5.0}), WithinRel(0.4, 1e-15));
  for (double beta : {0.0, 0.1, 1.0, 3.0}) CHECK_THAT(threshold_epsilon({0.0, 0.8, beta, 0.0}), WithinRel(0.4, 1e-15));
  CHECK_THAT(threshold_epsilon({100.0, 0.8, 0.067, 0.0}), WithinRel(3.7238134322366982204, 1e-14));
}

TEST_CASE("stability classification", "[params]") {
  CHECK(stability({0.0, 0.8, 0.0, 0.0}) == Stability::stable);
  const SystemParams base{25.0, 0.8, 0.1, 0.0};
  const double th = threshold_epsilon(base);
  CHECK(stability(base.with_epsilon(th)) == Stability::at_threshold);
  CHECK(stability(base.with_epsilon(1.1 * th)) == Stability::unstable);
  CHECK(stability(base.with_epsilon(0.9 * th)) == Stability::stable);
  CHECK_THROWS_AS(require_stable(base.with_epsilon(th), "test"), Error);
  CHECK_NOTHROW(require_stable(base.with_epsilon(0.5 * th), "test"));
  CHECK(std::string(to_string(Stability::at_threshold)) == "at_threshold");
}

TEST_CASE("coefficient invariants over random parameters", "[params][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uA(0.0, 1000.0), uk(0.01, 5.0), ub(0.0, 10.0), ue(0.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const SystemParams p{uA(rng), uk(rng), ub(rng), ue(rng)};
    const Coefficients c = coefficients(p);
    const double scale = std::max({1.0, std::abs(c.S), std::abs(c.R), std::abs(c.U), std::abs(c.V), p.epsilon});
    CHECK(c.B > 0.0);
    CHECK(c.S - c.R > 0.0);
    CHECK(std::abs(c.lambda_plus + c.lambda_minus - 2.0 * (c.S - c.R)) <= 1e-12 * scale);
    CHECK(std::abs(c.lambda_plus - c.lambda_minus - 2.0 * (c.U - c.V + p.epsilon)) <= 1e-12 * scale);
    const double lm = coefficients(p.with_epsilon(std::max(0.0, threshold_epsilon(p)))).lambda_minus;
    if (threshold_epsilon(p) >= 0.0) CHECK(std::abs(lm) < 1e-12 * std::max(p.kappa, scale));
    // slope of lambda_minus in epsilon is -1
    const double d = coefficients(p.with_epsilon(p.epsilon + 0.25)).lambda_minus - c.lambda_minus;
    CHECK_THAT(d, WithinAbs(-0.25, 1e-12 * scale));
  }
  // lambda_plus >= lambda_minus holds on the whole domain because U - V + epsilon >= 0.
  for (int i = 0; i < 2000; ++i) {
    const Coefficients c = coefficients({uA(rng), uk(rng), ub(rng), ue(rng)});
    CHECK(c.lambda_plus >= c.lambda_minus);
  }
}

TEST_CASE("symbolic reduction at beta = 0", "[params][property]") {
  for (double A : {0.5, 10.0, 250.0}) {
    const Coefficients c = coefficients({A, 1.3, 0.0, 0.0});
    CHECK_THAT(c.R, WithinRel(A / 4.0, 1e-15));
    CHECK_THAT(-c.U, WithinRel(A / 4.0, 1e-15));
    CHECK_THAT(-c.V, WithinRel(A / 4.0, 1e-15));
    CHECK_THAT(c.S, WithinRel(0.65 + A / 4.0, 1e-15));
  }
}
