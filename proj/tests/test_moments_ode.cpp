#include <catch_amalgamated.hpp>

#include <random>

#include "cascade/analytic.hpp"
#include "cascade/moments_ode.hpp"

using namespace cascade;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SystemParams random_stable(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uA(0.0, 60.0), uk(0.3, 2.0), ub(0.0, 1.0), ur(0.0, 0.9);
  while (true) {
    SystemParams p{uA(rng), uk(rng), ub(rng), 0.0};
    const double th = threshold_epsilon(p);
    if (th <= 0.0) continue;
    p.epsilon = ur(rng) * th;
    // keep the long-time integrations short
    if (coefficients(p).lambda_minus < 0.1) continue;
    return p;
  }
}

double rel(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

}  // namespace

TEST_CASE("vacuum is a fixed point without drive", "[moments]") {
  const SystemParams p{0.0, 0.8, 0.0, 0.0};
  const auto series = moments::propagate(p, 10.0, 0.01);
  for (const auto& s : series) {
    CHECK(s.alpha_sq == moments::cplx{});
    CHECK(s.n_cl == 0.0);
    CHECK(s.flow_plus == 0.0);
    CHECK(s.flow_minus == 0.0);
  }
  const auto st = moments::steady_from_linear_solve(p);
  CHECK(st.n_cl == 0.0);
  CHECK(st.alpha_sq == moments::cplx{});
}

TEST_CASE("pure parametric amplifier steady state", "[moments]") {
  const SystemParams p{0.0, 0.8, 0.0, 0.2};
  CHECK_THAT(moments::steady_from_linear_solve(p).n_cl, WithinRel(1.0 / 6.0, 1e-13));
  moments::PropagateOptions opts;
  opts.samples = 2;
  const auto series = moments::propagate(p, 100.0, 0.01, opts);
  CHECK_THAT(series.back().n_cl, WithinAbs(1.0 / 6.0, 1e-8));
}

TEST_CASE("step size and arguments are checked", "[moments]") {
  const SystemParams p{25.0, 0.8, 0.1, 0.2};
  const double bound = moments::max_step(p);
  try {
    moments::propagate(p, 1.0, 2.0 * bound);
    FAIL("expected accuracy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::accuracy);
  }
  CHECK_THROWS_AS(moments::propagate(p, -1.0, bound), Error);
  CHECK_THROWS_AS(moments::propagate(p, 1.0, 0.0), Error);
  CHECK_THROWS_AS(moments::steady_from_linear_solve({25.0, 0.8, 0.1, 10.0}), Error);
  const SystemParams th{0.0, 0.8, 0.0, 0.4};
  try {
    moments::steady_from_linear_solve(th);
    FAIL("expected not-stable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_stable);
  }
}

TEST_CASE("series records the requested samples", "[moments]") {
  const SystemParams p{25.0, 0.8, 0.1, 0.2};
  moments::PropagateOptions opts;
  opts.samples = 11;
  const auto series = moments::propagate(p, 1.0, moments::max_step(p), opts);
  REQUIRE(series.size() == 11);
  CHECK(series.front().t == 0.0);
  CHECK_THAT(series.back().t, WithinAbs(1.0, 1e-12));
  for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i].t > series[i - 1].t);
}

TEST_CASE("long-time limit matches the closed forms", "[moments][property]") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 20; ++i) {
    const SystemParams p = random_stable(rng);
    const double lm = coefficients(p).lambda_minus;
    moments::PropagateOptions opts;
    opts.samples = 2;
    const auto series = moments::propagate(p, 12.0 / lm, moments::max_step(p), opts);
    const auto& s = series.back();
    const auto [ap, am] = analytic::steady_alpha_sq(p);
    CHECK(rel(s.n_cl, analytic::mean_photon_number_steady(p)) < 1e-8);
    CHECK(rel(s.flow_plus, ap) < 1e-8);
    CHECK(rel(s.flow_minus, am) < 1e-8);
    const auto lin = moments::steady_from_linear_solve(p);
    CHECK(rel(s.n_cl, lin.n_cl) < 1e-10);
    CHECK(rel(s.alpha_sq.real(), lin.alpha_sq.real()) < 1e-10);
    CHECK(std::abs(lin.alpha_sq.imag()) < 1e-14);
  }
}

TEST_CASE("redundant quadrature flow tracks the reconstruction", "[moments][property]") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 20; ++i) {
    const SystemParams p = random_stable(rng);
    const auto series = moments::propagate(p, 5.0, moments::max_step(p));
    for (const auto& s : series) {
      CHECK(rel(s.flow_plus, s.reconstructed_plus()) < 1e-10);
      CHECK(rel(s.flow_minus, s.reconstructed_minus()) < 1e-10);
      CHECK(s.mean_alpha == moments::cplx{});
      CHECK(s.n_cl >= 0.0);
    }
  }
}

TEST_CASE("linear solve agrees with the closed forms", "[moments][property]") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> uA(0.0, 500.0), uk(0.05, 5.0), ub(0.0, 3.0), ur(0.0, 0.999);
  int tested = 0;
  while (tested < 1000) {
    SystemParams p{uA(rng), uk(rng), ub(rng), 0.0};
    const double th = threshold_epsilon(p);
    if (th <= 0.0) continue;
    p.epsilon = ur(rng) * th;
    if (stability(p) != Stability::stable) continue;
    ++tested;
    const auto lin = moments::steady_from_linear_solve(p);
    const auto rec = analytic::steady_moments(p);
    CHECK(std::abs(lin.n_cl - rec.n_cl) <= 1e-9 * std::max(1.0, rec.n_cl));
    CHECK(std::abs(lin.alpha_sq.real() - rec.alpha_sq) <= 1e-9 * std::max(1.0, std::abs(rec.alpha_sq)));
  }
}

TEST_CASE("non-vacuum initial moments relax to the same steady state", "[moments]") {
  const SystemParams p{10.0, 0.8, 0.3, 0.2};
  moments::PropagateOptions opts;
  opts.samples = 2;
  opts.initial.n_cl = 3.0;
  opts.initial.alpha_sq = {1.0, 0.5};
  opts.initial.mean_alpha = {0.2, -0.1};
  opts.initial.flow_plus = opts.initial.reconstructed_plus();
  opts.initial.flow_minus = opts.initial.reconstructed_minus();
  const double lm = coefficients(p).lambda_minus;
  const auto series = moments::propagate(p, 30.0 / lm, moments::max_step(p), opts);
  const auto lin = moments::steady_from_linear_solve(p);
  CHECK_THAT(series.back().n_cl, WithinRel(lin.n_cl, 1e-8));
  CHECK(std::abs(series.back().mean_alpha) < 1e-8);
}
