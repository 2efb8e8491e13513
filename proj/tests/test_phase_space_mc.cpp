#include <catch_amalgamated.hpp>

#include <cstring>

#include "cascade/analytic.hpp"
#include "cascade/moments_ode.hpp"
#include "cascade/phase_space_mc.hpp"

using namespace cascade;
using namespace cascade::mc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool bitwise_equal(const MomentSeries& a, const MomentSeries& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    const MomentSample& x = a.samples[k];
    const MomentSample& y = b.samples[k];
    for (auto [p, q] : {std::pair{&x.alpha_sq, &y.alpha_sq}, std::pair{&x.n_cl, &y.n_cl},
                        std::pair{&x.plus_sq, &y.plus_sq}, std::pair{&x.minus_sq, &y.minus_sq},
                        std::pair{&x.mean_alpha, &y.mean_alpha}}) {
      if (std::memcmp(p, q, sizeof(ComplexEstimate)) != 0) return false;
    }
  }
  return true;
}

const SystemParams kMild{25.0, 0.8, 0.1, 0.5 * threshold_epsilon({25.0, 0.8, 0.1, 0.0})};

}  // namespace

TEST_CASE("noise factorization", "[mc]") {
  const auto z = factor_noise(coefficients({0.0, 0.8, 0.0, 0.0}), 0.0);
  CHECK(z.amp_plus == cplx{});
  CHECK(z.amp_minus == cplx{});
  const auto d = factor_noise(coefficients({0.0, 0.8, 0.0, 0.2}), 0.2);
  CHECK_THAT(d.amp_plus.real(), WithinRel(std::sqrt(0.1), 1e-15));
  CHECK_THAT(d.amp_minus.real(), WithinRel(std::sqrt(0.1), 1e-15));
  const auto l = factor_noise(coefficients({100.0, 0.8, 0.0, 0.2}), 0.2);
  CHECK_THAT(l.amp_plus.real(), WithinRel(std::sqrt(100.2 / 2.0), 1e-14));
  CHECK_THAT(l.amp_minus.real(), WithinRel(std::sqrt(0.1), 1e-12));
  CHECK(l.amp_plus.imag() == 0.0);

  // identities; both amplitudes are real for epsilon >= 0
  for (const SystemParams& p : {kMild, SystemParams{100.0, 0.8, 0.067, 0.3}, SystemParams{10.0, 1.0, 1.5, 0.0}}) {
    const Coefficients c = coefficients(p);
    const auto nf = factor_noise(c, p.epsilon);
    const cplx s = nf.amp_plus * nf.amp_plus + nf.amp_minus * nf.amp_minus;
    const cplx t = nf.amp_plus * nf.amp_plus - nf.amp_minus * nf.amp_minus;
    CHECK(std::abs(s - (p.epsilon - 2.0 * c.V)) < 1e-12 * std::max(1.0, std::abs(c.V)));
    CHECK(std::abs(t - 2.0 * c.R) < 1e-12 * std::max(1.0, std::abs(c.R)));
    CHECK(nf.amp_plus.imag() == 0.0);
    CHECK(nf.amp_minus.imag() == 0.0);
  }
}

TEST_CASE("noise increments reproduce the diffusion matrix", "[mc]") {
  const double dt = 0.01;
  for (const SystemParams& p : {kMild, SystemParams{10.0, 1.0, 1.5, 0.0}}) {
    const Coefficients c = coefficients(p);
    const auto stats = noise_increment_statistics(factor_noise(c, p.epsilon), dt, 1'000'000, 99);
    auto within = [](const ComplexEstimate& e, cplx target) {
      return std::abs(e.mean.real() - target.real()) <= 3.0 * e.se_re + 1e-300 &&
             std::abs(e.mean.imag() - target.imag()) <= 3.0 * e.se_im + 1e-300;
    };
    CHECK(within(stats.mean_d_alpha, 0.0));
    CHECK(within(stats.alpha_alpha, (p.epsilon - 2.0 * c.V) * dt));
    CHECK(within(stats.alpha_plus_alpha_plus, (p.epsilon - 2.0 * c.V) * dt));
    CHECK(within(stats.alpha_alpha_plus, 2.0 * c.R * dt));
  }
}

TEST_CASE("vacuum without drive stays at zero", "[mc]") {
  const auto s = run({0.0, 0.8, 0.0, 0.0}, 100, 2.0, 0.01, 1);
  for (const auto& m : s.samples) {
    CHECK(m.n_cl.mean == cplx{});
    CHECK(m.alpha_sq.mean == cplx{});
    CHECK(m.plus_sq.mean == cplx{});
    CHECK(m.minus_sq.se_re == 0.0);
  }
}

TEST_CASE("deterministic step follows the slow eigendirection", "[mc]") {
  const Coefficients c = coefficients(kMild);
  const double dt = 0.001;
  TrajectoryEnsemble ens(1, 0, 1, dt);
  ens.alpha()[0] = 1.0;
  ens.alpha_plus()[0] = 1.0;
  step(ens, c, kMild.epsilon, factor_noise(c, kMild.epsilon), false);
  CHECK_THAT(ens.alpha()[0].real(), WithinRel(1.0 - c.lambda_minus * dt, 1e-14));
  CHECK_THAT(ens.alpha_plus()[0].real(), WithinRel(1.0 - c.lambda_minus * dt, 1e-14));
  CHECK_THAT(ens.time(), WithinRel(dt, 1e-15));
}

TEST_CASE("run preconditions", "[mc]") {
  CHECK_THROWS_AS(run({25.0, 0.8, 0.1, 5.0}, 10, 1.0, 0.001, 1), Error);
  try {
    run(kMild, 10, 1.0, 1.0, 1);
    FAIL("expected step-too-large");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::step_too_large);
  }
  RunOptions opts;
  opts.blowup = 1e-3;
  try {
    run(kMild, 10, 1.0, 0.001, 1, opts);
    FAIL("expected blowup");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::blowup);
    CHECK(std::string(e.what()).find("dt=") != std::string::npos);
  }
}

TEST_CASE("runs are reproducible and independent of the worker count", "[mc]") {
  RunOptions one;
  one.jobs = 1;
  one.samples = 5;
  one.chunk = 64;
  RunOptions many = one;
  many.jobs = 3;
  const auto a = run(kMild, 500, 1.0, 0.002, 42, one);
  const auto b = run(kMild, 500, 1.0, 0.002, 42, one);
  const auto c = run(kMild, 500, 1.0, 0.002, 42, many);
  const auto d = run(kMild, 500, 1.0, 0.002, 43, one);
  CHECK(bitwise_equal(a, b));
  CHECK(bitwise_equal(a, c));
  CHECK_FALSE(bitwise_equal(a, d));
}

TEST_CASE("pure amplifier photon number", "[mc]") {
  const SystemParams p{0.0, 0.8, 0.0, 0.2};
  RunOptions opts;
  opts.samples = 2;
  const auto s = run(p, 100'000, 40.0 / 0.8, 0.02, 7, opts);
  const auto& last = s.samples.back();
  CHECK(std::abs(last.n_cl.mean.real() - 1.0 / 6.0) <= 3.0 * last.n_cl.se_re);
}

TEST_CASE("ensemble moments track the moment equations", "[mc]") {
  const double dt = 0.002;
  const double t_end = 4.0;
  RunOptions opts;
  opts.samples = 11;
  const auto s = run(kMild, 20'000, t_end, dt, 11, opts);
  moments::PropagateOptions mo;
  mo.samples = 11;
  const auto ode = moments::propagate(kMild, t_end, std::min(dt, moments::max_step(kMild)), mo);
  REQUIRE(ode.size() == s.samples.size());
  for (std::size_t k = 0; k < ode.size(); ++k) {
    const auto& m = s.samples[k];
    CHECK_THAT(m.t, WithinAbs(ode[k].t, 1e-9));
    CHECK(std::abs(m.n_cl.mean.real() - ode[k].n_cl) <= 3.0 * m.n_cl.se_re + 1e-12);
    CHECK(std::abs(m.alpha_sq.mean.real() - ode[k].alpha_sq.real()) <= 3.0 * m.alpha_sq.se_re + 1e-12);
    CHECK(std::abs(m.mean_alpha.mean.real()) <= 4.0 * m.mean_alpha.se_re + 1e-12);
    CHECK(std::abs(m.mean_alpha_plus.mean.real()) <= 4.0 * m.mean_alpha_plus.se_re + 1e-12);
  }
}

TEST_CASE("standard errors shrink as one over the square root of n", "[mc]") {
  RunOptions opts;
  opts.samples = 2;
  const auto a = run(kMild, 10'000, 2.0, 0.002, 5, opts);
  const auto b = run(kMild, 20'000, 2.0, 0.002, 6, opts);
  const double ratio = a.samples.back().n_cl.se_re / b.samples.back().n_cl.se_re;
  CHECK_THAT(ratio, WithinRel(std::sqrt(2.0), 0.2));
}

TEST_CASE("stationary correlation at zero lag", "[mc]") {
  const SystemParams p{0.0, 0.8, 0.0, 0.2};
  CorrelationOptions opts;
  opts.n_traj = 2000;
  opts.dt = 0.01;
  opts.window = 20.0;
  opts.batches = 20;
  std::vector<double> taus;
  for (int k = 0; k <= 40; ++k) taus.push_back(0.1 * k);
  const auto e = two_time_correlation(p, taus, opts);
  const auto [ap, am] = analytic::steady_alpha_sq(p);
  CHECK(std::abs(e.corr_plus[0] - ap) <= 3.0 * e.se_plus[0]);
  CHECK(std::abs(e.corr_minus[0] - am) <= 3.0 * e.se_minus[0]);
  const Coefficients c = coefficients(p);
  const auto rate = fit_decay(e, Quadrature::plus, 2.0);
  CHECK(std::abs(rate.mean - c.lambda_minus) <= 3.0 * rate.se);
  CHECK_THROWS_AS(two_time_correlation(p, std::vector<double>{0.015}, opts), Error);
}
