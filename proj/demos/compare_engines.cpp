// Steady-state photon number and quadrature variances at one parameter point
// from the closed forms, the moment equations, the truncated Fock-space
// master equation and the phase-space Monte Carlo.

#include <cstdio>

#include "cascade/cascade.hpp"

int main() {
  using namespace cascade;
  SystemParams p{10.0, 0.8, 0.2, 0.0};
  p.epsilon = 0.5 * threshold_epsilon(p);
  const Coefficients c = coefficients(p);
  std::printf("A=%g kappa=%g beta=%g epsilon=%.6f (lambda_minus=%.4f)\n\n", p.A, p.kappa, p.beta, p.epsilon,
              c.lambda_minus);
  std::printf("%-10s %12s %12s %12s\n", "engine", "mean_n", "var_plus", "var_minus");

  const auto v = analytic::variance_steady(p);
  std::printf("%-10s %12.6f %12.6f %12.6f\n", "analytic", analytic::mean_photon_number_steady(p), v.plus, v.minus);

  const auto lin = moments::steady_from_linear_solve(p);
  const double m2 = 2.0 * lin.alpha_sq.real();
  std::printf("%-10s %12.6f %12.6f %12.6f\n", "moments", lin.n_cl, 1.0 + (m2 + 2.0 * lin.n_cl), 1.0 - (m2 - 2.0 * lin.n_cl));

  const auto st = oracle::steady_state(p, 200);
  const auto o = oracle::observables(st.rho);
  std::printf("%-10s %12.6f %12.6f %12.6f\n", "oracle", o.mean_n, o.var_plus, o.var_minus);

  mc::RunOptions opts;
  opts.samples = 2;
  const auto s = mc::run(p, 20000, 12.0 / c.lambda_minus, 0.002, 1, opts).samples.back();
  std::printf("%-10s %12.6f %12.6f %12.6f   (+/- %.4f %.4f %.4f)\n", "mc", s.n_cl.mean.real(),
              1.0 + s.plus_sq.mean.real(), 1.0 - s.minus_sq.mean.real(), s.n_cl.se_re, s.plus_sq.se_re,
              s.minus_sq.se_re);
  return 0;
}
