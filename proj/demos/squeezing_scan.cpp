// Scans the minus-quadrature variance at threshold over beta and reports the
// optimum for a few gain values.

#include <cstdio>

#include "cascade/analytic.hpp"

int main() {
  using namespace cascade;
  const double kappa = 0.8;
  std::printf("%8s %10s %12s %12s\n", "A", "beta_opt", "var_minus", "squeezing");
  for (double A : {25.0, 50.0, 100.0, 1000.0}) {
    const auto m = analytic::minimize_minus_variance(A, kappa, analytic::MinimizeMode::threshold);
    std::printf("%8.0f %10.5f %12.6f %11.1f%%\n", A, m.beta, m.variance, 100.0 * (1.0 - m.variance));
  }

  std::printf("\nA=100 at threshold:\n%8s %12s %12s\n", "beta", "var_minus", "S_minus(0)");
  for (double beta : {0.0, 0.02, 0.067, 0.2, 0.5}) {
    SystemParams p{100.0, kappa, beta, 0.0};
    p.epsilon = threshold_epsilon(p);
    std::printf("%8.3f %12.6f %12.6f\n", beta, analytic::variance_threshold(p).minus, analytic::spectrum_minus(p, 0.0));
  }
  return 0;
}
