#pragma once

// Closed-form results for the cavity mode: quadrature variances, squeezing
// spectra, Gaussian moments, the Q function and the photon-number
// distribution. Everything here is a pure function of SystemParams.

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "cascade/error.hpp"
#include "cascade/params.hpp"

namespace cascade::analytic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Quadrature variances, vacuum = 1. When plus_diverges is set the plus
/// variance is unbounded (threshold) and `plus` holds +inf.
struct QuadratureVariances {
  double plus = 1.0;
  double minus = 1.0;
  bool plus_diverges = false;
};

struct GaussianRecord {
  double t = 0.0;        // +inf for the stationary record
  double alpha_sq = 0.0; // <alpha^2>, real
  double n_cl = 0.0;     // <alpha* alpha>
  double a = 1.0;        // characteristic-function coefficients
  double b = 0.0;
  double c = 1.0;        // Q-function coefficients
  double d = 0.0;
  bool q_defined = true; // a^2 > b^2
};

struct SpectrumCurve {
  std::vector<double> omega_grid;
  std::vector<double> s_plus;
  std::vector<double> s_minus;
};

struct PhotonDistribution {
  std::vector<double> probs;  // P(0..n_max)
  int n_max = 0;

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
  double mean() const {
    double s = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) s += static_cast<double>(n) * probs[n];
    return s;
  }
};

// ---------------------------------------------------------------------------
// Steady-state quadrature moments and variances

/// Stationary <alpha_+^2>, <alpha_-^2> from the decoupled quadrature flow.
inline std::pair<double, double> steady_alpha_sq(const Coefficients& c, double epsilon) {
  if (!(c.lambda_minus > 0.0) || !(c.lambda_plus > 0.0)) {
    std::ostringstream os;
    os << "steady state requires lambda_minus > 0 and lambda_plus > 0 (got "
       << c.lambda_minus << ", " << c.lambda_plus << ")";
    throw Error(ErrorKind::not_stable, os.str());
  }
  const double plus = (epsilon - 2.0 * c.V + 2.0 * c.R) / c.lambda_minus;
  const double minus = (epsilon - 2.0 * c.V - 2.0 * c.R) / c.lambda_plus;
  return {plus, minus};
}

inline std::pair<double, double> steady_alpha_sq(const SystemParams& p) {
  require_stable(p, "steady_alpha_sq");
  return steady_alpha_sq(coefficients(p), p.epsilon);
}

/// Minus-quadrature variance with the drive pinned at threshold.
inline double threshold_minus_variance(double A, double kappa, double beta) {
  const double B = normalization(beta);
  return (2.0 * kappa * B + 3.0 * A * beta * beta) / (4.0 * kappa * B + 6.0 * A * beta);
}

inline QuadratureVariances variance_threshold(const SystemParams& p) {
  validate(p.with_epsilon(0.0));
  QuadratureVariances v;
  v.plus = kInf;
  v.plus_diverges = true;
  v.minus = threshold_minus_variance(p.A, p.kappa, p.beta);
  return v;
}

/// Steady-state variances as 1 +/- <alpha_{+/-}^2>. At threshold the plus
/// variance is flagged as divergent and the minus one takes its limit.
inline QuadratureVariances variance_steady(const SystemParams& p) {
  switch (stability(p)) {
    case Stability::at_threshold:
      return variance_threshold(p);
    case Stability::unstable:
      require_stable(p, "variance_steady");
      break;
    case Stability::stable:
      break;
  }
  const auto [ap, am] = steady_alpha_sq(coefficients(p), p.epsilon);
  return {1.0 + ap, 1.0 - am, false};
}

/// The same variances written directly in (A, kappa, beta, epsilon).
inline QuadratureVariances variance_closed_form(const SystemParams& p) {
  require_stable(p, "variance_closed_form");
  const double b = p.beta;
  const double B = normalization(b);
  const double k = p.kappa;
  const double e = p.epsilon;
  QuadratureVariances v;
  v.plus = (2.0 * k * B + p.A * (4.0 + b * b)) /
           ((2.0 * k - 4.0 * e) * B + p.A * (2.0 * b - b * b * b));
  v.minus = (2.0 * k * B + 3.0 * p.A * b * b) /
            ((2.0 * k + 4.0 * e) * B + p.A * (4.0 * b + b * b * b));
  return v;
}

/// Variances with the nonlinear crystal removed (epsilon = 0, pump kept).
inline QuadratureVariances variance_no_crystal(const SystemParams& p) {
  validate(p.with_epsilon(0.0));
  const double b = p.beta;
  const double B = normalization(b);
  const double k = p.kappa;
  const double plus_den = 2.0 * k * B + p.A * (2.0 * b - b * b * b);
  if (!(plus_den > 0.0)) {
    std::ostringstream os;
    os << "coherently driven laser unstable at beta=" << b << " (denominator " << plus_den << ")";
    throw Error(ErrorKind::not_stable, os.str());
  }
  QuadratureVariances v;
  v.plus = (2.0 * k * B + p.A * (4.0 + b * b)) / plus_den;
  v.minus = (2.0 * k * B + 3.0 * p.A * b * b) / (2.0 * k * B + p.A * (4.0 * b + b * b * b));
  return v;
}

/// Strong-drive (beta >> 1) asymptote of variance_no_crystal: the
/// parametric-oscillator form kappa / (kappa -/+ 2A/beta).
inline QuadratureVariances variance_no_crystal_strong_drive(const SystemParams& p) {
  validate(p.with_epsilon(0.0));
  if (!(p.beta > 0.0)) throw Error(ErrorKind::invalid_parameter, "strong-drive limit needs beta > 0");
  const double g = 2.0 * p.A / p.beta;
  if (!(p.kappa - g > 0.0)) throw Error(ErrorKind::not_stable, "strong-drive limit: kappa <= 2A/beta");
  return {p.kappa / (p.kappa - g), p.kappa / (p.kappa + g), false};
}

enum class MinimizeMode { threshold, no_crystal };

struct MinimumResult {
  double beta = 0.0;
  double variance = 0.0;
};

namespace detail {

inline double minus_variance_for_mode(double A, double kappa, double beta, MinimizeMode mode) {
  if (mode == MinimizeMode::threshold) return threshold_minus_variance(A, kappa, beta);
  const double B = normalization(beta);
  return (2.0 * kappa * B + 3.0 * A * beta * beta) /
         (2.0 * kappa * B + A * (4.0 * beta + beta * beta * beta));
}

}  // namespace detail

/// Minimum of the minus-quadrature variance over beta in [0, 2]: a grid scan
/// at step 1e-4 refined by golden-section search to |dbeta| <= 1e-6.
/// Plateaus resolve to the smallest beta.
inline MinimumResult minimize_minus_variance(double A, double kappa, MinimizeMode mode) {
  validate(SystemParams{A, kappa, 0.0, 0.0});
  auto f = [&](double b) { return detail::minus_variance_for_mode(A, kappa, b, mode); };

  constexpr double kLo = 0.0;
  constexpr double kHi = 2.0;
  constexpr double kStep = 1e-4;
  constexpr int kPoints = 20001;
  int best_i = 0;
  double best = f(kLo);
  for (int i = 1; i < kPoints; ++i) {
    const double v = f(kLo + i * kStep);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  MinimumResult out{kLo + best_i * kStep, best};

  double lo = std::max(kLo, out.beta - kStep);
  double hi = std::min(kHi, out.beta + kStep);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_v = f(refined);
  if (refined_v < out.variance) out = {refined, refined_v};
  return out;
}

// ---------------------------------------------------------------------------
// Squeezing spectrum of the output field (vacuum = 1)

inline double spectrum_minus(const SystemParams& p, double omega) {
  const Coefficients c = coefficients(p);
  if (stability(p) == Stability::at_threshold) {
    const double b = p.beta;
    const double B = normalization(b);
    const double k = p.kappa;
    const double den_root = k + 3.0 * p.A * b / ((1.0 + b * b) * (2.0 + 0.5 * b * b));
    return 1.0 - k * (k + p.A * b * (3.0 - 1.5 * b) / B) / (den_root * den_root + omega * omega);
  }
  if (!(c.lambda_plus > 0.0)) throw Error(ErrorKind::not_stable, "spectrum_minus needs lambda_plus > 0");
  const double num = 2.0 * p.kappa * (p.epsilon - 2.0 * c.V - 2.0 * c.R);
  return 1.0 - num / (c.lambda_plus * c.lambda_plus + omega * omega);
}

/// Plus-quadrature spectrum. At threshold it diverges as 1/omega^2 and
/// omega = 0 returns +inf.
inline double spectrum_plus(const SystemParams& p, double omega) {
  const Stability s = stability(p);
  if (s == Stability::at_threshold) {
    if (omega == 0.0) return kInf;
    const double b = p.beta;
    const double k = p.kappa;
    return 1.0 + k * (k + p.A * (4.0 + b * b) / ((1.0 + b * b) * (2.0 + 0.5 * b * b))) /
                     (omega * omega);
  }
  if (s == Stability::unstable) require_stable(p, "spectrum_plus");
  const Coefficients c = coefficients(p);
  const double num = 2.0 * p.kappa * (p.epsilon - 2.0 * c.V + 2.0 * c.R);
  return 1.0 + num / (c.lambda_minus * c.lambda_minus + omega * omega);
}

inline SpectrumCurve spectrum(const SystemParams& p, std::span<const double> omega_grid) {
  if (stability(p) == Stability::unstable) require_stable(p, "spectrum");
  SpectrumCurve curve;
  curve.omega_grid.assign(omega_grid.begin(), omega_grid.end());
  curve.s_plus.reserve(omega_grid.size());
  curve.s_minus.reserve(omega_grid.size());
  for (double w : omega_grid) {
    curve.s_plus.push_back(spectrum_plus(p, w));
    curve.s_minus.push_back(spectrum_minus(p, w));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Transient Gaussian moments from vacuum

/// Propagator gains of alpha(t) = A(t) alpha(0) + B(t) alpha*(0) + F(t).
struct PropagatorGains {
  double direct = 1.0;
  double conjugate = 0.0;
};

inline PropagatorGains propagator(const Coefficients& c, double t) {
  const double em = std::exp(-c.lambda_minus * t);
  const double ep = std::exp(-c.lambda_plus * t);
  return {0.5 * (em + ep), 0.5 * (em - ep)};
}

namespace detail {

/// (1 - exp(-2 lambda t)) / lambda, switching to its series when |lambda t|
/// is below 1e-6 so that lambda = 0 stays finite.
inline double relaxation_factor(double lambda, double t) {
  if (std::isinf(t)) {
    return lambda > 0.0 ? 1.0 / lambda : kInf;
  }
  const double x = lambda * t;
  if (std::abs(x) < 1e-6) return 2.0 * t * (1.0 - x + (2.0 / 3.0) * x * x);
  return -std::expm1(-2.0 * x) / lambda;
}

inline void fill_q_coefficients(GaussianRecord& r) {
  r.a = 1.0 + r.n_cl;
  r.b = r.alpha_sq;
  const double det = r.a * r.a - r.b * r.b;
  r.q_defined = det > 0.0 && std::isfinite(det);
  if (r.q_defined) {
    r.c = r.a / det;
    r.d = r.b / det;
  } else {
    r.c = std::numeric_limits<double>::quiet_NaN();
    r.d = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

/// Moments of the zero-mean Gaussian alpha(t) from a vacuum start, plus the
/// characteristic-function (a, b) and Q-function (c, d) coefficients.
/// t = +inf gives the stationary record (stable parameters only).
inline GaussianRecord transient_moments(const SystemParams& p, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::invalid_parameter, "time must be >= 0");
  if (std::isinf(t)) require_stable(p, "stationary moments");
  const Coefficients c = coefficients(p);
  const double e = p.epsilon;
  const double plus_part = (2.0 * c.R - 2.0 * c.V + e) / 4.0 * detail::relaxation_factor(c.lambda_minus, t);
  const double minus_part = (2.0 * c.R + 2.0 * c.V - e) / 4.0 * detail::relaxation_factor(c.lambda_plus, t);
  GaussianRecord r;
  r.t = t;
  r.alpha_sq = plus_part - minus_part;
  r.n_cl = plus_part + minus_part;
  detail::fill_q_coefficients(r);
  return r;
}

inline GaussianRecord steady_moments(const SystemParams& p) {
  return transient_moments(p, kInf);
}

/// Mean photon number written out in (A, kappa, beta, epsilon).
inline double mean_photon_number(const SystemParams& p, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::invalid_parameter, "time must be >= 0");
  if (std::isinf(t)) require_stable(p, "stationary mean photon number");
  const Coefficients c = coefficients(p);
  const double b = p.beta;
  const double b2 = b * b;
  const double b3 = b2 * b;
  const double B = normalization(b);
  const double e = p.epsilon;
  const double num1 = 2.0 * e * B + p.A * (2.0 - b + 0.5 * b2 + 0.5 * b3);
  const double num2 = 2.0 * e * B + p.A * (2.0 * b - 1.5 * b2 + 0.5 * b3);
  const double den1 = 4.0 * B * (p.kappa - 2.0 * e) + 2.0 * p.A * (2.0 * b - b3);
  const double den2 = 4.0 * B * (p.kappa + 2.0 * e) + 2.0 * p.A * (4.0 * b + b3);

  // den1 = 8 B lambda_minus; near threshold fall back to the limiting form.
  auto term = [&](double num, double den, double lambda) {
    if (std::isinf(t)) return num / den;
    if (std::abs(lambda * t) < 1e-6) return num / (8.0 * B) * detail::relaxation_factor(lambda, t);
    return num / den * -std::expm1(-2.0 * lambda * t);
  };
  return term(num1, den1, c.lambda_minus) - term(num2, den2, c.lambda_plus);
}

inline double mean_photon_number_steady(const SystemParams& p) {
  return mean_photon_number(p, kInf);
}

// ---------------------------------------------------------------------------
// Q function and photon statistics

inline void require_q_defined(double c, double d) {
  if (!(c > std::abs(d))) {
    std::ostringstream os;
    os << "Q function not normalizable (c=" << c << ", d=" << d << ")";
    throw Error(ErrorKind::q_function_undefined, os.str());
  }
}

/// Q(alpha) = sqrt(c^2 - d^2)/pi exp(-c|alpha|^2 + d Re(alpha^2)). With
/// d = b/(a^2 - b^2) the plus sign puts the long axis along Re(alpha) when
/// <alpha^2> > 0, matching <alpha|rho|alpha>/pi.
inline double q_function(const GaussianRecord& r, double alpha_re, double alpha_im) {
  require_q_defined(r.c, r.d);
  const double mod2 = alpha_re * alpha_re + alpha_im * alpha_im;
  const double re_sq = alpha_re * alpha_re - alpha_im * alpha_im;
  return std::sqrt(r.c * r.c - r.d * r.d) / std::numbers::pi * std::exp(-r.c * mod2 + r.d * re_sq);
}

/// P(n) for n = 0..n_max of the Gaussian state with Q coefficients (c, d).
/// The inner sum is taken in log space; for fixed n every term carries the
/// sign of (1 - c)^n, so no cancellation occurs.
inline PhotonDistribution photon_distribution(const GaussianRecord& r, int n_max) {
  if (n_max < 0) throw Error(ErrorKind::invalid_parameter, "n_max must be >= 0");
  require_q_defined(r.c, r.d);
  const double one_minus_c = 1.0 - r.c;
  const double log_u = std::log(std::abs(one_minus_c));  // -inf when c == 1
  const double log_d = std::log(std::abs(r.d));          // -inf when d == 0
  const double log_norm = 0.5 * std::log(r.c * r.c - r.d * r.d);
  const double ln2 = std::numbers::ln2;

  PhotonDistribution out;
  out.n_max = n_max;
  out.probs.reserve(static_cast<std::size_t>(n_max) + 1);
  std::vector<double> logs;
  for (int n = 0; n <= n_max; ++n) {
    logs.clear();
    const double lg_n = std::lgamma(n + 1.0);
    for (int l = 0; 2 * l <= n; ++l) {
      const int k = n - 2 * l;
      double lt = lg_n - 2.0 * std::lgamma(l + 1.0) - std::lgamma(k + 1.0) - 2.0 * l * ln2;
      if (k > 0) lt += k * log_u;
      if (l > 0) lt += 2.0 * l * log_d;
      if (std::isfinite(lt)) logs.push_back(lt);
    }
    double p = 0.0;
    if (!logs.empty()) {
      double mx = logs.front();
      for (double v : logs) mx = std::max(mx, v);
      double s = 0.0;
      for (double v : logs) s += std::exp(v - mx);
      p = std::exp(log_norm + mx + std::log(s));
      if (one_minus_c < 0.0 && (n % 2) == 1) p = -p;
    }
    if (p < 0.0 && p >= -1e-12) p = 0.0;
    out.probs.push_back(p);
  }
  return out;
}

}  // namespace cascade::analytic
