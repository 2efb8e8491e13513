#pragma once

// System parameters of the cascade laser + parametric amplifier and the
// master-equation coefficients derived from them.
//
// All rates share one arbitrary unit; the figure presets fix kappa = 0.8.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cascade/error.hpp"

namespace cascade {

/// Microscopic origins of the effective parameters. tau is kept for the
/// record only; nothing downstream reads it.
struct MicroscopicParams {
  double g = 0.0;         // atom-cavity coupling
  double g_prime = 0.0;   // pump-atom coupling
  double mu = 0.0;        // pump amplitude
  double lambda_c = 0.0;  // crystal-pump coupling
  double r_a = 0.0;       // atomic injection rate
  double gamma = 1.0;     // atomic decay rate (same for all three levels)
  double tau = 0.0;       // transit time
  double kappa = 0.8;     // cavity damping, passed through
};

struct SystemParams {
  double A = 0.0;        // linear gain coefficient
  double kappa = 0.8;    // cavity damping constant
  double beta = 0.0;     // Omega / gamma
  double epsilon = 0.0;  // parametric drive

  SystemParams with_epsilon(double eps) const {
    SystemParams p = *this;
    p.epsilon = eps;
    return p;
  }
};

struct Coefficients {
  double R = 0.0;
  double S = 0.0;
  double U = 0.0;
  double V = 0.0;
  double B = 1.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;

  /// S - R, the bare decay of alpha.
  double damping() const { return S - R; }
};

enum class Stability { stable, at_threshold, unstable };

inline void validate(const SystemParams& p) {
  const bool finite = std::isfinite(p.A) && std::isfinite(p.kappa) && std::isfinite(p.beta) &&
                      std::isfinite(p.epsilon);
  if (!finite || p.A < 0.0 || p.kappa <= 0.0 || p.beta < 0.0 || p.epsilon < 0.0) {
    std::ostringstream os;
    os << "require A >= 0, kappa > 0, beta >= 0, epsilon >= 0 (got A=" << p.A
       << ", kappa=" << p.kappa << ", beta=" << p.beta << ", epsilon=" << p.epsilon << ")";
    throw Error(ErrorKind::invalid_parameter, os.str());
  }
}

inline SystemParams from_microscopic(const MicroscopicParams& m) {
  if (!(m.gamma > 0.0) || !std::isfinite(m.gamma)) {
    throw Error(ErrorKind::invalid_parameter, "atomic decay rate gamma must be > 0");
  }
  if (m.r_a < 0.0) {
    throw Error(ErrorKind::invalid_parameter, "injection rate r_a must be >= 0");
  }
  SystemParams p;
  p.A = 2.0 * m.g * m.g * m.r_a / (m.gamma * m.gamma);
  p.beta = 2.0 * m.g_prime * m.mu / m.gamma;
  p.epsilon = m.lambda_c * m.mu;
  p.kappa = m.kappa;
  return p;
}

/// (1 + beta^2)(1 + beta^2/4)
inline double normalization(double beta) {
  const double b2 = beta * beta;
  return (1.0 + b2) * (1.0 + 0.25 * b2);
}

inline Coefficients coefficients(const SystemParams& p) {
  validate(p);
  const double b = p.beta;
  const double b2 = b * b;
  const double b3 = b2 * b;
  Coefficients c;
  c.B = normalization(b);
  const double f = p.A / (4.0 * c.B);
  c.R = f * (1.0 - 1.5 * b + b2);
  // The 2 kappa B / A term of S is pulled out so that A = 0 is regular.
  c.S = 0.5 * p.kappa + f * (1.0 + 1.5 * b + b2);
  c.U = f * (-1.0 + 0.5 * b + 0.5 * b2 + 0.5 * b3);
  c.V = f * (-1.0 - 0.5 * b + 0.5 * b2 - 0.5 * b3);
  const double drive = c.U - c.V + p.epsilon;
  c.lambda_minus = (c.S - c.R) - drive;
  c.lambda_plus = (c.S - c.R) + drive;
  return c;
}

/// Drive at which lambda_minus vanishes. The epsilon field of p is ignored.
inline double threshold_epsilon(const SystemParams& p) {
  validate(p.with_epsilon(0.0));
  const double b = p.beta;
  return 0.5 * p.kappa + p.A * (2.0 * b - b * b * b) / (4.0 * normalization(b));
}

inline double threshold_tolerance(const SystemParams& p) {
  return 1e-9 * std::max(p.kappa, 1.0);
}

inline Stability stability(const SystemParams& p) {
  const double lm = coefficients(p).lambda_minus;
  if (std::abs(lm) <= threshold_tolerance(p)) return Stability::at_threshold;
  return lm > 0.0 ? Stability::stable : Stability::unstable;
}

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::at_threshold: return "at_threshold";
    case Stability::unstable: return "unstable";
  }
  return "unknown";
}

inline void require_stable(const SystemParams& p, const char* what) {
  const Coefficients c = coefficients(p);
  if (stability(p) != Stability::stable) {
    std::ostringstream os;
    os << what << " needs lambda_minus > 0 (lambda_minus=" << c.lambda_minus
       << ", epsilon_th=" << threshold_epsilon(p) << ")";
    throw Error(ErrorKind::not_stable, os.str());
  }
}

}  // namespace cascade
