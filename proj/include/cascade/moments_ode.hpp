#pragma once

// Deterministic propagation of the closed first/second moment equations of
// the c-number field, with the quadrature flow integrated alongside as a
// redundant channel.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "cascade/error.hpp"
#include "cascade/params.hpp"

namespace cascade::moments {

using cplx = std::complex<double>;

struct MomentState {
  double t = 0.0;
  cplx mean_alpha{};      // <alpha>
  cplx alpha_sq{};        // <alpha^2>
  double n_cl = 0.0;      // <alpha* alpha>
  double flow_plus = 0.0;   // <alpha_+^2>, alpha_+ = alpha* + alpha
  double flow_minus = 0.0;  // <alpha_-^2>, alpha_- = alpha* - alpha

  /// <alpha_{+/-}^2> rebuilt from (alpha_sq, n_cl).
  double reconstructed_plus() const { return 2.0 * alpha_sq.real() + 2.0 * n_cl; }
  double reconstructed_minus() const { return 2.0 * alpha_sq.real() - 2.0 * n_cl; }
};

struct PropagateOptions {
  int samples = 101;          // recorded points including t = 0 and t_end
  double halving_tol = 1e-8;  // relative to max(1, |value|)
  MomentState initial{};      // vacuum unless overridden
};

namespace detail {

struct Rates {
  double damping;  // S - R
  double drive;    // U - V + epsilon
  double pair;     // epsilon - 2V
  double R;
  double lambda_minus;
  double lambda_plus;
};

inline Rates rates(const SystemParams& p) {
  const Coefficients c = coefficients(p);
  return {c.S - c.R, c.U - c.V + p.epsilon, p.epsilon - 2.0 * c.V, c.R, c.lambda_minus,
          c.lambda_plus};
}

inline MomentState derivative(const MomentState& s, const Rates& r) {
  MomentState d;
  d.mean_alpha = -r.damping * s.mean_alpha + r.drive * std::conj(s.mean_alpha);
  d.alpha_sq = -2.0 * r.damping * s.alpha_sq + 2.0 * r.drive * s.n_cl + r.pair;
  d.n_cl = -2.0 * r.damping * s.n_cl + r.drive * 2.0 * s.alpha_sq.real() + 2.0 * r.R;
  d.flow_plus = -2.0 * r.lambda_minus * s.flow_plus + 2.0 * (r.pair + 2.0 * r.R);
  d.flow_minus = -2.0 * r.lambda_plus * s.flow_minus + 2.0 * (r.pair - 2.0 * r.R);
  return d;
}

inline MomentState axpy(const MomentState& s, double h, const MomentState& k) {
  MomentState o;
  o.mean_alpha = s.mean_alpha + h * k.mean_alpha;
  o.alpha_sq = s.alpha_sq + h * k.alpha_sq;
  o.n_cl = s.n_cl + h * k.n_cl;
  o.flow_plus = s.flow_plus + h * k.flow_plus;
  o.flow_minus = s.flow_minus + h * k.flow_minus;
  return o;
}

inline MomentState rk4_step(const MomentState& s, double h, const Rates& r) {
  const MomentState k1 = derivative(s, r);
  const MomentState k2 = derivative(axpy(s, 0.5 * h, k1), r);
  const MomentState k3 = derivative(axpy(s, 0.5 * h, k2), r);
  const MomentState k4 = derivative(axpy(s, h, k3), r);
  MomentState o = s;
  o.mean_alpha += h / 6.0 * (k1.mean_alpha + 2.0 * k2.mean_alpha + 2.0 * k3.mean_alpha + k4.mean_alpha);
  o.alpha_sq += h / 6.0 * (k1.alpha_sq + 2.0 * k2.alpha_sq + 2.0 * k3.alpha_sq + k4.alpha_sq);
  o.n_cl += h / 6.0 * (k1.n_cl + 2.0 * k2.n_cl + 2.0 * k3.n_cl + k4.n_cl);
  o.flow_plus += h / 6.0 * (k1.flow_plus + 2.0 * k2.flow_plus + 2.0 * k3.flow_plus + k4.flow_plus);
  o.flow_minus += h / 6.0 * (k1.flow_minus + 2.0 * k2.flow_minus + 2.0 * k3.flow_minus + k4.flow_minus);
  o.t = s.t + h;
  return o;
}

/// Integrates from `start` over [0, t_end] with `steps` equal RK4 steps and
/// records the state at `samples` evenly spaced step indices.
inline std::vector<MomentState> integrate(const MomentState& start, const Rates& r, double t_end,
                                          long steps, int samples) {
  std::vector<MomentState> out;
  out.reserve(static_cast<std::size_t>(samples));
  const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
  MomentState s = start;
  s.t = 0.0;
  int next = 0;
  auto sample_step = [&](int k) {
    return samples <= 1 ? steps : static_cast<long>(std::llround(static_cast<double>(k) * steps / (samples - 1)));
  };
  for (long i = 0; i <= steps; ++i) {
    while (next < samples && sample_step(next) == i) {
      MomentState rec = s;
      rec.t = static_cast<double>(i) * h;
      out.push_back(rec);
      ++next;
    }
    if (i < steps) s = rk4_step(s, h, r);
  }
  return out;
}

inline double state_distance(const MomentState& a, const MomentState& b) {
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };
  double d = 0.0;
  d = std::max(d, rel(a.n_cl, b.n_cl));
  d = std::max(d, std::abs(a.alpha_sq - b.alpha_sq) / std::max(1.0, std::abs(b.alpha_sq)));
  d = std::max(d, std::abs(a.mean_alpha - b.mean_alpha) / std::max(1.0, std::abs(b.mean_alpha)));
  d = std::max(d, rel(a.flow_plus, b.flow_plus));
  d = std::max(d, rel(a.flow_minus, b.flow_minus));
  return d;
}

}  // namespace detail

inline double max_step(const SystemParams& p) {
  const Coefficients c = coefficients(p);
  return 0.01 / std::max({c.lambda_plus, std::abs(c.lambda_minus), 1.0});
}

/// RK4 propagation of the moment equations from vacuum (or opts.initial).
/// The run is repeated at dt/2 and the final states compared; a mismatch
/// above opts.halving_tol raises an accuracy error.
inline std::vector<MomentState> propagate(const SystemParams& p, double t_end, double dt,
                                          const PropagateOptions& opts = {}) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorKind::invalid_parameter, "t_end must be finite and >= 0");
  }
  if (!(dt > 0.0)) throw Error(ErrorKind::invalid_parameter, "dt must be > 0");
  if (opts.samples < 1) throw Error(ErrorKind::invalid_parameter, "samples must be >= 1");
  const double bound = max_step(p);
  if (dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt=" << dt << " exceeds 0.01/max(lambda_plus,|lambda_minus|,1)=" << bound;
    throw Error(ErrorKind::accuracy, os.str());
  }
  const detail::Rates r = detail::rates(p);
  const long steps = std::max(1L, static_cast<long>(std::ceil(t_end / dt - 1e-9)));
  auto series = detail::integrate(opts.initial, r, t_end, steps, opts.samples);
  const auto fine = detail::integrate(opts.initial, r, t_end, 2 * steps, 1);
  const double err = detail::state_distance(series.back(), fine.back());
  if (err > opts.halving_tol) {
    std::ostringstream os;
    os << "step-halving discrepancy " << err << " exceeds " << opts.halving_tol;
    throw Error(ErrorKind::accuracy, os.str());
  }
  return series;
}

/// Stationary (Re<alpha^2>, Im<alpha^2>, <alpha* alpha>) from the 3x3 linear
/// system obtained by zeroing the time derivatives.
inline MomentState steady_from_linear_solve(const SystemParams& p) {
  require_stable(p, "steady_from_linear_solve");
  const detail::Rates r = detail::rates(p);
  Eigen::Matrix3d m;
  m << -2.0 * r.damping, 0.0, 2.0 * r.drive,
       0.0, -2.0 * r.damping, 0.0,
       2.0 * r.drive, 0.0, -2.0 * r.damping;
  const Eigen::Vector3d rhs(-r.pair, 0.0, -2.0 * r.R);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) throw Error(ErrorKind::not_stable, "moment system singular");
  const Eigen::Vector3d x = lu.solve(rhs);
  MomentState s;
  s.t = std::numeric_limits<double>::infinity();
  s.alpha_sq = {x(0), x(1)};
  s.n_cl = x(2);
  s.flow_plus = s.reconstructed_plus();
  s.flow_minus = s.reconstructed_minus();
  return s;
}

}  // namespace cascade::moments
