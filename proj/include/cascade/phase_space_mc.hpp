#pragma once

// Doubled-phase-space Monte Carlo for the linear c-number Langevin equation
//
//   d alpha  = [-(S-R) alpha  + (U-V+eps) alpha+] dt + dW
//   d alpha+ = [-(S-R) alpha+ + (U-V+eps) alpha ] dt + dW+
//
// where alpha+ stands in for alpha* inside averages. The normally ordered
// diffusion matrix [[eps-2V, 2R], [2R, eps-2V]] is not positive in the
// squeezed regime, so the two noises are built from a complex square-root
// factorization along the eigenvectors (1, +/-1)/sqrt(2).
//
// Every trajectory owns an RNG stream seeded from (seed, trajectory index),
// and partial sums are reduced in a fixed chunk order, so results do not
// depend on the number of worker threads.

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "cascade/detail/numerics.hpp"
#include "cascade/error.hpp"
#include "cascade/params.hpp"

namespace cascade::mc {

using cplx = std::complex<double>;

struct NoiseFactorization {
  cplx amp_plus;   // sqrt((eps - 2V + 2R)/2)
  cplx amp_minus;  // sqrt((eps - 2V - 2R)/2), imaginary when the radicand is negative
};

inline NoiseFactorization factor_noise(const Coefficients& c, double epsilon) {
  const double pair = epsilon - 2.0 * c.V;
  return {std::sqrt(cplx(0.5 * (pair + 2.0 * c.R), 0.0)), std::sqrt(cplx(0.5 * (pair - 2.0 * c.R), 0.0))};
}

/// Per-trajectory normal deviates (ziggurat sampler over mt19937_64).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

struct Increment {
  cplx d_alpha;
  cplx d_alpha_plus;
};

/// One Wiener increment pair for a step of length dt (sqrt_dt = sqrt(dt)).
inline Increment draw_increment(NoiseStream& stream, const NoiseFactorization& nf, double sqrt_dt) {
  const double xi1 = stream.normal();
  const double xi2 = stream.normal();
  const cplx common = nf.amp_plus * (xi1 * sqrt_dt);
  const cplx diff = nf.amp_minus * (xi2 * sqrt_dt);
  return {common + diff, common - diff};
}

class TrajectoryEnsemble {
 public:
  /// Trajectories first_index .. first_index + n_traj - 1, all at vacuum.
  TrajectoryEnsemble(std::uint64_t seed, std::uint64_t first_index, std::size_t n_traj, double dt)
      : seed_(seed), first_index_(first_index), dt_(dt), alpha_(n_traj), alpha_plus_(n_traj) {
    if (!(dt > 0.0)) throw Error(ErrorKind::invalid_parameter, "dt must be > 0");
    streams_.reserve(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) streams_.emplace_back(seed, first_index + i);
  }

  std::size_t size() const { return alpha_.size(); }
  double dt() const { return dt_; }
  double time() const { return t_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t first_index() const { return first_index_; }

  std::span<const cplx> alpha() const { return alpha_; }
  std::span<const cplx> alpha_plus() const { return alpha_plus_; }
  std::span<cplx> alpha() { return alpha_; }
  std::span<cplx> alpha_plus() { return alpha_plus_; }

  friend void step(TrajectoryEnsemble& ens, const Coefficients& c, double epsilon, const NoiseFactorization& nf,
                   bool with_noise);

 private:
  std::uint64_t seed_;
  std::uint64_t first_index_;
  double dt_;
  double t_ = 0.0;
  std::vector<cplx> alpha_;
  std::vector<cplx> alpha_plus_;
  std::vector<NoiseStream> streams_;
};

inline void check_step_size(const Coefficients& c, double dt) {
  const double rate = std::max(c.lambda_plus, std::abs(c.lambda_minus));
  if (!(dt * rate < 0.05)) {
    std::ostringstream os;
    os << "dt * max(lambda_plus, |lambda_minus|) = " << dt * rate << " must be < 0.05";
    throw Error(ErrorKind::step_too_large, os.str());
  }
}

/// Euler-Maruyama step of every trajectory. with_noise = false gives the
/// bare drift (used to check the deterministic eigenstructure).
inline void step(TrajectoryEnsemble& ens, const Coefficients& c, double epsilon, const NoiseFactorization& nf,
                 bool with_noise = true) {
  check_step_size(c, ens.dt_);
  const double damping = c.S - c.R;
  const double drive = c.U - c.V + epsilon;
  const double dt = ens.dt_;
  const double sqrt_dt = std::sqrt(dt);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const cplx a = ens.alpha_[i];
    const cplx ap = ens.alpha_plus_[i];
    cplx da = (-damping * a + drive * ap) * dt;
    cplx dap = (-damping * ap + drive * a) * dt;
    if (with_noise) {
      const Increment inc = draw_increment(ens.streams_[i], nf, sqrt_dt);
      da += inc.d_alpha;
      dap += inc.d_alpha_plus;
    }
    ens.alpha_[i] = a + da;
    ens.alpha_plus_[i] = ap + dap;
  }
  ens.t_ += dt;
}

// ---------------------------------------------------------------------------
// Ensemble moments

struct ComplexEstimate {
  cplx mean{};
  double se_re = 0.0;
  double se_im = 0.0;
};

struct MomentSample {
  double t = 0.0;
  ComplexEstimate mean_alpha;       // <alpha>
  ComplexEstimate mean_alpha_plus;  // <alpha+>
  ComplexEstimate alpha_sq;         // <alpha alpha>
  ComplexEstimate n_cl;             // <alpha+ alpha>
  ComplexEstimate plus_sq;          // <(alpha+ + alpha)^2>
  ComplexEstimate minus_sq;         // <(alpha+ - alpha)^2>
};

struct MomentSeries {
  std::vector<MomentSample> samples;
  long n_traj = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

struct RunOptions {
  int samples = 101;
  int jobs = cascade::detail::default_jobs();
  std::size_t chunk = 1000;
  double blowup = 1e6;
};

namespace detail {

inline constexpr int kQuantities = 6;

struct ComplexAccumulator {
  cascade::detail::MeanAccumulator re;
  cascade::detail::MeanAccumulator im;
  void add(cplx z) {
    re.add(z.real());
    im.add(z.imag());
  }
  void merge(const ComplexAccumulator& o) {
    re.merge(o.re);
    im.merge(o.im);
  }
  ComplexEstimate estimate() const { return {{re.mean(), im.mean()}, re.standard_error(), im.standard_error()}; }
};

inline long sample_step(int k, int samples, long steps) {
  if (samples <= 1) return steps;
  return static_cast<long>(std::llround(static_cast<double>(k) * static_cast<double>(steps) / (samples - 1)));
}

[[noreturn]] inline void throw_blowup(const SystemParams& p, double t, double dt, double magnitude) {
  std::ostringstream os;
  os << "trajectory magnitude " << magnitude << " at t=" << t << " (dt=" << dt << ", A=" << p.A
     << ", kappa=" << p.kappa << ", beta=" << p.beta << ", epsilon=" << p.epsilon << ")";
  throw Error(ErrorKind::blowup, os.str());
}

}  // namespace detail

/// Ensemble moments at `samples` evenly spaced times in [0, t_end]. Output
/// is bitwise reproducible for fixed (seed, n_traj, dt, t_end, chunk).
inline MomentSeries run(const SystemParams& p, long n_traj, double t_end, double dt, std::uint64_t seed,
                        const RunOptions& opts = {}) {
  require_stable(p, "phase-space run");
  if (n_traj < 1) throw Error(ErrorKind::invalid_parameter, "n_traj must be >= 1");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::invalid_parameter, "t_end must be >= 0");
  if (opts.samples < 1 || opts.chunk < 1) throw Error(ErrorKind::invalid_parameter, "samples and chunk must be >= 1");
  const Coefficients c = coefficients(p);
  check_step_size(c, dt);
  const NoiseFactorization nf = factor_noise(c, p.epsilon);
  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  const std::size_t n_chunks = (static_cast<std::size_t>(n_traj) + opts.chunk - 1) / opts.chunk;
  const std::size_t n_samples = static_cast<std::size_t>(opts.samples);

  using Acc = std::vector<detail::ComplexAccumulator>;  // [sample * kQuantities + q]
  std::vector<Acc> partial(n_chunks, Acc(n_samples * detail::kQuantities));

  cascade::detail::parallel_for(n_chunks, opts.jobs, [&](std::size_t ci) {
    const std::size_t first = ci * opts.chunk;
    const std::size_t count = std::min<std::size_t>(opts.chunk, static_cast<std::size_t>(n_traj) - first);
    Acc& acc = partial[ci];
    const double limit2 = opts.blowup * opts.blowup;
    // one trajectory at a time keeps its generator state in cache; the
    // per-sample accumulation order is still trajectory order
    for (std::size_t i = 0; i < count; ++i) {
      TrajectoryEnsemble ens(seed, first + i, 1, dt);
      int next = 0;
      for (long s = 0; s <= steps; ++s) {
        const cplx a = ens.alpha()[0];
        const cplx ap = ens.alpha_plus()[0];
        while (next < opts.samples && detail::sample_step(next, opts.samples, steps) == s) {
          auto* slot = &acc[static_cast<std::size_t>(next) * detail::kQuantities];
          const cplx sum = ap + a;
          const cplx dif = ap - a;
          slot[0].add(a);
          slot[1].add(ap);
          slot[2].add(a * a);
          slot[3].add(ap * a);
          slot[4].add(sum * sum);
          slot[5].add(dif * dif);
          ++next;
        }
        if (s == steps) break;
        step(ens, c, p.epsilon, nf);
        const cplx na = ens.alpha()[0];
        const cplx nap = ens.alpha_plus()[0];
        // squared moduli avoid hypot in the hot loop; NaN fails the test too
        if (!(std::max(std::norm(na), std::norm(nap)) <= limit2)) {
          detail::throw_blowup(p, ens.time(), dt, std::max(std::abs(na), std::abs(nap)));
        }
      }
    }
  });

  Acc total(n_samples * detail::kQuantities);
  for (const Acc& part : partial) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k].merge(part[k]);
  }

  MomentSeries out;
  out.n_traj = n_traj;
  out.dt = dt;
  out.seed = seed;
  out.samples.resize(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    MomentSample& m = out.samples[k];
    m.t = static_cast<double>(detail::sample_step(static_cast<int>(k), opts.samples, steps)) * dt;
    const auto* slot = &total[k * detail::kQuantities];
    m.mean_alpha = slot[0].estimate();
    m.mean_alpha_plus = slot[1].estimate();
    m.alpha_sq = slot[2].estimate();
    m.n_cl = slot[3].estimate();
    m.plus_sq = slot[4].estimate();
    m.minus_sq = slot[5].estimate();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise statistics

struct NoiseStatistics {
  long samples = 0;
  ComplexEstimate mean_d_alpha;          // -> 0
  ComplexEstimate alpha_alpha;           // <dW dW>   -> (eps - 2V) dt
  ComplexEstimate alpha_plus_alpha_plus; // <dW+ dW+> -> (eps - 2V) dt
  ComplexEstimate alpha_alpha_plus;      // <dW dW+>  -> 2R dt
};

/// Sample moments of `samples` increments drawn exactly as step() draws them.
inline NoiseStatistics noise_increment_statistics(const NoiseFactorization& nf, double dt, long samples,
                                                  std::uint64_t seed) {
  if (samples < 2) throw Error(ErrorKind::invalid_parameter, "need at least two samples");
  NoiseStream stream(seed, 0);
  const double sqrt_dt = std::sqrt(dt);
  detail::ComplexAccumulator mean, aa, pp, ap;
  for (long i = 0; i < samples; ++i) {
    const Increment inc = draw_increment(stream, nf, sqrt_dt);
    mean.add(inc.d_alpha);
    aa.add(inc.d_alpha * inc.d_alpha);
    pp.add(inc.d_alpha_plus * inc.d_alpha_plus);
    ap.add(inc.d_alpha * inc.d_alpha_plus);
  }
  return {samples, mean.estimate(), aa.estimate(), pp.estimate(), ap.estimate()};
}

// ---------------------------------------------------------------------------
// Stationary two-time correlations

struct CorrelationOptions {
  long n_traj = 20000;
  double dt = 0.002;
  std::uint64_t seed = 1;
  double t_burn = 0.0;          // 0 selects 10 / lambda_minus
  double window = 40.0;         // span of time origins after burn-in
  double origin_spacing = 0.5;  // distance between time origins
  int batches = 32;
  int jobs = cascade::detail::default_jobs();
  double blowup = 1e6;
};

/// <alpha_{+/-}(t) alpha_{+/-}(t+tau)> in the stationary state, averaged over
/// time origins within each trajectory and over trajectories. Standard
/// errors come from the spread of equal-size trajectory batches.
struct CorrelationEstimate {
  std::vector<double> tau_grid;
  std::vector<double> corr_plus;
  std::vector<double> corr_minus;
  std::vector<double> se_plus;
  std::vector<double> se_minus;
  std::vector<std::vector<double>> batch_plus;   // [batch][lag]
  std::vector<std::vector<double>> batch_minus;
};

inline CorrelationEstimate two_time_correlation(const SystemParams& p, std::span<const double> tau_grid,
                                                const CorrelationOptions& opts = {}) {
  require_stable(p, "two_time_correlation");
  const Coefficients c = coefficients(p);
  check_step_size(c, opts.dt);
  if (tau_grid.empty()) throw Error(ErrorKind::invalid_parameter, "empty tau grid");
  if (opts.batches < 2 || opts.n_traj < opts.batches) {
    throw Error(ErrorKind::invalid_parameter, "need batches >= 2 and n_traj >= batches");
  }
  const double min_burn = 10.0 / c.lambda_minus;
  const double t_burn = opts.t_burn > 0.0 ? opts.t_burn : min_burn;
  if (t_burn < min_burn * (1.0 - 1e-12)) {
    throw Error(ErrorKind::invalid_parameter, "t_burn must be >= 10 / lambda_minus");
  }

  const double dt = opts.dt;
  std::vector<long> lags;
  lags.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const long k = std::lround(tau / dt);
    if (tau < 0.0 || std::abs(static_cast<double>(k) * dt - tau) > 1e-9 * std::max(1.0, tau)) {
      throw Error(ErrorKind::invalid_parameter, "tau grid values must be non-negative multiples of dt");
    }
    lags.push_back(k);
  }
  const long max_lag = *std::max_element(lags.begin(), lags.end());
  const long burn_steps = static_cast<long>(std::ceil(t_burn / dt));
  const long origin_stride = std::max(1L, std::lround(opts.origin_spacing / dt));
  const long origin_span = std::max(0L, std::lround(opts.window / dt));
  const long n_origins = origin_span / origin_stride + 1;
  const long record_steps = (n_origins - 1) * origin_stride + max_lag;

  const NoiseFactorization nf = factor_noise(c, p.epsilon);
  const std::size_t n_lags = lags.size();
  const std::size_t batches = static_cast<std::size_t>(opts.batches);
  CorrelationEstimate out;
  out.tau_grid.assign(tau_grid.begin(), tau_grid.end());
  out.batch_plus.assign(batches, std::vector<double>(n_lags, 0.0));
  out.batch_minus.assign(batches, std::vector<double>(n_lags, 0.0));

  cascade::detail::parallel_for(batches, opts.jobs, [&](std::size_t b) {
    const std::size_t first = b * static_cast<std::size_t>(opts.n_traj) / batches;
    const std::size_t last = (b + 1) * static_cast<std::size_t>(opts.n_traj) / batches;
    std::vector<cascade::detail::CompensatedSum> sum_plus(n_lags), sum_minus(n_lags);
    std::vector<cplx> rec_plus(static_cast<std::size_t>(record_steps) + 1);
    std::vector<cplx> rec_minus(static_cast<std::size_t>(record_steps) + 1);
    for (std::size_t traj = first; traj < last; ++traj) {
      TrajectoryEnsemble ens(opts.seed, traj, 1, dt);
      for (long s = 0; s < burn_steps; ++s) step(ens, c, p.epsilon, nf);
      for (long s = 0; s <= record_steps; ++s) {
        const cplx a = ens.alpha()[0];
        const cplx ap = ens.alpha_plus()[0];
        const double mag = std::max(std::abs(a), std::abs(ap));
        if (!(mag <= opts.blowup)) detail::throw_blowup(p, ens.time(), dt, mag);
        rec_plus[static_cast<std::size_t>(s)] = ap + a;
        rec_minus[static_cast<std::size_t>(s)] = ap - a;
        if (s < record_steps) step(ens, c, p.epsilon, nf);
      }
      for (std::size_t j = 0; j < n_lags; ++j) {
        double acc_p = 0.0;
        double acc_m = 0.0;
        for (long o = 0; o < n_origins; ++o) {
          const std::size_t t0 = static_cast<std::size_t>(o * origin_stride);
          const std::size_t t1 = t0 + static_cast<std::size_t>(lags[j]);
          acc_p += (rec_plus[t0] * rec_plus[t1]).real();
          acc_m += (rec_minus[t0] * rec_minus[t1]).real();
        }
        sum_plus[j].add(acc_p / static_cast<double>(n_origins));
        sum_minus[j].add(acc_m / static_cast<double>(n_origins));
      }
    }
    const double count = static_cast<double>(last - first);
    for (std::size_t j = 0; j < n_lags; ++j) {
      out.batch_plus[b][j] = sum_plus[j].value() / count;
      out.batch_minus[b][j] = sum_minus[j].value() / count;
    }
  });

  auto summarize = [&](const std::vector<std::vector<double>>& per_batch, std::vector<double>& mean,
                       std::vector<double>& se) {
    mean.assign(n_lags, 0.0);
    se.assign(n_lags, 0.0);
    for (std::size_t j = 0; j < n_lags; ++j) {
      cascade::detail::MeanAccumulator acc;
      for (std::size_t b = 0; b < batches; ++b) acc.add(per_batch[b][j]);
      mean[j] = acc.mean();
      se[j] = acc.standard_error();
    }
  };
  summarize(out.batch_plus, out.corr_plus, out.se_plus);
  summarize(out.batch_minus, out.corr_minus, out.se_minus);
  return out;
}

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

enum class Quadrature { plus, minus };

namespace detail {

inline const std::vector<std::vector<double>>& batches_of(const CorrelationEstimate& e, Quadrature q) {
  return q == Quadrature::plus ? e.batch_plus : e.batch_minus;
}

/// Least-squares slope of log |C(tau)| over tau <= tau_fit, negated. Points
/// whose sign differs from C(0) are skipped.
inline double fitted_rate(std::span<const double> tau, std::span<const double> corr, double tau_fit) {
  const double sign = corr.empty() || corr[0] >= 0.0 ? 1.0 : -1.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t j = 0; j < tau.size(); ++j) {
    if (tau[j] > tau_fit || !(sign * corr[j] > 0.0)) continue;
    const double y = std::log(sign * corr[j]);
    sx += tau[j];
    sy += y;
    sxx += tau[j] * tau[j];
    sxy += tau[j] * y;
    ++n;
  }
  if (n < 2) throw Error(ErrorKind::invalid_parameter, "too few same-sign correlation points to fit a decay");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

inline Estimate batch_estimate(const std::vector<double>& values) {
  cascade::detail::MeanAccumulator acc;
  for (double v : values) acc.add(v);
  return {acc.mean(), acc.standard_error()};
}

}  // namespace detail

/// Exponential decay rate of the stationary correlation of one quadrature,
/// fitted per batch over tau <= tau_fit.
inline Estimate fit_decay(const CorrelationEstimate& e, Quadrature q, double tau_fit) {
  std::vector<double> rates;
  for (const auto& curve : detail::batches_of(e, q)) rates.push_back(detail::fitted_rate(e.tau_grid, curve, tau_fit));
  return detail::batch_estimate(rates);
}

/// Output squeezing spectrum 1 +/- 2 kappa Re int_0^inf C(tau) e^{i omega tau}
/// dtau from the sampled correlation: trapezoid rule on the tau grid (which
/// must be uniform and start at 0) plus an exponential tail beyond the last
/// point, using the per-batch decay fitted over tau <= tau_fit.
inline Estimate integrated_spectrum(const CorrelationEstimate& e, Quadrature q, double kappa, double omega,
                                    double tau_fit) {
  const auto& tau = e.tau_grid;
  if (tau.size() < 3 || tau.front() != 0.0) {
    throw Error(ErrorKind::invalid_parameter, "spectrum quadrature needs a uniform tau grid starting at 0");
  }
  const double h = tau[1] - tau[0];
  for (std::size_t j = 1; j < tau.size(); ++j) {
    if (std::abs(tau[j] - tau[j - 1] - h) > 1e-9 * std::max(1.0, h)) {
      throw Error(ErrorKind::invalid_parameter, "spectrum quadrature needs a uniform tau grid");
    }
  }
  const double sign = q == Quadrature::plus ? 1.0 : -1.0;
  std::vector<double> values;
  for (const auto& curve : detail::batches_of(e, q)) {
    double integral = 0.0;
    for (std::size_t j = 0; j < tau.size(); ++j) {
      const double w = (j == 0 || j + 1 == tau.size()) ? 0.5 * h : h;
      integral += w * curve[j] * std::cos(omega * tau[j]);
    }
    const double rate = detail::fitted_rate(tau, curve, tau_fit);
    const double t_last = tau.back();
    // int_{t_last}^inf C(t_last) e^{-rate (t - t_last)} cos(omega t) dt
    const cplx tail = std::exp(cplx(0.0, omega * t_last)) / cplx(rate, -omega);
    integral += curve.back() * tail.real();
    values.push_back(1.0 + sign * 2.0 * kappa * integral);
  }
  return detail::batch_estimate(values);
}

}  // namespace cascade::mc
