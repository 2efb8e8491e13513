#pragma once

// Truncated-Fock master-equation oracle. The cavity density matrix is
// propagated under the full generator (two-photon drive, gain/loss
// sandwiches and the anomalous U/V terms) with truncated ladder operators,
// a|n> = sqrt(n)|n-1>, and observables are read off by traces.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "cascade/error.hpp"
#include "cascade/params.hpp"

namespace cascade::oracle {

using cplx = std::complex<double>;

class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(int dim) : data_(Eigen::MatrixXcd::Zero(dim, dim)) {}
  explicit DensityMatrix(Eigen::MatrixXcd data) : data_(std::move(data)) {}

  static DensityMatrix vacuum(int dim) {
    DensityMatrix rho(dim);
    rho.data_(0, 0) = 1.0;
    return rho;
  }

  /// |n><n|
  static DensityMatrix number_state(int dim, int n) {
    DensityMatrix rho(dim);
    rho.data_(n, n) = 1.0;
    return rho;
  }

  int dim() const { return static_cast<int>(data_.rows()); }
  const Eigen::MatrixXcd& data() const { return data_; }
  Eigen::MatrixXcd& data() { return data_; }
  cplx operator()(int m, int n) const { return data_(m, n); }
  cplx& operator()(int m, int n) { return data_(m, n); }

  cplx trace() const { return data_.trace(); }

  void hermitize() {
    const Eigen::MatrixXcd adj = data_.adjoint();
    data_ = 0.5 * (data_ + adj);
  }

  double hermiticity_error() const { return (data_ - data_.adjoint()).cwiseAbs().maxCoeff(); }

  /// Entrywise 1-norm.
  double l1_norm() const { return data_.cwiseAbs().sum(); }

 private:
  Eigen::MatrixXcd data_;
};

/// Generator weights: (d rho/dt)_{mn} = sum over terms w * rho_{m',n'}.
/// Calls emit(m', n', w) for every in-range contribution.
template <typename Emit>
void generator_row(int m, int n, int dim, const Coefficients& c, double epsilon, Emit&& emit) {
  const double md = m;
  const double nd = n;
  const double half_e = 0.5 * epsilon;
  const double uv = c.U + c.V;
  // truncated a a^dagger is diag(1, 2, ..., dim-1, 0)
  auto aad = [dim](int j) { return j < dim - 1 ? static_cast<double>(j + 1) : 0.0; };

  emit(m, n, -c.R * (aad(m) + aad(n)) - c.S * (md + nd));
  if (m >= 1 && n >= 1) emit(m - 1, n - 1, 2.0 * c.R * std::sqrt(md * nd));
  if (m + 1 < dim && n + 1 < dim) emit(m + 1, n + 1, 2.0 * c.S * std::sqrt((md + 1.0) * (nd + 1.0)));
  if (m >= 1 && n + 1 < dim) emit(m - 1, n + 1, uv * std::sqrt(md * (nd + 1.0)));
  if (m + 1 < dim && n >= 1) emit(m + 1, n - 1, uv * std::sqrt((md + 1.0) * nd));
  if (n + 2 < dim) emit(m, n + 2, -(half_e + c.U) * std::sqrt((nd + 1.0) * (nd + 2.0)));
  if (m + 2 < dim) emit(m + 2, n, -(half_e + c.U) * std::sqrt((md + 1.0) * (md + 2.0)));
  if (n >= 2) emit(m, n - 2, (half_e - c.V) * std::sqrt(nd * (nd - 1.0)));
  if (m >= 2) emit(m - 2, n, (half_e - c.V) * std::sqrt(md * (md - 1.0)));
}

/// Right-hand side of the cavity master equation.
inline DensityMatrix apply_generator(const DensityMatrix& rho, const Coefficients& c, double epsilon) {
  const int dim = rho.dim();
  if (dim < 2) throw Error(ErrorKind::invalid_parameter, "dimension must be >= 2");
  const Eigen::MatrixXcd& r = rho.data();
  DensityMatrix out(dim);
  Eigen::MatrixXcd& o = out.data();
  for (int n = 0; n < dim; ++n) {
    for (int m = 0; m < dim; ++m) {
      cplx acc{};
      generator_row(m, n, dim, c, epsilon, [&](int mm, int nn, double w) { acc += w * r(mm, nn); });
      o(m, n) = acc;
    }
  }
  return out;
}

/// Gershgorin bound on the generator's spectral radius.
inline double generator_radius_bound(int dim, const Coefficients& c, double epsilon) {
  double bound = 0.0;
  for (int n = 0; n < dim; ++n) {
    for (int m = 0; m < dim; ++m) {
      double row = 0.0;
      generator_row(m, n, dim, c, epsilon, [&](int, int, double w) { row += std::abs(w); });
      bound = std::max(bound, row);
    }
  }
  return bound;
}

struct EvolveOptions {
  double boundary_tol = 1e-6;
  double trace_tol = 1e-4;
  /// Called at t = 0 and after every `observe_every` steps.
  std::function<void(double, const DensityMatrix&)> observer;
  long observe_every = 0;
};

struct EvolveResult {
  DensityMatrix rho;
  double trace_err = 0.0;
  double boundary_population = 0.0;  // max of rho_{N-1,N-1} over the run
  long steps = 0;
};

/// Relative distance below threshold inside which evolution is refused.
inline constexpr double kThresholdMargin = 1e-3;

inline double max_step(const SystemParams& p) {
  const Coefficients c = coefficients(p);
  return 0.01 / std::max({c.lambda_plus, p.kappa, p.A});
}

/// Classical RK4 propagation of rho0 to t_end. The state is hermitized after
/// each step; trace drift and the population of the top Fock level are
/// monitored.
inline EvolveResult evolve(const DensityMatrix& rho0, const SystemParams& p, double t_end, double dt,
                           const EvolveOptions& opts = {}) {
  const int dim = rho0.dim();
  if (dim < 2) throw Error(ErrorKind::invalid_parameter, "dimension must be >= 2");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::invalid_parameter, "t_end must be >= 0");
  if (!(dt > 0.0)) throw Error(ErrorKind::invalid_parameter, "dt must be > 0");
  const Coefficients c = coefficients(p);
  const double eps = p.epsilon;
  // The threshold itself and the band just below it are refused: there the
  // state grows without bound and no finite truncation is meaningful.
  const double eps_th = threshold_epsilon(p);
  if (stability(p) == Stability::at_threshold ||
      (stability(p) == Stability::stable && eps_th > 0.0 && eps > (1.0 - kThresholdMargin) * eps_th)) {
    std::ostringstream os;
    os << "epsilon=" << eps << " is within " << kThresholdMargin << " of the threshold " << eps_th
       << "; use epsilon <= " << (1.0 - kThresholdMargin) * eps_th;
    throw Error(ErrorKind::not_stable, os.str());
  }
  {
    const double limit = max_step(p);
    const double radius = generator_radius_bound(dim, c, eps);
    // 2.78 is the real-axis extent of the RK4 stability region.
    if (dt > limit * (1.0 + 1e-12) || dt * radius > 2.5) {
      std::ostringstream os;
      os << "dt=" << dt << " too large (bound " << limit << ", generator radius " << radius
         << " needs dt < " << 2.5 / radius << ")";
      throw Error(ErrorKind::step_too_large, os.str());
    }
  }

  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
  EvolveResult res{rho0, 0.0, 0.0, steps};
  DensityMatrix& rho = res.rho;
  const cplx tr0 = rho0.trace();
  res.boundary_population = std::abs(rho(dim - 1, dim - 1).real());
  if (opts.observer) opts.observer(0.0, rho);

  for (long i = 0; i < steps; ++i) {
    const DensityMatrix k1 = apply_generator(rho, c, eps);
    const DensityMatrix k2 = apply_generator(DensityMatrix(rho.data() + 0.5 * h * k1.data()), c, eps);
    const DensityMatrix k3 = apply_generator(DensityMatrix(rho.data() + 0.5 * h * k2.data()), c, eps);
    const DensityMatrix k4 = apply_generator(DensityMatrix(rho.data() + h * k3.data()), c, eps);
    rho.data() += (h / 6.0) * (k1.data() + 2.0 * k2.data() + 2.0 * k3.data() + k4.data());
    rho.hermitize();
    res.boundary_population = std::max(res.boundary_population, std::abs(rho(dim - 1, dim - 1).real()));
    if (opts.observer && opts.observe_every > 0 && (i + 1) % opts.observe_every == 0) {
      opts.observer(static_cast<double>(i + 1) * h, rho);
    }
  }
  res.trace_err = std::abs(rho.trace() - tr0);
  if (res.boundary_population > opts.boundary_tol) {
    std::ostringstream os;
    os << "top Fock level population " << res.boundary_population << " exceeds " << opts.boundary_tol
       << " at dim=" << dim << "; try dim=" << 2 * dim;
    throw Error(ErrorKind::truncation_too_small, os.str());
  }
  if (res.trace_err > opts.trace_tol) {
    std::ostringstream os;
    os << "trace drift " << res.trace_err << " exceeds " << opts.trace_tol << "; reduce dt";
    throw Error(ErrorKind::step_too_large, os.str());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Stationary state

struct SteadyOptions {
  double residual_tol = 1e-10;  // ||L rho||_1 / ||rho||_1
  double boundary_tol = 1e-6;
  int refinement_steps = 3;
};

struct SteadyResult {
  DensityMatrix rho;
  double residual = 0.0;  // ||L rho||_1 / ||rho||_1
  double boundary_population = 0.0;
};

namespace detail {

/// Index map for the real symmetric, even-(m-n) block that contains the
/// stationary state: entries (m, n) with m <= n and n - m even.
class EvenSymmetricIndex {
 public:
  explicit EvenSymmetricIndex(int dim) : offset_(static_cast<std::size_t>(dim) + 1, 0) {
    for (int n = 0; n < dim; ++n) offset_[n + 1] = offset_[n] + n / 2 + 1;
  }
  int size() const { return offset_.back(); }
  int operator()(int m, int n) const {
    if (m > n) std::swap(m, n);
    return offset_[n] + (m - (n % 2)) / 2;
  }

 private:
  std::vector<int> offset_;
};

}  // namespace detail

/// Stationary density matrix of the truncated generator.
///
/// The generator has real coefficients, maps the real symmetric matrices to
/// themselves and never mixes even and odd m - n. Its unique trace-one
/// null vector therefore lives in the real symmetric, even-(m-n) block, and
/// it is found there by a sparse LU solve (UMFPACK) with the (0,0) equation replaced
/// by the trace condition. The result is checked against the full complex
/// generator.
inline SteadyResult steady_state(const SystemParams& p, int dim, const SteadyOptions& opts = {}) {
  if (dim < 2) throw Error(ErrorKind::invalid_parameter, "dimension must be >= 2");
  require_stable(p, "steady_state");
  const Coefficients c = coefficients(p);
  const double eps = p.epsilon;
  const detail::EvenSymmetricIndex index(dim);
  const int unknowns = index.size();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(unknowns) * 9);
  for (int n = 0; n < dim; ++n) {
    for (int m = n % 2; m <= n; m += 2) {
      const int row = index(m, n);
      if (row == 0) continue;
      generator_row(m, n, dim, c, eps,
                    [&](int mm, int nn, double w) { triplets.emplace_back(row, index(mm, nn), w); });
    }
  }
  for (int n = 0; n < dim; ++n) triplets.emplace_back(0, index(n, n), 1.0);

  // 64-bit indices and METIS ordering keep the fill of the N ~ 2000 systems
  // within a few GB.
  using SparseLong = Eigen::SparseMatrix<double, Eigen::ColMajor, SuiteSparse_long>;
  SparseLong L(unknowns, unknowns);
  L.setFromTriplets(triplets.begin(), triplets.end());
  L.makeCompressed();
  triplets.clear();
  triplets.shrink_to_fit();

  Eigen::UmfPackLU<SparseLong> lu;
  lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
  lu.compute(L);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorKind::not_converged, "sparse LU factorization failed");
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
  rhs(0) = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);
  for (int i = 0; i < opts.refinement_steps; ++i) {
    const Eigen::VectorXd r = rhs - L * x;
    x += lu.solve(r);
  }

  SteadyResult res{DensityMatrix(dim), 0.0, 0.0};
  Eigen::MatrixXcd& d = res.rho.data();
  for (int n = 0; n < dim; ++n) {
    for (int m = n % 2; m <= n; m += 2) {
      const double v = x(index(m, n));
      d(m, n) = v;
      d(n, m) = v;
    }
  }
  const DensityMatrix drift = apply_generator(res.rho, c, eps);
  res.residual = drift.l1_norm() / res.rho.l1_norm();
  res.boundary_population = std::abs(d(dim - 1, dim - 1).real());
  if (!(res.residual < opts.residual_tol)) {
    std::ostringstream os;
    os << "stationary residual " << res.residual << " above " << opts.residual_tol;
    throw Error(ErrorKind::not_converged, os.str());
  }
  if (res.boundary_population > opts.boundary_tol) {
    std::ostringstream os;
    os << "top Fock level population " << res.boundary_population << " exceeds " << opts.boundary_tol
       << " at dim=" << dim << "; try dim=" << 2 * dim;
    throw Error(ErrorKind::truncation_too_small, os.str());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Observables

struct OracleObservables {
  cplx mean_a{};
  cplx mean_a_sq{};
  double mean_n = 0.0;
  double var_plus = 1.0;
  double var_minus = 1.0;
  std::vector<double> pnd;
  double trace_err = 0.0;
  double min_eig = std::numeric_limits<double>::quiet_NaN();  // filled on request
};

inline double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.data(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline OracleObservables observables(const DensityMatrix& rho, bool with_min_eig = false) {
  const int dim = rho.dim();
  OracleObservables o;
  o.pnd.resize(static_cast<std::size_t>(dim));
  cplx tr{};
  for (int k = 0; k < dim; ++k) {
    const cplx diag = rho(k, k);
    tr += diag;
    o.pnd[k] = diag.real();
    o.mean_n += k * diag.real();
    if (k + 1 < dim) o.mean_a += std::sqrt(k + 1.0) * rho(k + 1, k);
    if (k + 2 < dim) o.mean_a_sq += std::sqrt((k + 1.0) * (k + 2.0)) * rho(k + 2, k);
  }
  o.trace_err = std::abs(tr - 1.0);
  const double q_plus = 2.0 * o.mean_a.real();   // <a + a^dagger>
  const double q_minus = 2.0 * o.mean_a.imag();  // <i(a^dagger - a)>
  o.var_plus = 1.0 + 2.0 * o.mean_n + 2.0 * o.mean_a_sq.real() - q_plus * q_plus;
  o.var_minus = 1.0 + 2.0 * o.mean_n - 2.0 * o.mean_a_sq.real() - q_minus * q_minus;
  if (with_min_eig) o.min_eig = min_eigenvalue(rho);
  return o;
}

/// Husimi density <alpha|rho|alpha>/pi with the coherent state cut at dim.
inline double husimi(const DensityMatrix& rho, cplx alpha) {
  const int dim = rho.dim();
  Eigen::VectorXcd coh(dim);
  coh(0) = std::exp(-0.5 * std::norm(alpha));
  for (int k = 1; k < dim; ++k) coh(k) = coh(k - 1) * alpha / std::sqrt(static_cast<double>(k));
  const cplx q = coh.dot(rho.data() * coh);  // dot conjugates its first argument
  return q.real() / std::numbers::pi;
}

}  // namespace cascade::oracle
