#pragma once

// Subcommands of the command-line front end. Each one builds a Table (or a
// set of files) from a RunConfig; errors surface as cascade::Error and are
// mapped to process exit codes by exit_code().

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/analytic.hpp"
#include "cascade/cli/config.hpp"
#include "cascade/cli/svg.hpp"
#include "cascade/cli/table.hpp"
#include "cascade/detail/numerics.hpp"
#include "cascade/error.hpp"
#include "cascade/fock_oracle.hpp"
#include "cascade/moments_ode.hpp"
#include "cascade/params.hpp"
#include "cascade/phase_space_mc.hpp"

namespace cascade::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitEngine = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNotStable = 3;
inline constexpr int kExitMismatch = 4;
inline constexpr int kExitIo = 5;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return kExitInvalid;
    case ErrorKind::not_stable: return kExitNotStable;
    case ErrorKind::io: return kExitIo;
    default: return kExitEngine;
  }
}

struct Streams {
  std::ostream& out;     // tables when no --out is given
  std::ostream& status;  // progress, clip reports, diagnostics
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr int kAutoDimStart = 150;
inline constexpr int kAutoDimMax = 2400;

namespace detail {

inline const std::vector<double>& or_default(const std::vector<double>& given, const std::vector<double>& preset) {
  return given.empty() ? preset : given;
}

inline double single(const std::vector<double>& given, double preset, const char* flag) {
  if (given.empty()) return preset;
  if (given.size() != 1) throw Error(ErrorKind::invalid_parameter, std::string(flag) + " takes a single value here");
  return given.front();
}

struct Defaults {
  std::vector<double> A{100.0};
  std::vector<double> kappa{0.8};
  std::vector<double> beta{0.0};
  std::vector<double> epsilon{0.0};
  std::vector<double> epsilon_rel{};
};

/// One grid point. `clip` is set when the drive was given relative to a
/// negative threshold (the point has no physical epsilon).
struct GridPoint {
  SystemParams p;
  bool clip = false;
};

/// Cartesian product A x kappa x beta x epsilon in that nesting order.
inline std::vector<GridPoint> parameter_grid(const RunConfig& cfg, const Defaults& d) {
  const auto& As = or_default(cfg.A, d.A);
  const auto& ks = or_default(cfg.kappa, d.kappa);
  const auto& bs = or_default(cfg.beta, d.beta);
  const bool relative = !cfg.epsilon_rel.empty() || (cfg.epsilon.empty() && !d.epsilon_rel.empty());
  const auto& es = relative ? or_default(cfg.epsilon_rel, d.epsilon_rel) : or_default(cfg.epsilon, d.epsilon);
  std::vector<GridPoint> out;
  out.reserve(As.size() * ks.size() * bs.size() * es.size());
  for (double A : As) {
    for (double k : ks) {
      for (double b : bs) {
        for (double e : es) {
          GridPoint g;
          g.p = SystemParams{A, k, b, 0.0};
          if (relative) {
            if (!(e >= 0.0)) throw Error(ErrorKind::invalid_parameter, "--epsilon-rel-threshold must be >= 0");
            const double th = threshold_epsilon(g.p);
            g.clip = th < 0.0;
            g.p.epsilon = g.clip ? 0.0 : e * th;
          } else {
            g.p.epsilon = e;
          }
          validate(g.p);
          out.push_back(g);
        }
      }
    }
  }
  return out;
}

inline SystemParams single_point(const RunConfig& cfg, const Defaults& d, const char* command) {
  const auto grid = parameter_grid(cfg, d);
  if (grid.size() != 1) {
    throw Error(ErrorKind::invalid_parameter, std::string(command) + " takes a single parameter point");
  }
  if (grid.front().clip) {
    throw Error(ErrorKind::not_stable, "threshold drive is negative at this point; no sub-threshold epsilon exists");
  }
  return grid.front().p;
}

/// Evaluates f(i) for i < n on cfg.jobs workers; results keep index order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, int jobs, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(n);
  cascade::detail::parallel_for(n, jobs, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

/// Tracks sweep points dropped because lambda_minus <= 0.
class ClipLog {
 public:
  explicit ClipLog(std::string what) : what_(std::move(what)) {}
  void add(double beta) {
    ++count_;
    lo_ = std::min(lo_, beta);
    hi_ = std::max(hi_, beta);
  }
  void total(std::size_t n) { total_ = n; }
  std::size_t count() const { return count_; }
  void report(std::ostream& status) const {
    if (count_ == 0) return;
    status << what_ << ": clipped " << count_ << " of " << total_
           << " points where lambda_minus <= 0 (beta in [" << format_number(lo_) << ", " << format_number(hi_)
           << "])\n";
  }

 private:
  std::string what_;
  std::size_t count_ = 0;
  std::size_t total_ = 0;
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
};

/// Runs f, returning NaN instead of throwing when the point is not stable.
inline double or_clipped(const std::function<double()>& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::not_stable) return kNaN;
    throw;
  }
}

inline void emit_table(const RunConfig& cfg, const Table& t, const Streams& io) {
  if (cfg.output_path.empty()) {
    write_csv(io.out, t);
    io.out.flush();
    if (!io.out) throw Error(ErrorKind::io, "write to standard output failed");
    return;
  }
  const std::string path = resolve_output(cfg.output_path);
  write_text_file(path, to_csv(t));
  io.status << "wrote " << path << "\n";
}

/// Rows of a sweep table, one per grid point, with unstable points removed.
inline Table sweep_table(const RunConfig& cfg, const std::vector<GridPoint>& grid, std::vector<std::string> value_cols,
                         const std::function<std::vector<double>(std::size_t)>& eval, const char* what,
                         const Streams& io) {
  Table t;
  t.columns = {"A", "kappa", "beta", "epsilon"};
  for (auto& c : value_cols) t.columns.push_back(std::move(c));
  using Row = std::optional<std::vector<double>>;
  const auto rows = parallel_map<Row>(grid.size(), cfg.jobs, [&](std::size_t i) -> Row {
    if (grid[i].clip) return std::nullopt;
    try {
      return eval(i);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::not_stable) return std::nullopt;
      throw;
    }
  });
  ClipLog clip(what);
  clip.total(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SystemParams& p = grid[i].p;
    if (!rows[i]) {
      clip.add(p.beta);
      continue;
    }
    std::vector<double> r{p.A, p.kappa, p.beta, p.epsilon};
    r.insert(r.end(), rows[i]->begin(), rows[i]->end());
    t.add_numeric_row(r);
  }
  clip.report(io.status);
  if (!grid.empty() && clip.count() == grid.size()) {
    throw Error(ErrorKind::not_stable, std::string(what) + ": every requested point has lambda_minus <= 0");
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Oracle helpers shared by several commands

struct OracleSteady {
  oracle::SteadyResult result;
  int dim = 0;
};

/// Stationary oracle state. dim > 0 is used as given; dim == 0 starts at 150
/// and doubles while the truncation guard trips, up to 2400.
inline OracleSteady oracle_steady(const SystemParams& p, int dim, std::ostream& status) {
  if (dim > 0) return {oracle::steady_state(p, dim), dim};
  for (int d = kAutoDimStart;; d *= 2) {
    try {
      return {oracle::steady_state(p, d), d};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::truncation_too_small || 2 * d > kAutoDimMax) throw;
      status << "oracle: " << e.what() << "; retrying\n";
    }
  }
}

inline double default_mc_dt(const Coefficients& c) {
  return std::min(1e-3, 0.01 / std::max(c.lambda_plus, std::abs(c.lambda_minus)));
}

// ---------------------------------------------------------------------------
// Table commands

inline Table cmd_coeffs(const RunConfig& cfg, const Streams& io) {
  const auto grid = detail::parameter_grid(cfg, {});
  const bool many_A = cfg.A.size() > 1;
  const bool many_k = cfg.kappa.size() > 1;
  const bool show_eps = cfg.epsilon.size() > 1 || !cfg.epsilon_rel.empty();
  Table t;
  if (many_A) t.columns.push_back("A");
  if (many_k) t.columns.push_back("kappa");
  if (show_eps) t.columns.push_back("epsilon");
  for (const char* c : {"beta", "R", "S", "U", "V", "B", "lambda_minus", "lambda_plus", "epsilon_threshold"}) {
    t.columns.push_back(c);
  }
  detail::ClipLog clip("coeffs");
  clip.total(grid.size());
  for (const auto& g : grid) {
    if (g.clip) {
      clip.add(g.p.beta);
      continue;
    }
    const Coefficients c = coefficients(g.p);
    std::vector<double> r;
    if (many_A) r.push_back(g.p.A);
    if (many_k) r.push_back(g.p.kappa);
    if (show_eps) r.push_back(g.p.epsilon);
    for (double v : {g.p.beta, c.R, c.S, c.U, c.V, c.B, c.lambda_minus, c.lambda_plus, threshold_epsilon(g.p)}) {
      r.push_back(v);
    }
    t.add_numeric_row(r);
  }
  clip.report(io.status);
  return t;
}

inline Table cmd_variance(const RunConfig& cfg, const Streams& io) {
  const auto grid = detail::parameter_grid(cfg, {});
  return detail::sweep_table(
      cfg, grid, {"var_plus", "var_minus"},
      [&](std::size_t i) {
        const auto v = analytic::variance_steady(grid[i].p);
        return std::vector<double>{v.plus, v.minus};
      },
      "variance", io);
}

inline Table cmd_spectrum(const RunConfig& cfg, const Streams& io) {
  const auto base = detail::parameter_grid(cfg, {});
  const auto& omegas = detail::or_default(cfg.omega, {0.0});
  // omega is the innermost sweep; it rides along as a per-row value.
  std::vector<detail::GridPoint> grid;
  std::vector<double> omega_of;
  for (const auto& g : base) {
    for (double w : omegas) {
      grid.push_back(g);
      omega_of.push_back(w);
    }
  }
  return detail::sweep_table(
      cfg, grid, {"omega", "s_plus", "s_minus"},
      [&](std::size_t i) {
        const SystemParams& p = grid[i].p;
        const double w = omega_of[i];
        if (stability(p) == Stability::unstable) require_stable(p, "spectrum");
        return std::vector<double>{w, analytic::spectrum_plus(p, w), analytic::spectrum_minus(p, w)};
      },
      "spectrum", io);
}

inline Table cmd_mean_photon(const RunConfig& cfg, const Streams& io) {
  const auto base = detail::parameter_grid(cfg, {});
  const std::vector<double> inf{analytic::kInf};
  const auto& times = detail::or_default(cfg.t_end, inf);
  Table t;
  t.columns = {"A", "kappa", "beta", "epsilon", "t", "mean_photon"};
  struct Job {
    detail::GridPoint g;
    double t;
  };
  std::vector<Job> jobs;
  for (const auto& g : base) {
    for (double tt : times) {
      if (!(tt >= 0.0)) throw Error(ErrorKind::invalid_parameter, "--t-end must be >= 0");
      jobs.push_back({g, tt});
    }
  }
  const auto values = detail::parallel_map<double>(jobs.size(), cfg.jobs, [&](std::size_t i) {
    if (jobs[i].g.clip) return kNaN;
    return detail::or_clipped([&] { return analytic::mean_photon_number(jobs[i].g.p, jobs[i].t); });
  });
  detail::ClipLog clip("mean-photon");
  clip.total(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const SystemParams& p = jobs[i].g.p;
    if (std::isnan(values[i])) {
      clip.add(p.beta);
      continue;
    }
    t.add_numeric_row({p.A, p.kappa, p.beta, p.epsilon, jobs[i].t, values[i]});
  }
  clip.report(io.status);
  if (!jobs.empty() && clip.count() == jobs.size()) {
    throw Error(ErrorKind::not_stable, "mean-photon: every requested point has lambda_minus <= 0");
  }
  return t;
}

inline Table cmd_pnd(const RunConfig& cfg, const Streams& io) {
  const SystemParams p = detail::single_point(cfg, {}, "pnd");
  const double t = detail::single(cfg.t_end, analytic::kInf, "--t-end");
  const Engine engine = cfg.engine == Engine::all ? Engine::all : cfg.engine;
  const bool want_analytic = engine == Engine::analytic || engine == Engine::all;
  const bool want_oracle = engine == Engine::oracle || engine == Engine::all;
  if (!want_analytic && !want_oracle) {
    throw Error(ErrorKind::invalid_parameter, "pnd supports --engine analytic, oracle or all");
  }
  std::vector<double> pa, po;
  if (want_analytic) pa = analytic::photon_distribution(analytic::transient_moments(p, t), cfg.n_max).probs;
  if (want_oracle) {
    oracle::DensityMatrix rho;
    if (std::isinf(t)) {
      auto s = oracle_steady(p, cfg.dim, io.status);
      io.status << "oracle: dim=" << s.dim << "\n";
      rho = std::move(s.result.rho);
    } else {
      const int dim = cfg.dim > 0 ? cfg.dim : kAutoDimStart;
      const double dt = cfg.dt > 0.0 ? cfg.dt : oracle::max_step(p);
      rho = oracle::evolve(oracle::DensityMatrix::vacuum(dim), p, t, dt).rho;
    }
    for (int n = 0; n <= cfg.n_max; ++n) po.push_back(n < rho.dim() ? rho(n, n).real() : 0.0);
  }
  Table tab;
  tab.columns = {"n"};
  if (want_analytic) tab.columns.push_back("P_analytic");
  if (want_oracle) tab.columns.push_back("P_oracle");
  for (int n = 0; n <= cfg.n_max; ++n) {
    std::vector<double> r{static_cast<double>(n)};
    if (want_analytic) r.push_back(pa[static_cast<std::size_t>(n)]);
    if (want_oracle) r.push_back(po[static_cast<std::size_t>(n)]);
    tab.add_numeric_row(r);
  }
  return tab;
}

inline Table cmd_mc(const RunConfig& cfg, const Streams& io) {
  const SystemParams p = detail::single_point(cfg, {}, "mc");
  require_stable(p, "mc");
  const Coefficients c = coefficients(p);
  const double t_end = detail::single(cfg.t_end, 10.0 / c.lambda_minus, "--t-end");
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_mc_dt(c);
  const long n_traj = cfg.n_traj > 0 ? cfg.n_traj : 10000;
  mc::RunOptions opts;
  opts.samples = cfg.samples;
  opts.jobs = cfg.jobs;
  io.status << "mc: n_traj=" << n_traj << " dt=" << format_number(dt) << " t_end=" << format_number(t_end)
            << " seed=" << cfg.seed << "\n";
  const auto series = mc::run(p, n_traj, t_end, dt, cfg.seed, opts);
  Table t;
  t.columns = {"t",          "alpha_sq", "alpha_sq_se",    "n_cl",       "n_cl_se", "plus_sq", "plus_sq_se",
               "minus_sq",   "minus_sq_se", "alpha_sq_exact", "n_cl_exact"};
  for (const auto& s : series.samples) {
    const auto exact = analytic::transient_moments(p, s.t);
    t.add_numeric_row({s.t, s.alpha_sq.mean.real(), s.alpha_sq.se_re, s.n_cl.mean.real(), s.n_cl.se_re,
                       s.plus_sq.mean.real(), s.plus_sq.se_re, s.minus_sq.mean.real(), s.minus_sq.se_re,
                       exact.alpha_sq, exact.n_cl});
  }
  return t;
}

inline Table cmd_oracle(const RunConfig& cfg, const Streams& io) {
  const SystemParams p = detail::single_point(cfg, {}, "oracle");
  const double t = detail::single(cfg.t_end, analytic::kInf, "--t-end");
  oracle::DensityMatrix rho;
  int dim = 0;
  double boundary = 0.0;
  double residual = kNaN;
  if (std::isinf(t)) {
    auto s = oracle_steady(p, cfg.dim, io.status);
    dim = s.dim;
    boundary = s.result.boundary_population;
    residual = s.result.residual;
    rho = std::move(s.result.rho);
  } else {
    dim = cfg.dim > 0 ? cfg.dim : kAutoDimStart;
    const double dt = cfg.dt > 0.0 ? cfg.dt : oracle::max_step(p);
    auto r = oracle::evolve(oracle::DensityMatrix::vacuum(dim), p, t, dt);
    boundary = r.boundary_population;
    rho = std::move(r.rho);
  }
  const auto o = oracle::observables(rho, dim <= 1000);
  Table tab;
  tab.columns = {"dim",         "t",     "mean_n",   "var_plus", "var_minus",
                 "mean_a_sq",   "trace_err", "boundary_population", "residual", "min_eig"};
  tab.add_numeric_row({static_cast<double>(dim), t, o.mean_n, o.var_plus, o.var_minus, o.mean_a_sq.real(),
                       o.trace_err, boundary, residual, o.min_eig});
  return tab;
}

// ---------------------------------------------------------------------------
// Cross-engine verification

struct VerifyReport {
  Table table;
  int failures = 0;
};

namespace detail {

class VerifyTable {
 public:
  VerifyTable() {
    t_.columns = {"check", "engine", "observed", "expected", "delta", "tolerance", "status", "note"};
  }
  void check(const std::string& what, const std::string& engine, double observed, double expected,
             double tolerance, const std::string& note = "") {
    const double delta = std::abs(observed - expected);
    const bool ok = delta <= tolerance;
    if (!ok) ++failures_;
    t_.add_row({what, engine, format_number(observed), format_number(expected), format_number(delta),
                format_number(tolerance), ok ? "PASS" : "FAIL", note});
  }
  void error(const std::string& engine, const Error& e) {
    ++failures_;
    t_.add_row({"run", engine, "", "", "", "", "ERROR", e.what()});
  }
  VerifyReport finish() { return {std::move(t_), failures_}; }

 private:
  Table t_;
  int failures_ = 0;
};

inline double rel_tol(double expected, double rel, double floor = 1e-12) {
  return std::max(rel * std::abs(expected), floor);
}

}  // namespace detail

/// Defaults: A=25, kappa=0.8, beta=0.1, epsilon = 0.9 epsilon_th.
inline VerifyReport cmd_verify(const RunConfig& cfg, const Streams& io) {
  detail::Defaults d;
  d.A = {25.0};
  d.beta = {0.1};
  d.epsilon_rel = {0.9};
  const SystemParams p = detail::single_point(cfg, d, "verify");
  require_stable(p, "verify");
  const bool all = cfg.engine == Engine::all;
  const Coefficients c = coefficients(p);

  const auto ref = analytic::variance_steady(p);
  const double ref_n = analytic::mean_photon_number_steady(p);
  const auto rec = analytic::steady_moments(p);
  detail::VerifyTable v;

  if (all || cfg.engine == Engine::analytic) {
    const auto closed = analytic::variance_closed_form(p);
    v.check("var_plus", "analytic", closed.plus, ref.plus, detail::rel_tol(ref.plus, 1e-10), "closed form vs 1+<a+^2>");
    v.check("var_minus", "analytic", closed.minus, ref.minus, detail::rel_tol(ref.minus, 1e-10),
            "closed form vs 1-<a-^2>");
    v.check("mean_n", "analytic", ref_n, rec.n_cl, detail::rel_tol(rec.n_cl, 1e-10), "closed form vs record");
  }

  if (all || cfg.engine == Engine::moments) {
    try {
      const auto s = moments::steady_from_linear_solve(p);
      v.check("var_plus", "moments-linear", 1.0 + s.reconstructed_plus(), ref.plus, detail::rel_tol(ref.plus, 1e-10));
      v.check("var_minus", "moments-linear", 1.0 - s.reconstructed_minus(), ref.minus,
              detail::rel_tol(ref.minus, 1e-10));
      v.check("mean_n", "moments-linear", s.n_cl, ref_n, detail::rel_tol(ref_n, 1e-10));
      const double t_end = 25.0 / c.lambda_minus;
      moments::PropagateOptions po;
      po.samples = 1;
      const auto series = moments::propagate(p, t_end, moments::max_step(p), po);
      const auto& last = series.back();
      const std::string note = "t=" + format_number(t_end);
      v.check("var_plus", "moments-ode", 1.0 + last.flow_plus, ref.plus, detail::rel_tol(ref.plus, 1e-8), note);
      v.check("var_minus", "moments-ode", 1.0 - last.flow_minus, ref.minus, detail::rel_tol(ref.minus, 1e-8), note);
      v.check("mean_n", "moments-ode", last.n_cl, ref_n, detail::rel_tol(ref_n, 1e-8), note);
    } catch (const Error& e) {
      v.error("moments", e);
    }
  }

  if (all || cfg.engine == Engine::oracle) {
    try {
      const auto s = oracle_steady(p, cfg.dim, io.status);
      const auto o = oracle::observables(s.result.rho);
      const std::string note = "dim=" + std::to_string(s.dim);
      v.check("var_plus", "oracle", o.var_plus, ref.plus, detail::rel_tol(ref.plus, 1e-3), note);
      v.check("var_minus", "oracle", o.var_minus, ref.minus, detail::rel_tol(ref.minus, 1e-3), note);
      v.check("mean_n", "oracle", o.mean_n, ref_n, detail::rel_tol(ref_n, 1e-3), note);
      const auto pnd = analytic::photon_distribution(rec, 10);
      for (int n = 0; n <= 10; ++n) {
        v.check("P(" + std::to_string(n) + ")", "oracle", o.pnd[static_cast<std::size_t>(n)],
                pnd.probs[static_cast<std::size_t>(n)], 1e-4, note);
      }
    } catch (const Error& e) {
      v.error("oracle", e);
    }
  }

  if (all || cfg.engine == Engine::mc) {
    try {
      const double t_end = detail::single(cfg.t_end, 10.0 / c.lambda_minus, "--t-end");
      const double dt = cfg.dt > 0.0 ? cfg.dt : default_mc_dt(c);
      const long n_traj = cfg.n_traj > 0 ? cfg.n_traj : 10000;
      mc::RunOptions opts;
      opts.samples = 2;
      opts.jobs = cfg.jobs;
      const auto series = mc::run(p, n_traj, t_end, dt, cfg.seed, opts);
      const auto& last = series.samples.back();
      const auto exact = analytic::transient_moments(p, last.t);
      const std::string note = "3 SE, n_traj=" + std::to_string(n_traj) + ", t=" + format_number(last.t);
      v.check("<alpha_+^2>", "mc", last.plus_sq.mean.real(), 2.0 * exact.alpha_sq + 2.0 * exact.n_cl,
              3.0 * last.plus_sq.se_re, note);
      v.check("<alpha_-^2>", "mc", last.minus_sq.mean.real(), 2.0 * exact.alpha_sq - 2.0 * exact.n_cl,
              3.0 * last.minus_sq.se_re, note);
      v.check("mean_n", "mc", last.n_cl.mean.real(), exact.n_cl, 3.0 * last.n_cl.se_re, note);
    } catch (const Error& e) {
      v.error("mc", e);
    }
  }
  return v.finish();
}

// ---------------------------------------------------------------------------
// Figure presets

struct FigureOutput {
  Table table;
  Plot plot;
};

namespace detail {

inline std::vector<double> figure_beta_grid(const RunConfig& cfg) {
  return cfg.beta.empty() ? expand({0.0, 2.0, 1e-3}) : cfg.beta;
}

/// Evaluates one curve over the beta grid, NaN where clipped.
inline std::vector<double> curve(const RunConfig& cfg, const std::vector<double>& betas,
                                 const std::function<double(double)>& f, ClipLog& clip) {
  auto ys = parallel_map<double>(betas.size(), cfg.jobs, [&](std::size_t i) { return or_clipped([&] { return f(betas[i]); }); });
  clip.total(betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (std::isnan(ys[i])) clip.add(betas[i]);
  }
  return ys;
}

/// Threshold drive at (A, kappa, beta), rejecting the region where it is
/// negative (there no epsilon >= 0 reaches threshold).
inline SystemParams at_threshold(double A, double kappa, double beta) {
  SystemParams p{A, kappa, beta, 0.0};
  const double th = threshold_epsilon(p);
  if (th < 0.0) throw Error(ErrorKind::not_stable, "threshold drive is negative");
  p.epsilon = th;
  return p;
}

inline Table columns_table(const std::string& x_name, const std::vector<double>& xs,
                           const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
  Table t;
  t.columns.push_back(x_name);
  for (const auto& c : cols) t.columns.push_back(c.first);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> r{xs[i]};
    for (const auto& c : cols) r.push_back(c.second[i]);
    t.add_numeric_row(r);
  }
  return t;
}

inline Plot plot_of(const Table& t, std::string title, std::string y_label, PlotStyle style) {
  Plot plot;
  plot.title = std::move(title);
  plot.x_label = t.columns.front();
  plot.y_label = std::move(y_label);
  plot.style = style;
  const auto xs = t.numeric_column(t.columns.front());
  for (std::size_t k = 1; k < t.columns.size(); ++k) plot.series.push_back({t.columns[k], xs, t.numeric_column(t.columns[k])});
  return plot;
}

inline void reject_epsilon(const RunConfig& cfg, int n) {
  if (!cfg.epsilon.empty() || !cfg.epsilon_rel.empty()) {
    throw Error(ErrorKind::invalid_parameter,
                "figure " + std::to_string(n) + " evaluates the drive at threshold; --epsilon does not apply");
  }
}

}  // namespace detail

inline FigureOutput cmd_figure_data(const RunConfig& cfg, const Streams& io) {
  using detail::curve;
  const int n = cfg.figure;
  const std::string tag = "figure " + std::to_string(n);
  const double kappa = detail::single(cfg.kappa, 0.8, "--kappa");
  if (!cfg.epsilon_rel.empty()) {
    throw Error(ErrorKind::invalid_parameter, "figure presets take absolute --epsilon values");
  }
  std::vector<std::pair<std::string, std::vector<double>>> cols;

  switch (n) {
    case 2: {
      const double A = detail::single(cfg.A, 100.0, "--a");
      const double eps = detail::single(cfg.epsilon, 0.0, "--epsilon");
      const auto betas = detail::figure_beta_grid(cfg);
      detail::ClipLog c1(tag + " dotted"), c2(tag + " solid");
      const std::string dotted = eps == 0.0 ? "var_minus_no_crystal" : "var_minus_eps" + format_number(eps);
      cols.push_back({dotted, curve(cfg, betas, [&](double b) {
                        const SystemParams p{A, kappa, b, eps};
                        return eps == 0.0 ? analytic::variance_no_crystal(p).minus
                                          : (require_stable(p, "figure"), analytic::variance_steady(p).minus);
                      }, c1)});
      cols.push_back({"var_minus_threshold", curve(cfg, betas, [&](double b) {
                        return analytic::variance_threshold(detail::at_threshold(A, kappa, b)).minus;
                      }, c2)});
      c1.report(io.status);
      c2.report(io.status);
      Table t = detail::columns_table("beta", betas, cols);
      return {t, detail::plot_of(t, "Minus-quadrature variance, A=" + format_number(A), "variance", PlotStyle::line)};
    }
    case 3: {
      detail::reject_epsilon(cfg, 3);
      const auto As = detail::or_default(cfg.A, {25.0, 50.0, 100.0});
      const auto betas = detail::figure_beta_grid(cfg);
      for (double A : As) {
        detail::ClipLog clip(tag + " A=" + format_number(A));
        cols.push_back({"var_minus_threshold_A" + format_number(A), curve(cfg, betas, [&](double b) {
                          return analytic::variance_threshold(detail::at_threshold(A, kappa, b)).minus;
                        }, clip)});
        clip.report(io.status);
      }
      Table t = detail::columns_table("beta", betas, cols);
      return {t, detail::plot_of(t, "Minus-quadrature variance at threshold", "variance", PlotStyle::line)};
    }
    case 4: {
      const double A = detail::single(cfg.A, 25.0, "--a");
      const double eps = detail::single(cfg.epsilon, 0.0, "--epsilon");
      const double omega = detail::single(cfg.omega, 0.0, "--omega");
      const auto betas = detail::figure_beta_grid(cfg);
      detail::ClipLog c1(tag + " dotted"), c2(tag + " solid");
      const std::string dotted = eps == 0.0 ? "s_minus_no_crystal" : "s_minus_eps" + format_number(eps);
      cols.push_back({dotted, curve(cfg, betas, [&](double b) {
                        const SystemParams p{A, kappa, b, eps};
                        require_stable(p, "figure");
                        return analytic::spectrum_minus(p, omega);
                      }, c1)});
      cols.push_back({"s_minus_threshold", curve(cfg, betas, [&](double b) {
                        return analytic::spectrum_minus(detail::at_threshold(A, kappa, b), omega);
                      }, c2)});
      c1.report(io.status);
      c2.report(io.status);
      Table t = detail::columns_table("beta", betas, cols);
      return {t, detail::plot_of(t, "Squeezing spectrum at omega=" + format_number(omega) + ", A=" + format_number(A),
                                 "S_minus", PlotStyle::line)};
    }
    case 5: {
      const double A = detail::single(cfg.A, 25.0, "--a");
      const auto eps_list = detail::or_default(cfg.epsilon, {0.0, 0.3});
      const auto betas = detail::figure_beta_grid(cfg);
      for (double eps : eps_list) {
        detail::ClipLog clip(tag + " epsilon=" + format_number(eps));
        cols.push_back({"mean_photon_eps" + format_number(eps), curve(cfg, betas, [&](double b) {
                          return analytic::mean_photon_number_steady({A, kappa, b, eps});
                        }, clip)});
        clip.report(io.status);
      }
      Table t = detail::columns_table("beta", betas, cols);
      return {t, detail::plot_of(t, "Steady-state mean photon number, A=" + format_number(A), "mean photon number",
                                 PlotStyle::line)};
    }
    case 6: {
      const double A = detail::single(cfg.A, 100.0, "--a");
      const double beta = detail::single(cfg.beta, 0.067, "--beta");
      const auto eps_list = detail::or_default(cfg.epsilon, {0.0, 0.3});
      std::vector<double> ns;
      for (int k = 0; k <= cfg.n_max; ++k) ns.push_back(k);
      for (double eps : eps_list) {
        const SystemParams p{A, kappa, beta, eps};
        std::vector<double> probs(ns.size(), kNaN);
        if (stability(p) == Stability::stable) {
          probs = analytic::photon_distribution(analytic::steady_moments(p), cfg.n_max).probs;
        } else {
          io.status << tag << ": epsilon=" << format_number(eps) << " has lambda_minus <= 0; column left empty\n";
        }
        cols.push_back({"P_eps" + format_number(eps), probs});
      }
      Table t = detail::columns_table("n", ns, cols);
      return {t, detail::plot_of(t, "Photon number distribution, A=" + format_number(A) + ", beta=" + format_number(beta),
                                 "P(n)", PlotStyle::stem)};
    }
    default:
      throw Error(ErrorKind::invalid_parameter, "figure number must be in 2..6");
  }
}

/// Writes fig<N>.csv (and fig<N>.svg for --format svg) into the output
/// directory: --out, else $CASCADE_OUT_DIR, else the working directory.
inline std::vector<std::string> cmd_figure(const RunConfig& cfg, const Streams& io) {
  const FigureOutput fig = cmd_figure_data(cfg, io);
  std::string dir = resolve_output(cfg.output_path);
  if (dir.empty()) dir = ".";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory '" + dir + "': " + ec.message());
  const std::string stem = (std::filesystem::path(dir) / ("fig" + std::to_string(cfg.figure))).string();
  std::vector<std::string> written{stem + ".csv"};
  write_text_file(written.back(), to_csv(fig.table));
  if (cfg.format == Format::svg) {
    written.push_back(stem + ".svg");
    write_text_file(written.back(), render_svg(fig.plot));
  }
  for (const auto& w : written) io.status << "wrote " << w << "\n";
  return written;
}

// ---------------------------------------------------------------------------
// Dispatch

/// Runs one command; returns the exit code for normal completion and
/// throws cascade::Error otherwise.
inline int run(const RunConfig& cfg, const Streams& io) {
  validate(cfg);
  switch (cfg.command) {
    case Command::coeffs: detail::emit_table(cfg, cmd_coeffs(cfg, io), io); return kExitOk;
    case Command::variance: detail::emit_table(cfg, cmd_variance(cfg, io), io); return kExitOk;
    case Command::spectrum: detail::emit_table(cfg, cmd_spectrum(cfg, io), io); return kExitOk;
    case Command::mean_photon: detail::emit_table(cfg, cmd_mean_photon(cfg, io), io); return kExitOk;
    case Command::pnd: detail::emit_table(cfg, cmd_pnd(cfg, io), io); return kExitOk;
    case Command::mc: detail::emit_table(cfg, cmd_mc(cfg, io), io); return kExitOk;
    case Command::oracle: detail::emit_table(cfg, cmd_oracle(cfg, io), io); return kExitOk;
    case Command::figure: cmd_figure(cfg, io); return kExitOk;
    case Command::verify: {
      const VerifyReport r = cmd_verify(cfg, io);
      detail::emit_table(cfg, r.table, io);
      io.status << "verify: " << r.table.rows.size() << " rows, " << r.failures << " failed\n";
      return r.failures == 0 ? kExitOk : kExitMismatch;
    }
  }
  return kExitInvalid;
}

/// run() with errors reported on the status stream and mapped to exit codes.
inline int run_reporting(const RunConfig& cfg, const Streams& io) {
  try {
    return run(cfg, io);
  } catch (const Error& e) {
    io.status << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
}

}  // namespace cascade::cli
