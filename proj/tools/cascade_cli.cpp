// Command-line front end: parameter sweeps, figure presets and cross-engine
// verification runs.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "cascade/cli/commands.hpp"

namespace {

using cascade::cli::Command;

constexpr const char* kColumns = R"(CSV columns
  coeffs       beta,R,S,U,V,B,lambda_minus,lambda_plus,epsilon_threshold
               (A, kappa, epsilon columns are prepended when those knobs vary)
  variance     A,kappa,beta,epsilon,var_plus,var_minus
  spectrum     A,kappa,beta,epsilon,omega,s_plus,s_minus
  mean-photon  A,kappa,beta,epsilon,t,mean_photon
  pnd          n,P_analytic,P_oracle (per --engine)
  mc           t,alpha_sq,alpha_sq_se,n_cl,n_cl_se,plus_sq,plus_sq_se,
               minus_sq,minus_sq_se,alpha_sq_exact,n_cl_exact
  oracle       dim,t,mean_n,var_plus,var_minus,mean_a_sq,trace_err,
               boundary_population,residual,min_eig
  verify       check,engine,observed,expected,delta,tolerance,status,note
  figure 2     beta,var_minus_no_crystal,var_minus_threshold
  figure 3     beta,var_minus_threshold_A<A>...
  figure 4     beta,s_minus_no_crystal,s_minus_threshold
  figure 5     beta,mean_photon_eps<eps>...
  figure 6     n,P_eps<eps>...
Numbers use 12 significant digits; empty cells mark points clipped where
lambda_minus <= 0 (clips are reported on stderr).

Value lists: comma-separated numbers or start:stop:step ranges, e.g.
  --beta 0:2:0.001   --a 25,50,100   --t-end inf

Figures are written to --out (a directory), else $CASCADE_OUT_DIR, else the
working directory. Relative --out paths of other commands are resolved
against $CASCADE_OUT_DIR when it is set; without --out tables go to stdout.

Exit codes: 0 ok, 1 engine failure, 2 invalid parameters, 3 not stable,
4 verification mismatch, 5 I/O error.)";

struct Flags {
  std::string a, kappa, beta, epsilon, eps_rel, omega, t_end;
};

void add_common(CLI::App* sub, Flags& f, cascade::cli::RunConfig& cfg, std::string& engine, std::string& format) {
  sub->add_option("--a", f.a, "linear gain coefficient A (list)");
  sub->add_option("--kappa", f.kappa, "cavity damping kappa (list)");
  sub->add_option("--beta", f.beta, "beta = Omega/gamma (list)");
  auto* eps = sub->add_option("--epsilon", f.epsilon, "parametric drive epsilon (list)");
  sub->add_option("--epsilon-rel-threshold", f.eps_rel, "drive as a fraction of the threshold drive (list)")
      ->excludes(eps);
  sub->add_option("--omega", f.omega, "spectrum frequency (list)");
  sub->add_option("--t-end", f.t_end, "time, inf for the steady state (list)");
  sub->add_option("--dt", cfg.dt, "time step (0 = engine default)");
  sub->add_option("--dim", cfg.dim, "Fock truncation (0 = double from 150 until converged)");
  sub->add_option("--n-traj", cfg.n_traj, "Monte Carlo trajectories (0 = 10000)");
  sub->add_option("--seed", cfg.seed, "Monte Carlo seed");
  sub->add_option("--out", cfg.output_path, "output file (tables) or directory (figures)");
  sub->add_option("--format", format, "csv or svg (svg adds a plot next to the figure CSV)")
      ->check(CLI::IsMember({"csv", "svg"}));
  sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--engine", engine, "analytic, oracle, mc, moments or all")
      ->check(CLI::IsMember({"analytic", "oracle", "mc", "moments", "all"}));
  sub->add_option("--n-max", cfg.n_max, "largest photon number for distributions");
  sub->add_option("--samples", cfg.samples, "recorded times for mc");
}

std::vector<double> values(const std::string& s) {
  return s.empty() ? std::vector<double>{} : cascade::cli::parse_values(s);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cascade::cli;
  CLI::App app{"Cascade laser with a parametric amplifier: squeezing, spectra and photon statistics"};
  app.footer(kColumns);
  app.require_subcommand(1);

  RunConfig cfg;
  Flags flags;
  std::string engine = "all";
  std::string format = "csv";
  const std::map<std::string, Command> names{
      {"coeffs", Command::coeffs},   {"variance", Command::variance}, {"spectrum", Command::spectrum},
      {"mean-photon", Command::mean_photon}, {"pnd", Command::pnd},   {"figure", Command::figure},
      {"verify", Command::verify},   {"mc", Command::mc},             {"oracle", Command::oracle}};
  const std::map<std::string, std::string> help{
      {"coeffs", "master-equation coefficients over a parameter sweep"},
      {"variance", "steady-state quadrature variances"},
      {"spectrum", "output squeezing spectra"},
      {"mean-photon", "mean photon number (transient or steady)"},
      {"pnd", "photon number distribution at one parameter point"},
      {"figure", "figure preset 2..6"},
      {"verify", "cross-engine agreement table (default A=25, beta=0.1, 0.9 of threshold)"},
      {"mc", "doubled-phase-space Monte Carlo moment series"},
      {"oracle", "truncated-Fock master equation observables"}};
  std::map<CLI::App*, Command> by_app;
  for (const auto& [name, cmd] : names) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    add_common(sub, flags, cfg, engine, format);
    if (cmd == Command::figure) sub->add_option("number", cfg.figure, "figure number 2..6")->required();
    by_app[sub] = cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  Streams io{std::cout, std::cerr};
  try {
    for (const auto& [sub, cmd] : by_app) {
      if (sub->parsed()) cfg.command = cmd;
    }
    cfg.A = values(flags.a);
    cfg.kappa = values(flags.kappa);
    cfg.beta = values(flags.beta);
    cfg.epsilon = values(flags.epsilon);
    cfg.epsilon_rel = values(flags.eps_rel);
    cfg.omega = values(flags.omega);
    cfg.t_end = values(flags.t_end);
    cfg.format = format == "svg" ? Format::svg : Format::csv;
    const std::map<std::string, Engine> engines{{"analytic", Engine::analytic}, {"oracle", Engine::oracle},
                                                {"mc", Engine::mc},             {"moments", Engine::moments},
                                                {"all", Engine::all}};
    cfg.engine = engines.at(engine);
    if (cfg.command == Command::pnd && engine == "all" && !app.get_subcommand("pnd")->count("--engine")) {
      cfg.engine = Engine::analytic;
    }
  } catch (const cascade::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return run_reporting(cfg, io);
}
