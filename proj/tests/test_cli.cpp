#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "cascade/cli/commands.hpp"

using namespace cascade;
using namespace cascade::cli;
namespace fs = std::filesystem;

namespace {

struct Captured {
  int code = 0;
  std::string out;
  std::string status;
};

Captured run_in_process(const RunConfig& cfg) {
  std::ostringstream out, status;
  Captured c;
  c.code = run_reporting(cfg, {out, status});
  c.out = out.str();
  c.status = status.str();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cascade_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_binary(const std::string& args, const fs::path& log) {
  const char* exe = std::getenv("CASCADE_CLI");
  if (!exe) return -1;
  const std::string cmd = std::string("\"") + exe + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -2;
}

}  // namespace

TEST_CASE("value lists and ranges", "[cli]") {
  CHECK(parse_values("1,2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(parse_values("0:1:0.25") == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(parse_values("0:0.3:0.1").size() == 4);
  const auto mixed = parse_values("5,0:1:0.5,inf");
  REQUIRE(mixed.size() == 5);
  CHECK(std::isinf(mixed.back()));
  CHECK_THROWS_AS(parse_values("1,,2"), Error);
  CHECK_THROWS_AS(parse_values("abc"), Error);
  CHECK_THROWS_AS(parse_values("1:0:0.1"), Error);
  CHECK_THROWS_AS(parse_values("0:1:0"), Error);
  CHECK_THROWS_AS(expand({0.0, 1.0, 1e-9}), Error);
  CHECK(expand({0.0, 2.0, 1e-3}).size() == 2001);
}

TEST_CASE("numbers round trip through the text format", "[cli]") {
  for (double x : {0.0, -0.0, 1.0, 1.0 / 3.0, -2.5e-17, 6.02e23, 0.134810145015}) {
    const double y = parse_number(format_number(x));
    CHECK(std::abs(y - x) <= 1e-11 * std::abs(x));
  }
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isinf(parse_number("-inf")));
  CHECK(format_number(kNaN).empty());
  CHECK(std::isnan(parse_number("")));
  CHECK_THROWS_AS(parse_number("1.0x"), Error);
}

TEST_CASE("csv round trip including quoted cells", "[cli]") {
  Table t;
  t.columns = {"check", "value", "note"};
  t.add_row({"a", "1.5", "plain"});
  t.add_row({"b", "", "has, comma and \"quotes\""});
  std::istringstream in(to_csv(t));
  const Table back = read_csv(in);
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  const auto v = back.numeric_column("value");
  CHECK(v[0] == 1.5);
  CHECK(std::isnan(v[1]));
  CHECK_THROWS_AS(back.column_index("missing"), Error);
}

TEST_CASE("coefficient table", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::coeffs;
  cfg.A = {100.0};
  cfg.kappa = {0.8};
  cfg.beta = {0.0};
  cfg.epsilon = {0.0};
  const auto r = run_in_process(cfg);
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  const Table t = read_csv(in);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.columns.front() == "beta");
  CHECK(t.numeric_column("R")[0] == 25.0);
  CHECK_THAT(t.numeric_column("S")[0], Catch::Matchers::WithinRel(25.4, 1e-12));
  CHECK(t.numeric_column("U")[0] == -25.0);
  CHECK(t.numeric_column("V")[0] == -25.0);
  CHECK(t.numeric_column("B")[0] == 1.0);

  cfg.A = {0.0};
  const auto z = run_in_process(cfg);
  std::istringstream zin(z.out);
  const Table zt = read_csv(zin);
  for (const char* c : {"R", "U", "V"}) CHECK(zt.numeric_column(c)[0] == 0.0);
  CHECK_THAT(zt.numeric_column("S")[0], Catch::Matchers::WithinAbs(0.4, 1e-15));
}

TEST_CASE("tables always carry a header", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::variance;
  cfg.A = {25.0};
  cfg.beta = parse_values("0:0.2:0.1");
  cfg.epsilon_rel = {0.5};
  const auto r = run_in_process(cfg);
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("A,kappa,beta,epsilon,var_plus,var_minus\n", 0) == 0);
  CHECK(run_in_process(cfg).out == r.out);
}

TEST_CASE("unstable sweep points are clipped and reported", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::variance;
  cfg.A = {25.0};
  cfg.beta = {0.1};
  cfg.epsilon = {0.1, 1000.0};
  const auto r = run_in_process(cfg);
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  CHECK(read_csv(in).rows.size() == 1);
  CHECK(r.status.find("clipped 1 of 2") != std::string::npos);

  cfg.epsilon = {1000.0};
  CHECK(run_in_process(cfg).code == kExitNotStable);
}

TEST_CASE("argument validation maps to exit codes", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::variance;
  cfg.kappa = {-1.0};
  CHECK(run_in_process(cfg).code == kExitInvalid);
  cfg.kappa = {};
  cfg.epsilon = {0.1};
  cfg.epsilon_rel = {0.5};
  CHECK(run_in_process(cfg).code == kExitInvalid);
  RunConfig fig;
  fig.command = Command::figure;
  fig.figure = 7;
  CHECK(run_in_process(fig).code == kExitInvalid);
  fig.figure = 3;
  fig.epsilon = {0.2};
  CHECK(run_in_process(fig).code == kExitInvalid);
  RunConfig svg;
  svg.command = Command::coeffs;
  svg.format = Format::svg;
  CHECK(run_in_process(svg).code == kExitInvalid);
}

TEST_CASE("verify in the trivial and the unstable regime", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::verify;
  cfg.A = {0.0};
  cfg.epsilon = {0.0};
  cfg.engine = Engine::analytic;
  const auto r = run_in_process(cfg);
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
  cfg.engine = Engine::moments;
  CHECK(run_in_process(cfg).code == kExitOk);

  RunConfig bad;
  bad.command = Command::verify;
  bad.epsilon = {1000.0};
  CHECK(run_in_process(bad).code == kExitNotStable);
}

TEST_CASE("figure files are deterministic", "[cli]") {
  const fs::path d1 = scratch("fig_a"), d2 = scratch("fig_b");
  for (const fs::path& d : {d1, d2}) {
    RunConfig cfg;
    cfg.command = Command::figure;
    cfg.figure = 2;
    cfg.beta = parse_values("0:0.5:0.01");
    cfg.format = Format::svg;
    cfg.output_path = d.string();
    REQUIRE(run_in_process(cfg).code == kExitOk);
  }
  for (const char* f : {"fig2.csv", "fig2.svg"}) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  CHECK(slurp(d1 / "fig2.svg").find("<svg") != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("binary exit codes and output files", "[cli][binary]") {
  if (!std::getenv("CASCADE_CLI")) SKIP("CASCADE_CLI not set");
  const fs::path d = scratch("bin");
  const fs::path log = d / "log.txt";
  CHECK(run_binary("coeffs --a 100 --beta 0 --out " + (d / "c.csv").string(), log) == 0);
  CHECK(slurp(d / "c.csv").rfind("beta,R,S,U,V,B,lambda_minus,lambda_plus,epsilon_threshold\n0,25,25.4,-25,-25,1,", 0) == 0);
  CHECK(run_binary("variance --kappa -1", log) == 2);
  CHECK(run_binary("variance --bogus", log) == 2);
  CHECK(run_binary("variance --epsilon 1000", log) == 3);
  CHECK(run_binary("verify --a 0 --epsilon 0 --engine analytic", log) == 0);
  CHECK(run_binary("coeffs --out " + (d / "c.csv" / "x.csv").string(), log) == 5);
  CHECK(slurp(log).find("error:") != std::string::npos);
  fs::remove_all(d);
}
