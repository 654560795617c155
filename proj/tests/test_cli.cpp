#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "aoilab/analytics.hpp"
#include "aoilab/chart.hpp"
#include "aoilab/experiments.hpp"

using namespace aoilab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cfg(const ExperimentConfig& cfg) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run_experiment(cfg, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

ExperimentConfig command(const std::string& name) {
  ExperimentConfig c;
  c.command = name;
  return c;
}

CsvTable table_of(const std::string& csv) {
  std::istringstream in(csv);
  return parse_csv(in);
}

double value(const CsvTable& t, std::size_t row, const std::string& col) {
  const int c = t.column(col);
  REQUIRE(c >= 0);
  return std::stod(t.rows.at(row).at(static_cast<std::size_t>(c)));
}

std::string cell(const CsvTable& t, std::size_t row, const std::string& col) {
  const int c = t.column(col);
  REQUIRE(c >= 0);
  return t.rows.at(row).at(static_cast<std::size_t>(c));
}

double log_value(const std::string& log, const std::string& key) {
  const auto at = log.find(key + "=");
  REQUIRE(at != std::string::npos);
  return std::stod(log.substr(at + key.size() + 1));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("aoilab_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

/// Runs the installed binary through the shell; returns its exit status.
int shell(const std::string& cmdline) {
  const int status = std::system(cmdline.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli() { return AOILAB_CLI_PATH; }

}  // namespace

TEST_CASE("pmf: Fig-style run reports a small total variation") {
  auto c = command("pmf");
  c.delta = 2;
  c.jmax = 40;
  c.sim_slots = 100000;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  CHECK(t.header == std::vector<std::string>{"j", "p_analytical", "p_empirical", "abs_error"});
  CHECK(t.rows.size() == 40);
  CHECK(log_value(o.err, "tv_distance") < 0.02);
  CHECK(o.out.rfind("# schema: aoilab/pmf/1\n", 0) == 0);
}

TEST_CASE("pmf: perfect link puts all mass at age one") {
  auto c = command("pmf");
  c.lambda = 1.0;
  c.epsilon = 0.0;
  c.delta = 1;
  c.jmax = 5;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 5);
  CHECK(value(t, 0, "p_analytical") == 1.0);
  for (std::size_t r = 1; r < 5; ++r) CHECK(value(t, r, "p_analytical") == 0.0);
}

TEST_CASE("pmf: singular line goes through the fallback") {
  auto c = command("pmf");
  c.lambda = 0.8;
  c.epsilon = 0.2;
  c.delta = 3;
  c.jmax = 60;
  c.sim_slots = 0;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  CHECK(o.out.find("route=recurrence") != std::string::npos);
  const auto t = table_of(o.out);
  CHECK(t.header == std::vector<std::string>{"j", "p_analytical"});
  // Printed digits limit the check; the library value is tested to 1e-10.
  CHECK(std::abs(log_value(o.err, "mass_in_range") + log_value(o.err, "tail_mass") - 1.0) < 1e-10);
  double sum = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) sum += value(t, r, "p_analytical");
  CHECK(std::abs(sum - 1.0) < 1e-7);
}

TEST_CASE("pmf: jmax below the threshold is an input error") {
  auto c = command("pmf");
  c.delta = 5;
  c.jmax = 3;
  CHECK(run_cfg(c).code == kExitUsage);
}

TEST_CASE("sweep: closed forms against a million simulated slots") {
  auto c = command("sweep");
  c.sim_slots = 1'000'000;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 11);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CAPTURE(r);
    CHECK(value(t, r, "delta") == static_cast<double>(r));
    CHECK(value(t, r, "aoi_rel_err") < 0.02);
    CHECK(value(t, r, "cost_rel_err") < 0.02);
    if (r > 0) {
      CHECK(value(t, r, "aoi_closed") >= value(t, r - 1, "aoi_closed"));
      CHECK(value(t, r, "cost_closed") <= value(t, r - 1, "cost_closed"));
    }
  }
}

TEST_CASE("sweep: thresholds 0 and 1 print the same closed forms") {
  auto c = command("sweep");
  c.delta_min = 0;
  c.delta_max = 1;
  c.sim_slots = 0;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 2);
  CHECK(cell(t, 0, "aoi_closed") == cell(t, 1, "aoi_closed"));
  CHECK(cell(t, 0, "cost_closed") == cell(t, 1, "cost_closed"));
  CHECK(cell(t, 0, "aoi_sim").empty());
}

TEST_CASE("sweep: empty range is a usage error") {
  auto c = command("sweep");
  c.delta_min = 4;
  c.delta_max = 2;
  const auto o = run_cfg(c);
  CHECK(o.code == kExitUsage);
  CHECK(o.err.find("error:") != std::string::npos);
}

TEST_CASE("tradeoff: budget 0.25 ordering") {
  auto c = command("tradeoff");
  c.eta_grid = {0.25};
  c.policies = {"lb", "single", "random"};
  c.sim_slots = 200000;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 1);
  CHECK(value(t, 0, "lower_bound") == 3.0);
  CHECK(value(t, 0, "aoi_random") == 5.0);
  const double mixed = value(t, 0, "aoi_single_mixed");
  CHECK(mixed > 3.0);
  CHECK(mixed < 5.0);
  CHECK(cell(t, 0, "aoi_double_best").empty());
  CHECK(cell(t, 0, "aoi_cmdp").empty());
  CHECK(t.header.at(5) == "aoi_cmdp");
}

TEST_CASE("tradeoff: at the pLGFS spend every column returns to pLGFS") {
  auto c = command("tradeoff");
  c.eta_grid = {0.5556};
  c.sim_slots = 1'000'000;
  c.dr_cap = 200;
  c.double_delta1_max = 8;
  c.double_delta2_max = 2;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 1);
  for (const char* col : {"aoi_single_mixed", "aoi_random", "aoi_double_best", "aoi_cmdp"}) {
    CAPTURE(col);
    CHECK(std::abs(value(t, 0, col) - 2.25) < 0.03);
  }
}

TEST_CASE("tradeoff: bound-only request runs no simulation") {
  auto c = command("tradeoff");
  c.eta_grid = {0.3};
  c.policies = {"lb"};
  c.sim_slots = 1'000'000'000'000ULL;  // would never finish if simulated
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 1);
  CHECK_FALSE(cell(t, 0, "lower_bound").empty());
  for (const char* col : {"aoi_single_mixed", "aoi_random", "aoi_double_best", "aoi_cmdp"}) {
    CHECK(cell(t, 0, col).empty());
  }
}

TEST_CASE("tradeoff: grid is sorted and validated") {
  auto c = command("tradeoff");
  c.eta_grid = {0.4, 0.2, 0.4};
  c.policies = {"lb", "random"};
  auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 2);
  CHECK(value(t, 0, "eta_max") == 0.2);
  CHECK(value(t, 1, "eta_max") == 0.4);

  c.eta_grid = {0.0};
  CHECK(run_cfg(c).code == kExitUsage);
  c.eta_grid = {1.2};
  CHECK(run_cfg(c).code == kExitUsage);
  c.eta_grid = {0.3};
  c.policies = {"lb", "magic"};
  CHECK(run_cfg(c).code == kExitUsage);
}

TEST_CASE("cmdp: loose budget sends whenever the buffer holds a packet") {
  auto c = command("cmdp");
  c.eta_max = 1.0;
  c.dr_cap = 200;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  CHECK(t.header == std::vector<std::string>{"delta_t", "delta_r", "action"});
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const bool gap = value(t, r, "delta_r") - value(t, r, "delta_t") >= 1.0;
    CHECK((value(t, r, "action") == 1.0) == gap);
  }
  const auto summary = table_of(o.err);
  CHECK(summary.header ==
        std::vector<std::string>{"mu", "avg_aoi", "avg_cost", "iterations", "cap_mass"});
  CHECK(std::abs(value(summary, 0, "avg_aoi") - 2.25) / 2.25 < 0.01);
  CHECK(value(summary, 0, "mu") == 0.0);
}

TEST_CASE("cmdp: budget 0.25 is respected and above the bound") {
  auto c = command("cmdp");
  c.eta_max = 0.25;
  c.dr_cap = 200;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto summary = table_of(o.err);
  CHECK(value(summary, 0, "avg_cost") <= 0.25 + 1e-6);
  CHECK(value(summary, 0, "avg_aoi") >= 3.0);
  CHECK(o.err.find("warning") == std::string::npos);
}

TEST_CASE("cmdp: small caps trigger the truncation warning") {
  auto c = command("cmdp");
  c.eta_max = 0.25;
  c.dt_cap = 5;
  c.dr_cap = 10;
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  CHECK(o.err.find("warning: stationary mass near the caps") != std::string::npos);
}

TEST_CASE("cmdp: missing budget and non-convergence") {
  CHECK(run_cfg(command("cmdp")).code == kExitUsage);
  auto c = command("cmdp");
  c.eta_max = 0.25;
  c.dr_cap = 100;
  c.max_iter = 3;
  const auto o = run_cfg(c);
  CHECK(o.code == kExitNumerical);
  CHECK(o.err.find("did not converge") != std::string::npos);
}

TEST_CASE("simulate: summary row and trace file") {
  auto c = command("simulate");
  c.policy = "single:3";
  c.sim_slots = 1000;
  c.trace = (scratch_dir() / "trace.tsv").string();
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  const auto t = table_of(o.out);
  REQUIRE(t.rows.size() == 1);
  CHECK(cell(t, 0, "policy") == "single:3");
  CHECK(value(t, 0, "slots") == 1000.0);
  std::ifstream tr(c.trace);
  std::string line;
  int lines = 0;
  while (std::getline(tr, line)) ++lines;
  CHECK(lines == 1000);

  c.policy = "single:x";
  CHECK(run_cfg(c).code == kExitUsage);
  c.policy = "plgfs";
  c.lambda = 0.0;
  CHECK(run_cfg(c).code == kExitUsage);
}

TEST_CASE("plot: tradeoff CSV renders one curve per column") {
  auto c = command("plot");
  c.input = std::string(AOILAB_GOLDEN_DIR) + "/tradeoff.csv";
  c.x_column = "eta_max";
  c.y_columns = {"lower_bound", "aoi_single_mixed", "aoi_random", "aoi_double_best", "aoi_cmdp"};
  const auto o = run_cfg(c);
  REQUIRE(o.code == kExitOk);
  CHECK(o.out.rfind("<?xml", 0) == 0);
  CHECK(o.out.find("version=\"1.1\"") != std::string::npos);
  std::size_t curves = 0;
  for (auto at = o.out.find("<polyline"); at != std::string::npos; at = o.out.find("<polyline", at + 1)) {
    ++curves;
  }
  CHECK(curves == 5);
  for (const auto& name : c.y_columns) CHECK(o.out.find(">" + name + "<") != std::string::npos);
}

TEST_CASE("plot: pmf overlay and input errors") {
  auto c = command("plot");
  c.input = std::string(AOILAB_GOLDEN_DIR) + "/pmf.csv";
  c.x_column = "j";
  c.y_columns = {"p_analytical", "p_empirical"};
  CHECK(run_cfg(c).code == kExitOk);

  c.y_columns = {"p_missing"};
  auto o = run_cfg(c);
  CHECK(o.code == kExitUsage);
  CHECK(o.err.find("p_missing") != std::string::npos);

  c.input = (scratch_dir() / "does_not_exist.csv").string();
  c.y_columns = {"p_analytical"};
  o = run_cfg(c);
  CHECK(o.code == kExitUsage);
  CHECK(o.err.find("cannot open") != std::string::npos);
}

TEST_CASE("svg side output") {
  auto c = command("sweep");
  c.sim_slots = 0;
  c.svg = (scratch_dir() / "sweep.svg").string();
  REQUIRE(run_cfg(c).code == kExitOk);
  const auto svg = slurp(c.svg);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("aoi_closed") != std::string::npos);
}

TEST_CASE("unknown command") {
  CHECK(run_cfg(command("fly")).code == kExitUsage);
}

TEST_CASE("same flags give byte-identical output") {
  auto c = command("tradeoff");
  c.eta_grid = {0.3};
  c.sim_slots = 20000;
  c.double_delta1_max = 2;
  c.double_delta2_max = 3;
  c.dr_cap = 100;
  c.dt_cap = 20;
  const auto a = run_cfg(c), b = run_cfg(c);
  CHECK(a.out == b.out);
  auto s = command("simulate");
  s.policy = "random:0.4";
  s.sim_slots = 50000;
  CHECK(run_cfg(s).out == run_cfg(s).out);
}

TEST_CASE("config file lines are spliced after the subcommand") {
  const auto path = scratch_dir() / "run.cfg";
  {
    std::ofstream f(path);
    f << "# experiment\nlambda = 0.8\n\ndelta=3  # inline\neta_grid = 0.1,0.2\n";
  }
  const auto args = expand_config_args({"aoilab", "pmf", "--config", path.string(), "--lambda", "0.5"});
  CHECK(args == std::vector<std::string>{"aoilab", "pmf", "--lambda", "0.8", "--delta", "3",
                                         "--eta-grid", "0.1,0.2", "--lambda", "0.5"});
  CHECK(expand_config_args({"aoilab", "pmf"}) == std::vector<std::string>{"aoilab", "pmf"});
  CHECK_THROWS_AS(expand_config_args({"aoilab", "pmf", "--config", "/nonexistent/x"}), UsageError);
  {
    std::ofstream f(path);
    f << "lambda 0.8\n";
  }
  CHECK_THROWS_AS(expand_config_args({"aoilab", "pmf", "--config=" + path.string()}), UsageError);
}

TEST_CASE("binary: explicit flags override the config file") {
  const auto dir = scratch_dir();
  {
    std::ofstream f(dir / "p.cfg");
    f << "lambda = 0.8\nepsilon = 0.1\ndelta = 3\njmax = 10\nsim_slots = 0\n";
  }
  const auto out = dir / "p.csv";
  REQUIRE(shell(cli() + " pmf --config " + (dir / "p.cfg").string() + " --lambda 0.5 --out " +
                out.string() + " > /dev/null") == 0);
  const auto csv = slurp(out);
  CHECK(csv.find("# lambda=0.5 epsilon=0.1\n") != std::string::npos);
  CHECK(csv.find("delta=3 jmax=10") != std::string::npos);
}

TEST_CASE("binary: exit codes") {
  const std::string quiet = " > /dev/null 2>&1";
  CHECK(shell(cli() + " --help" + quiet) == 0);
  CHECK(shell(cli() + quiet) == 2);
  CHECK(shell(cli() + " pmf --lambda abc" + quiet) == 2);
  CHECK(shell(cli() + " pmf --bogus 1" + quiet) == 2);
  CHECK(shell(cli() + " pmf --lambda 0 --sim-slots 0" + quiet) == 2);
  CHECK(shell(cli() + " pmf --epsilon 1 --sim-slots 0" + quiet) == 2);
  CHECK(shell(cli() + " sweep --delta-min 3 --delta-max 1" + quiet) == 2);
  CHECK(shell(cli() + " tradeoff --eta-grid 0.2,x" + quiet) == 2);
  CHECK(shell(cli() + " plot --in /nonexistent.csv --x a --y b" + quiet) == 2);
  CHECK(shell(cli() + " pmf --config /nonexistent.cfg" + quiet) == 2);
  CHECK(shell(cli() + " cmdp --eta-max 0.25 --dr-cap 80 --max-iter 2" + quiet) == 3);
  CHECK(shell(cli() + " pmf --sim-slots 0 --jmax 8" + quiet) == 0);
}

TEST_CASE("golden outputs are reproduced byte for byte") {
  const fs::path golden = AOILAB_GOLDEN_DIR;
  std::ifstream cases(golden / "cases.txt");
  REQUIRE(cases);
  std::string line;
  int count = 0;
  while (std::getline(cases, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string name, file, args;
    std::getline(fields, name, '|');
    std::getline(fields, file, '|');
    std::getline(fields, args);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    name = trim(name);
    file = trim(file);
    CAPTURE(name);
    const auto out = scratch_dir() / ("golden_" + file);
    const int code = shell("cd '" + golden.string() + "' && " + cli() + " " + trim(args) +
                           " --out '" + out.string() + "' > /dev/null 2>&1");
    CHECK(code == 0);
    CHECK(slurp(out) == slurp(golden / file));
    ++count;
  }
  CHECK(count == 6);
}
