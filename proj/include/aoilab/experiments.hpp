#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoilab {

/// Bad command-line input; maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Everything one CLI invocation needs. Unset optionals take per-command
/// defaults (see README).
struct ExperimentConfig {
  std::string command;

  double lambda = 0.5;
  double epsilon = 0.2;
  unsigned delta = 2;
  unsigned delta_min = 0;
  unsigned delta_max = 10;
  std::optional<double> eta_max;
  std::vector<double> eta_grid;
  std::vector<std::string> policies;  // tradeoff columns: lb single random double cmdp
  std::string policy = "plgfs";       // simulate
  std::optional<std::uint64_t> sim_slots;
  std::uint64_t seed = 1;
  std::optional<unsigned> jmax;
  unsigned dt_cap = 60;
  unsigned dr_cap = 400;
  double tol = 1e-6;
  unsigned max_iter = 200000;  // value-iteration sweeps per multiplier
  unsigned double_delta1_max = 8;
  unsigned double_delta2_max = 15;

  std::string out;    // empty: stdout
  std::string svg;    // optional chart next to the CSV
  std::string trace;  // simulate: per-slot dump
  std::string input;  // plot
  std::string x_column;
  std::vector<std::string> y_columns;
  std::string title;
};

/// Per-command runners. `out` receives the primary artifact (CSV or SVG);
/// `log` receives summaries and warnings. Throw UsageError/DomainError for
/// bad input and ConvergenceError for numerical failure.
void cmd_pmf(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_tradeoff(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_cmdp(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_simulate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_plot(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);

/// Dispatches on cfg.command, writing to cfg.out (or `stdout_stream`), and
/// converts exceptions into exit codes with a message on `err`.
int run_experiment(const ExperimentConfig& cfg, std::ostream& stdout_stream,
                   std::ostream& err);

/// Reads `key = value` lines ('#' comments) from the file named by a
/// `--config PATH` argument and splices them in as `--key value` right after
/// the subcommand, so explicit flags (parsed later, last one wins) override.
std::vector<std::string> expand_config_args(std::vector<std::string> args);

}  // namespace aoilab
