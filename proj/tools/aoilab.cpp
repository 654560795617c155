// aoilab: command-line front end for the AoI/cost laboratory.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aoilab/experiments.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) parts.push_back(item.substr(b, e - b + 1));
  }
  return parts;
}

struct ListFlags {
  std::string eta_grid, policies, y;
};

// Every subcommand accepts the full flag set so one config file can drive any
// of them; irrelevant flags are ignored.
void add_flags(CLI::App& sub, aoilab::ExperimentConfig& c, ListFlags& lists) {
  sub.add_option("--lambda", c.lambda, "arrival probability per slot");
  sub.add_option("--epsilon", c.epsilon, "channel erasure probability");
  sub.add_option("--delta", c.delta, "age-gap threshold");
  sub.add_option("--delta-min", c.delta_min, "sweep: first threshold");
  sub.add_option("--delta-max", c.delta_max, "sweep: last threshold");
  sub.add_option("--eta-max", c.eta_max, "cost budget (cmdp)");
  sub.add_option("--eta-grid", lists.eta_grid, "tradeoff: comma-separated budgets");
  sub.add_option("--policies", lists.policies,
                 "tradeoff columns: lb,single,random,double,cmdp");
  sub.add_option("--policy", c.policy,
                 "simulate: plgfs | single:D | mixed:D:Q | double:D1:D2 | random:G");
  sub.add_option("--sim-slots", c.sim_slots, "simulated slots (0 disables in pmf/sweep)");
  sub.add_option("--seed", c.seed, "base seed");
  sub.add_option("--jmax", c.jmax, "pmf: largest age printed");
  sub.add_option("--dt-cap", c.dt_cap, "cmdp: cap on the transmitter-side age");
  sub.add_option("--dr-cap", c.dr_cap, "cmdp: cap on the receiver-side age");
  sub.add_option("--tol", c.tol, "cmdp: cost tolerance of the multiplier search");
  sub.add_option("--max-iter", c.max_iter, "cmdp: value-iteration sweeps per multiplier");
  sub.add_option("--double-delta1-max", c.double_delta1_max,
                 "tradeoff: search bound on the age threshold");
  sub.add_option("--double-delta2-max", c.double_delta2_max,
                 "tradeoff: search bound on the gap threshold");
  sub.add_option("--out", c.out, "output file (default stdout)");
  sub.add_option("--svg", c.svg, "pmf/sweep/tradeoff: also render a chart");
  sub.add_option("--trace", c.trace, "simulate: write the per-slot trace");
  sub.add_option("--in", c.input, "plot: input CSV");
  sub.add_option("--x", c.x_column, "plot: x column");
  sub.add_option("--y", lists.y, "plot: comma-separated y columns");
  sub.add_option("--title", c.title, "chart title");
  sub.add_option("--config", "key = value file; explicit flags win");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = aoilab::expand_config_args(std::move(args));
  } catch (const aoilab::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return aoilab::kExitUsage;
  }

  CLI::App app{"Age-of-Information and transmission-cost laboratory", "aoilab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  aoilab::ExperimentConfig cfg;
  ListFlags lists;
  const std::pair<const char*, const char*> commands[] = {
      {"pmf", "stationary AoI distribution of a threshold policy"},
      {"sweep", "closed-form vs simulated AoI and cost over a threshold range"},
      {"tradeoff", "AoI achieved by each policy family under cost budgets"},
      {"cmdp", "constrained optimal policy via relative value iteration"},
      {"simulate", "simulate one policy"},
      {"plot", "render CSV columns as an SVG chart"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(*sub, cfg, lists);
    sub->callback([&cfg, n = std::string(name)] { cfg.command = n; });
  }

  // CLI11 takes the arguments in reverse order, without the program name.
  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return aoilab::kExitUsage;
  }

  try {
    for (const auto& v : split_list(lists.eta_grid)) cfg.eta_grid.push_back(std::stod(v));
  } catch (const std::exception&) {
    std::cerr << "error: --eta-grid expects comma-separated numbers\n";
    return aoilab::kExitUsage;
  }
  cfg.policies = split_list(lists.policies);
  cfg.y_columns = split_list(lists.y);

  return aoilab::run_experiment(cfg, std::cout, std::cerr);
}
