#include "aoilab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "aoilab/analytics.hpp"
#include "aoilab/chart.hpp"
#include "aoilab/cmdp.hpp"
#include "aoilab/format.hpp"
#include "aoilab/policies.hpp"
#include "aoilab/rng.hpp"
#include "aoilab/simulator.hpp"

namespace aoilab {

namespace {

constexpr std::uint64_t kPmfSlots = 100'000;
constexpr std::uint64_t kSweepSlots = 1'000'000;
constexpr double kCapMassWarning = 1e-6;
// Seed index shared by every exhaustive-search cell (common random numbers).
constexpr std::uint64_t kDoubleSearchStream = 1'000'000;

const std::vector<double> kDefaultEtaGrid = {0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
const std::vector<std::string> kTradeoffPolicies = {"lb", "single", "random",
                                                    "double", "cmdp"};

using Cell = std::optional<double>;

std::string cell(const Cell& v) { return v ? format_number(*v) : std::string(); }

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
  os << '\n';
}

void write_preamble(std::ostream& os, const std::string& schema,
                    const ExperimentConfig& cfg) {
  os << "# schema: aoilab/" << schema << "/1\n";
  os << "# lambda=" << format_number(cfg.lambda)
     << " epsilon=" << format_number(cfg.epsilon) << '\n';
}

NetworkParams params_of(const ExperimentConfig& cfg) {
  return validate_params(cfg.lambda, cfg.epsilon);
}

double relative_error(double estimate, double exact) {
  return std::abs(estimate - exact) / std::abs(exact);
}

PolicySpec mixed_policy_for(const NetworkParams& params, double eta_max) {
  const auto mix = select_threshold(params, eta_max);
  if (!mix.randomized()) {
    return PolicySpec::single(mix.q >= 1.0 ? mix.delta_low : mix.delta_high);
  }
  return PolicySpec::mixed(mix.delta_low, calibrate_mixed_q(params, mix, eta_max));
}

std::vector<std::string> default_plot_columns(const std::string& command,
                                              const CsvTable& table,
                                              std::string& x) {
  std::vector<std::string> wanted;
  if (command == "pmf") {
    x = "j";
    wanted = {"p_analytical", "p_empirical"};
  } else if (command == "sweep") {
    x = "delta";
    wanted = {"aoi_closed", "aoi_sim"};
  } else {
    x = "eta_max";
    wanted = {"lower_bound", "aoi_single_mixed", "aoi_random", "aoi_double_best",
              "aoi_cmdp"};
  }
  std::vector<std::string> present;
  for (const auto& w : wanted) {
    if (table.column(w) >= 0) present.push_back(w);
  }
  return present;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

void cmd_pmf(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto params = params_of(cfg);
  const unsigned jmax = cfg.jmax.value_or(default_jmax(params, cfg.delta));
  const auto pmf = aoi_pmf(params, cfg.delta, jmax);
  const std::uint64_t slots = cfg.sim_slots.value_or(kPmfSlots);

  std::optional<SimStats> stats;
  if (slots > 0) {
    SimConfig sim{params, PolicySpec::single(cfg.delta), slots, cfg.seed, false, jmax};
    stats = run(sim);
  }

  write_preamble(out, "pmf", cfg);
  out << "# delta=" << cfg.delta << " jmax=" << jmax << " sim_slots=" << slots
      << " seed=" << cfg.seed << '\n';
  out << "# route=" << (on_singular_line(params) ? "recurrence" : "closed_form")
      << " tail_mass=" << format_number(pmf.tail_mass) << '\n';
  if (stats) {
    write_row(out, {"j", "p_analytical", "p_empirical", "abs_error"});
  } else {
    write_row(out, {"j", "p_analytical"});
  }
  const auto t = static_cast<double>(slots);
  for (unsigned j = 1; j <= jmax; ++j) {
    const double p = pmf.at(j);
    if (stats) {
      const double f = static_cast<double>(stats->empirical_pmf[j - 1]) / t;
      write_row(out, {std::to_string(j), format_number(p), format_number(f),
                      format_number(std::abs(f - p))});
    } else {
      write_row(out, {std::to_string(j), format_number(p)});
    }
  }
  double head = 0.0;
  for (double m : pmf.masses) head += m;
  log << "mass_in_range=" << format_number(head)
      << " tail_mass=" << format_number(pmf.tail_mass) << '\n';
  if (stats) {
    log << "tv_distance=" << format_number(empirical_vs_analytical(*stats, pmf)) << '\n';
  }
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.delta_min > cfg.delta_max) {
    throw UsageError("empty threshold range: --delta-min > --delta-max");
  }
  const auto params = params_of(cfg);
  const std::uint64_t slots = cfg.sim_slots.value_or(kSweepSlots);

  std::vector<SimConfig> jobs;
  for (unsigned d = cfg.delta_min; d <= cfg.delta_max; ++d) {
    jobs.push_back({params, PolicySpec::single(d), std::max<std::uint64_t>(slots, 1),
                    derive_seed(cfg.seed, d - cfg.delta_min), false, 1});
  }
  std::vector<SimStats> results;
  if (slots > 0) results = run_all(jobs);

  write_preamble(out, "sweep", cfg);
  out << "# delta_min=" << cfg.delta_min << " delta_max=" << cfg.delta_max
      << " sim_slots=" << slots << " seed=" << cfg.seed << '\n';
  write_row(out, {"delta", "aoi_closed", "cost_closed", "aoi_sim", "cost_sim",
                  "aoi_rel_err", "cost_rel_err"});
  double worst = 0.0;
  for (unsigned d = cfg.delta_min; d <= cfg.delta_max; ++d) {
    const double aoi = avg_aoi_closed(params, d);
    const double cost = avg_cost_closed(params, d);
    Cell aoi_sim, cost_sim, aoi_err, cost_err;
    if (!results.empty()) {
      const auto& s = results[d - cfg.delta_min];
      aoi_sim = s.avg_aoi;
      cost_sim = s.avg_cost;
      aoi_err = relative_error(s.avg_aoi, aoi);
      cost_err = relative_error(s.avg_cost, cost);
      worst = std::max({worst, *aoi_err, *cost_err});
    }
    write_row(out, {std::to_string(d), format_number(aoi), format_number(cost),
                    cell(aoi_sim), cell(cost_sim), cell(aoi_err), cell(cost_err)});
  }
  if (!results.empty()) log << "max_rel_err=" << format_number(worst) << '\n';
}

void cmd_tradeoff(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto params = params_of(cfg);
  auto grid = cfg.eta_grid.empty() ? kDefaultEtaGrid : cfg.eta_grid;
  for (double e : grid) {
    if (!(e > 0.0 && e <= 1.0)) {
      throw UsageError("eta grid value " + format_number(e) + " outside (0, 1]");
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto& requested = cfg.policies.empty() ? kTradeoffPolicies : cfg.policies;
  std::set<std::string> want;
  for (const auto& p : requested) {
    if (std::find(kTradeoffPolicies.begin(), kTradeoffPolicies.end(), p) ==
        kTradeoffPolicies.end()) {
      throw UsageError("unknown tradeoff policy '" + p +
                       "' (expected lb, single, random, double, cmdp)");
    }
    want.insert(p);
  }
  const std::uint64_t slots = cfg.sim_slots.value_or(kSweepSlots);
  if ((want.count("single") || want.count("double")) && slots == 0) {
    throw UsageError("single and double columns need --sim-slots > 0");
  }

  // Simulation jobs: one per budget for the mixed single threshold, then the
  // exhaustive double-threshold grid (shared seed across cells).
  std::vector<SimConfig> jobs;
  std::vector<PolicySpec> single_specs;
  if (want.count("single")) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      single_specs.push_back(mixed_policy_for(params, grid[k]));
      jobs.push_back({params, single_specs.back(), slots, derive_seed(cfg.seed, k),
                      false, 1});
    }
  }
  const std::size_t double_begin = jobs.size();
  if (want.count("double")) {
    const auto crn = derive_seed(cfg.seed, kDoubleSearchStream);
    for (unsigned d1 = 0; d1 <= cfg.double_delta1_max; ++d1) {
      for (unsigned d2 = 0; d2 <= cfg.double_delta2_max; ++d2) {
        jobs.push_back({params, PolicySpec::double_threshold(d1, d2), slots, crn,
                        false, 1});
      }
    }
  }
  const auto sims = run_all(jobs);

  std::optional<TruncatedMdp> mdp;
  CmdpOptions copt;
  copt.dt_cap = cfg.dt_cap;
  copt.dr_cap = cfg.dr_cap;
  copt.cost_tol = cfg.tol;
  copt.max_iter = cfg.max_iter;
  if (want.count("cmdp")) mdp = build_mdp(params, copt.dt_cap, copt.dr_cap);

  write_preamble(out, "tradeoff", cfg);
  out << "# sim_slots=" << slots << " seed=" << cfg.seed << " dt_cap=" << cfg.dt_cap
      << " dr_cap=" << cfg.dr_cap << " double_search=" << cfg.double_delta1_max << 'x'
      << cfg.double_delta2_max << '\n';
  write_row(out, {"eta_max", "lower_bound", "aoi_single_mixed", "aoi_random",
                  "aoi_double_best", "aoi_cmdp", "cost_single_mixed",
                  "aoi_single_stderr", "single_policy", "cost_random",
                  "double_policy", "cost_double", "cost_cmdp"});

  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double eta = grid[k];
    Cell lb, aoi_single, aoi_random, aoi_double, aoi_cmdp;
    Cell cost_single, se_single, cost_random, cost_double, cost_cmdp;
    std::string single_name, double_name;

    if (want.count("lb")) lb = lower_bound(params, eta);
    if (want.count("single")) {
      const auto& s = sims[k];
      aoi_single = s.avg_aoi;
      cost_single = s.avg_cost;
      se_single = s.aoi_stderr;
      single_name = to_string(single_specs[k]);
    }
    if (want.count("random")) {
      const auto rb = random_benchmark(params, eta);
      aoi_random = rb.point.avg_aoi;
      cost_random = rb.point.avg_cost;
    }
    if (want.count("double")) {
      for (std::size_t c = double_begin; c < jobs.size(); ++c) {
        const auto& s = sims[c];
        if (s.avg_cost <= eta && (!aoi_double || s.avg_aoi < *aoi_double)) {
          aoi_double = s.avg_aoi;
          cost_double = s.avg_cost;
          double_name = to_string(jobs[c].policy);
        }
      }
      if (!aoi_double) {
        log << "warning: no double-threshold cell meets eta_max=" << format_number(eta)
            << '\n';
      }
    }
    if (mdp) {
      try {
        const auto sol = solve_constrained(*mdp, eta, copt);
        aoi_cmdp = sol.avg_aoi;
        cost_cmdp = sol.avg_cost;
        if (sol.cap_mass > kCapMassWarning) {
          log << "warning: cmdp cap mass " << format_number(sol.cap_mass)
              << " at eta_max=" << format_number(eta) << '\n';
        }
      } catch (const std::runtime_error& e) {
        log << "warning: cmdp failed at eta_max=" << format_number(eta) << ": "
            << e.what() << '\n';
      }
    }
    write_row(out, {format_number(eta), cell(lb), cell(aoi_single), cell(aoi_random),
                    cell(aoi_double), cell(aoi_cmdp), cell(cost_single),
                    cell(se_single), single_name, cell(cost_random), double_name,
                    cell(cost_double), cell(cost_cmdp)});
  }
}

void cmd_cmdp(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (!cfg.eta_max) throw UsageError("cmdp needs --eta-max");
  const auto params = params_of(cfg);
  if (!(*cfg.eta_max > 0.0 && *cfg.eta_max <= 1.0)) {
    throw UsageError("--eta-max outside (0, 1]");
  }
  CmdpOptions opt;
  opt.dt_cap = cfg.dt_cap;
  opt.dr_cap = cfg.dr_cap;
  opt.cost_tol = cfg.tol;
  opt.max_iter = cfg.max_iter;
  const auto mdp = build_mdp(params, opt.dt_cap, opt.dr_cap);
  const auto sol = solve_constrained(mdp, *cfg.eta_max, opt);

  write_policy_csv(
      out, mdp, sol.policy_high, sol.multiplier,
      {"eta_max=" + format_number(*cfg.eta_max),
       "mix_weight=" + format_number(sol.mix_weight) +
           " (probability of the companion policy at mu=" +
           format_number(sol.multiplier_low) + ")",
       "avg_aoi=" + format_number(sol.avg_aoi) +
           " avg_cost=" + format_number(sol.avg_cost)});

  log << "mu,avg_aoi,avg_cost,iterations,cap_mass\n"
      << format_number(sol.multiplier) << ',' << format_number(sol.avg_aoi) << ','
      << format_number(sol.avg_cost) << ',' << sol.iterations << ','
      << format_number(sol.cap_mass) << '\n';
  if (sol.cap_mass > kCapMassWarning) {
    log << "warning: stationary mass near the caps is " << format_number(sol.cap_mass)
        << " > " << format_number(kCapMassWarning)
        << "; enlarge --dt-cap/--dr-cap\n";
  }
}

void cmd_simulate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto params = params_of(cfg);
  const auto spec = parse_policy(cfg.policy);
  SimConfig sim{params, spec, cfg.sim_slots.value_or(kSweepSlots), cfg.seed,
                !cfg.trace.empty(), 0};
  const auto stats = run(sim);
  if (!cfg.trace.empty()) {
    std::ofstream tf(cfg.trace);
    if (!tf) throw UsageError("cannot write trace file " + cfg.trace);
    write_trace(tf, stats.trace);
  }
  write_preamble(out, "simulate", cfg);
  write_row(out, {"policy", "slots", "seed", "avg_aoi", "avg_cost", "throughput",
                  "empty_buffer_freq", "aoi_stderr", "cost_stderr"});
  write_row(out, {to_string(spec), std::to_string(stats.slots),
                  std::to_string(stats.seed), format_number(stats.avg_aoi),
                  format_number(stats.avg_cost), format_number(stats.throughput),
                  format_number(stats.empty_buffer_freq),
                  format_number(stats.aoi_stderr), format_number(stats.cost_stderr)});
  if (stats.identity_violations) {
    log << "warning: " << stats.identity_violations
        << " slots violated the occupancy identity\n";
  }
}

void cmd_plot(const ExperimentConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.input.empty()) throw UsageError("plot needs --in CSV");
  std::ifstream in(cfg.input);
  if (!in) throw UsageError("cannot open " + cfg.input);
  const auto table = parse_csv(in);
  if (cfg.x_column.empty() || cfg.y_columns.empty()) {
    throw UsageError("plot needs --x and --y");
  }
  render_svg(out, chart_from_table(table, cfg.x_column, cfg.y_columns, cfg.title));
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& stdout_stream,
                   std::ostream& err) {
  try {
    using Runner = void (*)(const ExperimentConfig&, std::ostream&, std::ostream&);
    Runner runner = nullptr;
    if (cfg.command == "pmf") runner = cmd_pmf;
    else if (cfg.command == "sweep") runner = cmd_sweep;
    else if (cfg.command == "tradeoff") runner = cmd_tradeoff;
    else if (cfg.command == "cmdp") runner = cmd_cmdp;
    else if (cfg.command == "simulate") runner = cmd_simulate;
    else if (cfg.command == "plot") runner = cmd_plot;
    else throw UsageError("unknown command '" + cfg.command + "'");

    std::ostringstream artifact;
    std::ostream& log = cfg.out.empty() ? err : stdout_stream;
    runner(cfg, artifact, log);

    if (cfg.out.empty()) {
      stdout_stream << artifact.str();
    } else {
      std::ofstream f(cfg.out, std::ios::binary);
      if (!f) throw UsageError("cannot write " + cfg.out);
      f << artifact.str();
    }
    if (!cfg.svg.empty() && cfg.command != "plot" && cfg.command != "cmdp" &&
        cfg.command != "simulate") {
      std::istringstream csv(artifact.str());
      const auto table = parse_csv(csv);
      std::string x;
      const auto ys = default_plot_columns(cfg.command, table, x);
      std::ofstream f(cfg.svg, std::ios::binary);
      if (!f) throw UsageError("cannot write " + cfg.svg);
      render_svg(f, chart_from_table(table, x, ys,
                                     cfg.title.empty() ? cfg.command : cfg.title));
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NondegeneracyError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
                 args.begin() + static_cast<std::ptrdiff_t>(k + 2));
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::vector<std::string> injected;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    injected.push_back("--" + key);
    injected.push_back(trim(line.substr(eq + 1)));
  }
  // args[0] is the program, args[1] the subcommand.
  const auto at = args.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, args.size()));
  args.insert(at, injected.begin(), injected.end());
  return args;
}

}  // namespace aoilab
