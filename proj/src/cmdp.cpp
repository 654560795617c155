#include "aoilab/cmdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <sstream>

#include "aoilab/format.hpp"

namespace aoilab {

namespace {

// Weight of the original kernel in the aperiodic transform tau P + (1-tau) I.
constexpr double kTau = 0.5;
constexpr double kStationaryResidual = 1e-12;
constexpr unsigned kCapBand = 5;

struct SolvedMultiplier {
  double mu = 0.0;
  RviaResult rvia;
  PolicyEvaluation eval;
};

void check_unichain(const TruncatedMdp& mdp, const ActionTable& policy,
                    const std::vector<double>& pi) {
  const std::size_t n = mdp.size();
  // Reverse adjacency of the policy's chain.
  std::vector<std::size_t> count(n + 1, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& t : mdp.row(s, policy.transmit[s])) {
      if (t.prob > 0.0) ++count[t.next + 1];
    }
  }
  for (std::size_t s = 0; s < n; ++s) count[s + 1] += count[s];
  std::vector<std::uint32_t> preds(count[n]);
  auto fill = count;
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& t : mdp.row(s, policy.transmit[s])) {
      if (t.prob > 0.0) preds[fill[t.next]++] = static_cast<std::uint32_t>(s);
    }
  }
  // A recurrent state reachable from every state implies a single class.
  const auto root = static_cast<std::size_t>(
      std::max_element(pi.begin(), pi.end()) - pi.begin());
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> queue{root};
  seen[root] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const auto s = queue.front();
    queue.pop_front();
    for (auto k = count[s]; k < count[s + 1]; ++k) {
      const auto p = preds[k];
      if (!seen[p]) {
        seen[p] = 1;
        ++reached;
        queue.push_back(p);
      }
    }
  }
  if (reached != n) {
    std::ostringstream os;
    os << (n - reached) << " of " << n
       << " states cannot reach the dominant recurrent state; policy is multichain";
    throw NondegeneracyError(os.str());
  }
}

SolvedMultiplier solve_at(const TruncatedMdp& mdp, double mu,
                          const CmdpOptions& options,
                          const SolvedMultiplier* warm) {
  SolvedMultiplier out;
  out.mu = mu;
  out.rvia = rvia(mdp, mu, options.rvia_tol, options.max_iter,
                  warm ? &warm->rvia.bias : nullptr);
  if (warm && warm->rvia.policy == out.rvia.policy) {
    out.eval = warm->eval;
  } else {
    out.eval = evaluate_policy(mdp, out.rvia.policy, 1'000'000,
                               warm ? &warm->eval.stationary : nullptr);
  }
  return out;
}

}  // namespace

std::optional<std::size_t> TruncatedMdp::index(unsigned delta_t,
                                               unsigned delta_r) const noexcept {
  if (delta_t > dt_cap_ || delta_r > dr_cap_) return std::nullopt;
  const auto v = lookup_[static_cast<std::size_t>(delta_t) * (dr_cap_ + 1) + delta_r];
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

TruncatedMdp build_mdp(const NetworkParams& params, unsigned dt_cap,
                       unsigned dr_cap, std::size_t max_states) {
  if (dt_cap < 1 || dr_cap < dt_cap) {
    throw DomainError("caps must satisfy dr_cap >= dt_cap >= 1");
  }
  std::size_t count = 0;
  for (unsigned dt = 0; dt <= dt_cap; ++dt) count += dr_cap - std::max(dt, 1u) + 1;
  if (count > max_states) {
    std::ostringstream os;
    os << "truncated MDP needs " << count << " states, limit is " << max_states;
    throw CapacityError(os.str());
  }

  TruncatedMdp mdp;
  mdp.lambda_ = params.lambda();
  mdp.epsilon_ = params.epsilon();
  mdp.dt_cap_ = dt_cap;
  mdp.dr_cap_ = dr_cap;
  mdp.states_.reserve(count);
  mdp.lookup_.assign(static_cast<std::size_t>(dt_cap + 1) * (dr_cap + 1), -1);
  for (unsigned dt = 0; dt <= dt_cap; ++dt) {
    for (unsigned dr = std::max(dt, 1u); dr <= dr_cap; ++dr) {
      mdp.lookup_[static_cast<std::size_t>(dt) * (dr_cap + 1) + dr] =
          static_cast<std::int32_t>(mdp.states_.size());
      mdp.states_.push_back({dt, dr});
    }
  }

  const double l = params.lambda();
  const double e = params.epsilon();
  mdp.offsets_.reserve(2 * count + 1);
  mdp.offsets_.push_back(0);
  mdp.transitions_.reserve(8 * count);
  mdp.expected_aoi_.reserve(2 * count);

  for (std::size_t s = 0; s < count; ++s) {
    const auto [dt, dr] = mdp.states_[s];
    for (int a = 0; a < 2; ++a) {
      // Transmission is impossible on an empty buffer; that row repeats a = 0.
      const double p_success = (a == 1 && dr > dt) ? 1.0 - e : 0.0;
      const unsigned aoi_hit = std::min(dt + 1, dr_cap);
      const unsigned aoi_miss = std::min(dr + 1, dr_cap);
      const unsigned dt_idle = std::min(dt + 1, dt_cap);
      mdp.expected_aoi_.push_back(p_success * aoi_hit + (1.0 - p_success) * aoi_miss);

      const std::size_t row_begin = mdp.transitions_.size();
      auto add = [&](unsigned ndt, unsigned ndr, double p) {
        if (p <= 0.0) return;
        const auto next = static_cast<std::uint32_t>(*mdp.index(ndt, ndr));
        for (std::size_t k = row_begin; k < mdp.transitions_.size(); ++k) {
          if (mdp.transitions_[k].next == next) {
            mdp.transitions_[k].prob += p;
            return;
          }
        }
        mdp.transitions_.push_back({next, p});
      };
      add(0, aoi_hit, l * p_success);
      add(dt_idle, aoi_hit, (1.0 - l) * p_success);
      add(0, aoi_miss, l * (1.0 - p_success));
      add(dt_idle, aoi_miss, (1.0 - l) * (1.0 - p_success));
      mdp.offsets_.push_back(mdp.transitions_.size());
    }
  }
  return mdp;
}

ActionTable always_transmit_table(const TruncatedMdp& mdp) {
  ActionTable t;
  t.transmit.resize(mdp.size());
  for (std::size_t s = 0; s < mdp.size(); ++s) t.transmit[s] = mdp.can_transmit(s);
  return t;
}

ActionTable never_transmit_table(const TruncatedMdp& mdp) {
  return ActionTable{std::vector<std::uint8_t>(mdp.size(), 0)};
}

ActionTable table_from_policy(const TruncatedMdp& mdp, const PolicySpec& spec) {
  if (!spec.deterministic()) {
    throw DomainError("only deterministic policies map to an action table");
  }
  ActionTable t;
  t.transmit.resize(mdp.size());
  for (std::size_t s = 0; s < mdp.size(); ++s) {
    LinkState ls;
    ls.delta_t = mdp.state(s).delta_t;
    ls.delta_r_prev = mdp.state(s).delta_r;
    ls.buffer_occupied = mdp.can_transmit(s);
    t.transmit[s] = decide(spec, ls, 0.0).transmit;
  }
  return t;
}

RviaResult rvia(const TruncatedMdp& mdp, double mu, double tol,
                unsigned max_iter, const std::vector<double>* warm_start) {
  if (!(mu >= 0.0)) throw DomainError("multiplier must be non-negative");
  const std::size_t n = mdp.size();
  std::vector<double> h(n, 0.0);
  if (warm_start && warm_start->size() == n) h = *warm_start;
  std::vector<double> next(n);
  ActionTable policy{std::vector<std::uint8_t>(n, 0)};

  auto backup = [&](std::size_t s, int a) {
    double v = mdp.expected_aoi(s, a) + mu * a;
    for (const auto& t : mdp.row(s, a)) v += t.prob * h[t.next];
    return v;
  };

  for (unsigned iter = 1; iter <= max_iter; ++iter) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      double best = backup(s, 0);
      std::uint8_t act = 0;
      if (mdp.can_transmit(s)) {
        const double send = backup(s, 1);
        if (send < best) {
          best = send;
          act = 1;
        }
      }
      policy.transmit[s] = act;
      next[s] = kTau * best + (1.0 - kTau) * h[s];
      const double diff = next[s] - h[s];
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
    }
    const double ref = next[0];
    for (std::size_t s = 0; s < n; ++s) h[s] = next[s] - ref;
    if (hi - lo < tol) {
      RviaResult out;
      out.policy = std::move(policy);
      out.gain = -0.5 * (lo + hi) / kTau;
      out.iterations = iter;
      out.bias = std::move(h);
      return out;
    }
  }
  std::ostringstream os;
  os << "relative value iteration did not converge in " << max_iter
     << " sweeps (mu = " << mu << ")";
  throw ConvergenceError(os.str());
}

PolicyEvaluation evaluate_policy(const TruncatedMdp& mdp, const ActionTable& policy,
                                 unsigned max_iter,
                                 const std::vector<double>* warm_start) {
  const std::size_t n = mdp.size();
  if (policy.transmit.size() != n) {
    throw DomainError("action table does not match the state space");
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (policy.transmit[s] && !mdp.can_transmit(s)) {
      throw DomainError("action table transmits from an empty buffer");
    }
  }
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  if (warm_start && warm_start->size() == n) pi = *warm_start;
  std::vector<double> moved(n);

  PolicyEvaluation out;
  bool converged = false;
  for (unsigned iter = 1; iter <= max_iter; ++iter) {
    std::fill(moved.begin(), moved.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double mass = pi[s];
      if (mass == 0.0) continue;
      for (const auto& t : mdp.row(s, policy.transmit[s])) {
        moved[t.next] += mass * t.prob;
      }
    }
    double residual = 0.0;
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      residual += std::abs(moved[s] - pi[s]);
      pi[s] = 0.5 * (pi[s] + moved[s]);
      total += pi[s];
    }
    for (double& v : pi) v /= total;
    if (residual < kStationaryResidual) {
      out.iterations = iter;
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("stationary distribution did not converge");
  }
  check_unichain(mdp, policy, pi);

  for (std::size_t s = 0; s < n; ++s) {
    const int a = policy.transmit[s];
    out.avg_aoi += pi[s] * mdp.expected_aoi(s, a);
    out.avg_cost += pi[s] * a;
    const auto& st = mdp.state(s);
    if (st.delta_t + kCapBand >= mdp.dt_cap() || st.delta_r + kCapBand >= mdp.dr_cap()) {
      out.cap_mass += pi[s];
    }
  }
  out.stationary = std::move(pi);
  return out;
}

CmdpSolution solve_constrained(const NetworkParams& params, double eta_max,
                               const CmdpOptions& options) {
  const auto mdp = build_mdp(params, options.dt_cap, options.dr_cap,
                             options.max_states);
  return solve_constrained(mdp, eta_max, options);
}

CmdpSolution solve_constrained(const TruncatedMdp& mdp, double eta_max,
                               const CmdpOptions& options) {
  if (!(eta_max > 0.0 && eta_max <= 1.0)) {
    throw DomainError("eta_max outside (0, 1]");
  }
  unsigned sweeps = 0;
  auto solve = [&](double mu, const SolvedMultiplier* warm) {
    auto r = solve_at(mdp, mu, options, warm);
    sweeps += r.rvia.iterations;
    return r;
  };

  auto finish = [&](const SolvedMultiplier& low, const SolvedMultiplier& high) {
    CmdpSolution sol;
    sol.policy_low = low.rvia.policy;
    sol.policy_high = high.rvia.policy;
    sol.multiplier_low = low.mu;
    sol.multiplier = high.mu;
    sol.aoi_low = low.eval.avg_aoi;
    sol.cost_low = low.eval.avg_cost;
    sol.aoi_high = high.eval.avg_aoi;
    sol.cost_high = high.eval.avg_cost;
    const double spread = sol.cost_low - sol.cost_high;
    sol.mix_weight =
        spread > 0.0 ? std::clamp((eta_max - sol.cost_high) / spread, 0.0, 1.0) : 0.0;
    sol.avg_aoi = sol.mix_weight * sol.aoi_low + (1.0 - sol.mix_weight) * sol.aoi_high;
    sol.avg_cost = sol.mix_weight * sol.cost_low + (1.0 - sol.mix_weight) * sol.cost_high;
    sol.cap_mass = sol.mix_weight * low.eval.cap_mass +
                   (1.0 - sol.mix_weight) * high.eval.cap_mass;
    sol.iterations = sweeps;
    return sol;
  };

  SolvedMultiplier low = solve(0.0, nullptr);
  if (low.eval.avg_cost <= eta_max) return finish(low, low);

  SolvedMultiplier high = solve(static_cast<double>(mdp.dr_cap()), &low);
  while (high.eval.avg_cost > eta_max) {
    if (high.mu > 1e300) throw ConvergenceError("multiplier bracket diverged");
    low = std::move(high);
    high = solve(2.0 * low.mu, &low);
  }

  while (high.mu - low.mu >= 1e-6 &&
         std::abs(high.eval.avg_cost - eta_max) > options.cost_tol) {
    const double mid = 0.5 * (low.mu + high.mu);
    auto probe = solve(mid, &high);
    (probe.eval.avg_cost > eta_max ? low : high) = std::move(probe);
  }
  return finish(low, high);
}

void write_policy_csv(std::ostream& os, const TruncatedMdp& mdp,
                      const ActionTable& policy, double mu,
                      const std::vector<std::string>& extra_comments) {
  os << "# schema: aoilab/cmdp-policy/1\n";
  os << "# lambda=" << format_number(mdp.lambda())
     << " epsilon=" << format_number(mdp.epsilon()) << " mu=" << format_number(mu)
     << " dt_cap=" << mdp.dt_cap() << " dr_cap=" << mdp.dr_cap() << '\n';
  for (const auto& c : extra_comments) os << "# " << c << '\n';
  os << "delta_t,delta_r,action\n";
  for (std::size_t s = 0; s < mdp.size(); ++s) {
    os << mdp.state(s).delta_t << ',' << mdp.state(s).delta_r << ','
       << int{policy.transmit[s]} << '\n';
  }
}

}  // namespace aoilab
