#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aoilab/model.hpp"
#include "aoilab/policies.hpp"

namespace aoilab {

/// (transmitter freshness, receiver AoI of the previous slot).
struct AgePair {
  unsigned delta_t = 0;
  unsigned delta_r = 0;
  friend bool operator==(const AgePair&, const AgePair&) = default;
};

struct Transition {
  std::uint32_t next = 0;
  double prob = 0.0;
};

/// Finite approximation of the scheduling MDP. States are the reachable age
/// pairs with 1 <= delta_r <= dr_cap, delta_t <= min(delta_r, dt_cap); ages
/// saturate at their caps. Row (s, a) lives at
/// transitions[offsets[2 s + a] .. offsets[2 s + a + 1]).
class TruncatedMdp {
 public:
  double lambda() const noexcept { return lambda_; }
  double epsilon() const noexcept { return epsilon_; }
  unsigned dt_cap() const noexcept { return dt_cap_; }
  unsigned dr_cap() const noexcept { return dr_cap_; }
  std::size_t size() const noexcept { return states_.size(); }

  const AgePair& state(std::size_t s) const noexcept { return states_[s]; }
  std::optional<std::size_t> index(unsigned delta_t, unsigned delta_r) const noexcept;

  /// Transmission is available only with a buffered packet (gap >= 1).
  bool can_transmit(std::size_t s) const noexcept {
    return states_[s].delta_r > states_[s].delta_t;
  }
  /// Expected receiver AoI at the end of the slot.
  double expected_aoi(std::size_t s, int action) const noexcept {
    return expected_aoi_[2 * s + static_cast<std::size_t>(action)];
  }
  std::span<const Transition> row(std::size_t s, int action) const noexcept {
    const auto k = 2 * s + static_cast<std::size_t>(action);
    return {transitions_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }

  friend TruncatedMdp build_mdp(const NetworkParams& params, unsigned dt_cap,
                                unsigned dr_cap, std::size_t max_states);

 private:
  TruncatedMdp() = default;

  double lambda_ = 0.0;
  double epsilon_ = 0.0;
  unsigned dt_cap_ = 0;
  unsigned dr_cap_ = 0;
  std::vector<AgePair> states_;
  std::vector<std::int32_t> lookup_;  // (dt_cap + 1) x (dr_cap + 1), -1 if absent
  std::vector<std::size_t> offsets_;
  std::vector<Transition> transitions_;
  std::vector<double> expected_aoi_;
};

inline constexpr std::size_t kDefaultMaxStates = 4'000'000;

/// Throws DomainError unless dr_cap >= dt_cap >= 1; CapacityError when the
/// state count exceeds max_states.
TruncatedMdp build_mdp(const NetworkParams& params, unsigned dt_cap,
                       unsigned dr_cap, std::size_t max_states = kDefaultMaxStates);

/// Deterministic stationary policy: transmit[s] != 0 means send in state s.
struct ActionTable {
  std::vector<std::uint8_t> transmit;
  friend bool operator==(const ActionTable&, const ActionTable&) = default;
};

ActionTable always_transmit_table(const TruncatedMdp& mdp);
ActionTable never_transmit_table(const TruncatedMdp& mdp);
/// Encodes a deterministic PolicySpec on the truncated states.
ActionTable table_from_policy(const TruncatedMdp& mdp, const PolicySpec& spec);

struct RviaResult {
  ActionTable policy;
  double gain = 0.0;  // optimal average of -delta_r - mu * a
  unsigned iterations = 0;
  std::vector<double> bias;  // relative values, usable as a warm start
};

/// Relative value iteration on the Lagrangian stage reward -delta_r - mu a,
/// run on the aperiodic transform 0.5 I + 0.5 P. Stops when the span of the
/// value increment falls below tol. Ties go to silence.
RviaResult rvia(const TruncatedMdp& mdp, double mu, double tol,
                unsigned max_iter, const std::vector<double>* warm_start = nullptr);

struct PolicyEvaluation {
  double avg_aoi = 0.0;
  double avg_cost = 0.0;
  /// Stationary mass within 5 states of either cap.
  double cap_mass = 0.0;
  unsigned iterations = 0;
  std::vector<double> stationary;
};

/// Stationary distribution by lazy power iteration (L1 residual < 1e-12).
/// Throws ConvergenceError, or NondegeneracyError when the chain has more
/// than one recurrent class.
PolicyEvaluation evaluate_policy(const TruncatedMdp& mdp, const ActionTable& policy,
                                 unsigned max_iter = 1'000'000,
                                 const std::vector<double>* warm_start = nullptr);

struct CmdpOptions {
  unsigned dt_cap = 60;
  unsigned dr_cap = 400;
  double rvia_tol = 1e-9;
  double cost_tol = 1e-6;
  unsigned max_iter = 200000;
  std::size_t max_states = kDefaultMaxStates;
};

/// Mixture of two Lagrangian-optimal deterministic policies. policy_low is
/// optimal for the smaller multiplier (spends at least eta_max) and is used
/// with probability mix_weight; policy_high meets the budget.
struct CmdpSolution {
  ActionTable policy_low;
  ActionTable policy_high;
  double mix_weight = 0.0;
  double avg_aoi = 0.0;
  double avg_cost = 0.0;
  double multiplier = 0.0;  // mu of policy_high
  double multiplier_low = 0.0;
  double aoi_low = 0.0, cost_low = 0.0;
  double aoi_high = 0.0, cost_high = 0.0;
  unsigned iterations = 0;  // total value-iteration sweeps
  double cap_mass = 0.0;
};

/// Bisection on mu: [0, mu_hi] with mu_hi starting at dr_cap and doubling.
CmdpSolution solve_constrained(const NetworkParams& params, double eta_max,
                               const CmdpOptions& options = {});

/// Same, on a prebuilt MDP.
CmdpSolution solve_constrained(const TruncatedMdp& mdp, double eta_max,
                               const CmdpOptions& options = {});

/// `delta_t,delta_r,action` with `#` comments recording the model.
void write_policy_csv(std::ostream& os, const TruncatedMdp& mdp,
                      const ActionTable& policy, double mu,
                      const std::vector<std::string>& extra_comments = {});

}  // namespace aoilab
