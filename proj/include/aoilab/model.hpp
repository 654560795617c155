#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace aoilab {

/// Parameter outside its legal range.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative numerical procedure failed to settle.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Truncated state space larger than the configured limit.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Markov chain under a fixed policy has more than one recurrent class.
class NondegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physics of one experiment: Bernoulli arrivals at rate lambda, i.i.d. erasures
/// with probability epsilon, and an optional long-term transmission budget.
///
/// Only constructible through validate_params(), so every instance satisfies
/// 0 < lambda <= 1, 0 <= epsilon < 1 and, when present, 0 < eta_max <= 1.
class NetworkParams {
 public:
  double lambda() const noexcept { return lambda_; }
  double epsilon() const noexcept { return epsilon_; }
  std::optional<double> eta_max() const noexcept { return eta_max_; }

  friend NetworkParams validate_params(double lambda, double epsilon,
                                       std::optional<double> eta_max);

 private:
  NetworkParams(double lambda, double epsilon, std::optional<double> eta_max)
      : lambda_(lambda), epsilon_(epsilon), eta_max_(eta_max) {}

  double lambda_;
  double epsilon_;
  std::optional<double> eta_max_;
};

/// Throws DomainError when any value is outside its range (NaN included).
NetworkParams validate_params(double lambda, double epsilon,
                              std::optional<double> eta_max = std::nullopt);

/// State of the link at the decision point of one slot.
///
/// delta_t is the transmitter freshness at the start of `slot`; delta_r_prev is
/// the receiver AoI at the end of slot - 1. Ages are unbounded.
struct LinkState {
  std::uint64_t slot = 0;
  std::uint64_t delta_t = 0;
  std::uint64_t delta_r_prev = 0;
  bool buffer_occupied = false;
  std::uint64_t g_latest = 0;
  std::uint64_t u_latest = 0;

  /// Receiver-minus-transmitter age gap; negative only during start-up.
  std::int64_t age_gap() const noexcept {
    return static_cast<std::int64_t>(delta_r_prev) -
           static_cast<std::int64_t>(delta_t);
  }

  /// buffer_occupied <=> delta_r_prev - delta_t >= 1.
  bool occupancy_identity_holds() const noexcept {
    return buffer_occupied == (age_gap() >= 1);
  }

  friend bool operator==(const LinkState&, const LinkState&) = default;
};

/// Slot-0 state: both ages zero, empty buffer.
constexpr LinkState initial_link_state() noexcept { return LinkState{}; }

struct Action {
  bool transmit = false;
  friend bool operator==(const Action&, const Action&) = default;
};

}  // namespace aoilab
