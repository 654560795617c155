#pragma once

#include <span>
#include <string>
#include <string_view>

#include "aoilab/model.hpp"

namespace aoilab {

enum class PolicyKind {
  plgfs,
  single_threshold,
  randomized_single_threshold,
  double_threshold,
  random_transmission,
};

/// Immutable description of a scheduling rule. Fields irrelevant to `kind`
/// stay at their defaults; build instances through the named constructors.
///
/// Canonical text forms: `plgfs`, `single:5`, `mixed:4:0.116`, `double:3:2`,
/// `random:0.3125`.
struct PolicySpec {
  PolicyKind kind = PolicyKind::plgfs;
  unsigned delta = 0;
  double q = 1.0;
  unsigned delta1 = 0;
  unsigned delta2 = 0;
  double gamma = 1.0;

  static PolicySpec plgfs() { return {}; }
  static PolicySpec single(unsigned delta);
  /// Gap above delta always transmits; gap equal to delta transmits with
  /// probability q per slot.
  static PolicySpec mixed(unsigned delta, double q);
  static PolicySpec double_threshold(unsigned max_age, unsigned min_gap);
  static PolicySpec random(double gamma);

  /// True when decide() never looks at its uniform draw.
  bool deterministic() const noexcept;

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Throws DomainError on malformed text or out-of-range parameters.
PolicySpec parse_policy(std::string_view text);
std::string to_string(const PolicySpec& spec);

/// One scheduling decision. `uniform_draw` in [0, 1) is supplied by the caller.
Action decide(const PolicySpec& spec, const LinkState& state,
              double uniform_draw) noexcept;

/// Audits a slot-ordered trace: within each inter-arrival interval the action
/// taken while the buffer is occupied never changes. Evaluates decide() with
/// a zero draw, so it is meaningful for deterministic specs.
bool decision_epochs_property(const PolicySpec& spec,
                              std::span<const LinkState> trace);

}  // namespace aoilab
