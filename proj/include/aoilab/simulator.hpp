#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "aoilab/analytics.hpp"
#include "aoilab/model.hpp"
#include "aoilab/policies.hpp"

namespace aoilab {

/// What one slot produced.
struct SlotRecord {
  std::uint64_t slot = 0;
  std::uint64_t delta_t = 0;
  std::uint64_t delta_r = 0;  // receiver AoI at the end of the slot
  bool transmit = false;
  bool success = false;
  bool occupied = false;  // buffer state at decision time

  friend bool operator==(const SlotRecord&, const SlotRecord&) = default;
};

/// The three uniforms consumed by every slot, in this order.
struct SlotDraws {
  double arrival = 0.0;
  double channel = 0.0;
  double policy = 0.0;
};

struct StepOutcome {
  LinkState decision;  // what the policy saw in this slot
  SlotRecord record;
  LinkState next;      // state entering the following slot
};

/// State entering slot 1: all ages and indices zero, empty buffer.
constexpr LinkState entering_first_slot() noexcept {
  LinkState s = initial_link_state();
  s.slot = 1;
  return s;
}

/// Advances one slot. `entering` carries slot = i, delta_r_prev = AoI at the
/// end of slot i - 1 and the buffer as left by slot i - 1; its delta_t is
/// recomputed here. Order: arrival (preempts), decision, channel, AoI update.
StepOutcome step(const LinkState& entering, const NetworkParams& params,
                 const PolicySpec& spec, const SlotDraws& draws) noexcept;

struct SimConfig {
  NetworkParams params;
  PolicySpec policy;
  std::uint64_t slots = 100000;
  std::uint64_t seed = 1;
  bool record_trace = false;
  unsigned pmf_cap = 0;  // 0 selects default_pmf_cap()
};

/// 10 (delta + 1/lambda + 1/(1 - eps)), with delta the policy's gap threshold.
unsigned default_pmf_cap(const NetworkParams& params, const PolicySpec& spec);

struct SimStats {
  double avg_aoi = 0.0;
  double avg_cost = 0.0;
  double throughput = 0.0;
  double empty_buffer_freq = 0.0;
  /// Batch-means standard errors (50 batches); NaN for very short runs.
  double aoi_stderr = 0.0;
  double cost_stderr = 0.0;
  /// empirical_pmf[k] counts slots with delta_r = k + 1 for k < pmf_cap; the
  /// final entry counts delta_r > pmf_cap.
  std::vector<std::uint64_t> empirical_pmf;
  std::uint64_t slots = 0;
  std::uint64_t seed = 0;
  /// Slots (after the first delivery) where occupancy != (gap >= 1).
  std::uint64_t identity_violations = 0;
  std::vector<LinkState> decisions;  // filled when record_trace
  std::vector<SlotRecord> trace;     // filled when record_trace

  unsigned pmf_cap() const noexcept {
    return empirical_pmf.empty() ? 0u
                                 : static_cast<unsigned>(empirical_pmf.size() - 1);
  }
};

/// Deterministic in (config, seed). Throws DomainError on slots == 0.
SimStats run(const SimConfig& config);

/// Runs independent configurations concurrently; output order follows input.
std::vector<SimStats> run_all(std::span<const SimConfig> configs);

/// Total variation between the empirical histogram and an analytical PMF;
/// the overflow bucket is compared with the analytical mass beyond pmf_cap.
/// Throws DomainError if the PMF does not reach pmf_cap.
double empirical_vs_analytical(const SimStats& stats, const AoiPmf& pmf);

/// One tab-separated line per slot: slot, delta_t, delta_r, action, success,
/// occupied.
void write_trace(std::ostream& os, std::span<const SlotRecord> trace);

}  // namespace aoilab
