#include "aoilab/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "aoilab/rng.hpp"

namespace aoilab {

namespace {

constexpr std::uint64_t kBatches = 50;

double batch_stderr(const std::vector<double>& means) {
  const auto n = static_cast<double>(means.size());
  if (means.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= n;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (n - 1.0);
  return std::sqrt(var / n);
}

unsigned gap_threshold(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::single_threshold:
    case PolicyKind::randomized_single_threshold: return spec.delta + 1;
    case PolicyKind::double_threshold: return spec.delta2;
    default: return 0;
  }
}

}  // namespace

StepOutcome step(const LinkState& entering, const NetworkParams& params,
                 const PolicySpec& spec, const SlotDraws& draws) noexcept {
  StepOutcome out;
  LinkState s = entering;
  if (draws.arrival < params.lambda()) {
    s.buffer_occupied = true;
    s.g_latest = s.slot;
    s.delta_t = 0;
  } else {
    s.delta_t = s.slot - s.g_latest;
  }
  out.decision = s;

  const bool transmit = decide(spec, s, draws.policy).transmit;
  const bool success = transmit && draws.channel >= params.epsilon();
  std::uint64_t delta_r = 0;
  LinkState next = s;
  if (success) {
    delta_r = s.delta_t + 1;
    next.u_latest = s.g_latest;
    next.buffer_occupied = false;
  } else {
    delta_r = s.delta_r_prev + 1;
  }
  next.delta_r_prev = delta_r;
  next.slot = s.slot + 1;

  out.record = {s.slot, s.delta_t, delta_r, transmit, success, s.buffer_occupied};
  out.next = next;
  return out;
}

unsigned default_pmf_cap(const NetworkParams& params, const PolicySpec& spec) {
  const double cap = 10.0 * (gap_threshold(spec) + 1.0 / params.lambda() +
                             1.0 / (1.0 - params.epsilon()));
  return static_cast<unsigned>(std::ceil(cap));
}

SimStats run(const SimConfig& config) {
  if (config.slots == 0) throw DomainError("simulation needs at least one slot");
  const auto& params = config.params;
  const unsigned cap =
      config.pmf_cap ? config.pmf_cap : default_pmf_cap(params, config.policy);

  SimStats stats;
  stats.slots = config.slots;
  stats.seed = config.seed;
  stats.empirical_pmf.assign(cap + 1, 0);
  if (config.record_trace) {
    stats.decisions.reserve(config.slots);
    stats.trace.reserve(config.slots);
  }

  SplitMix64 rng(config.seed);
  LinkState state = entering_first_slot();
  __extension__ unsigned __int128 aoi_sum = 0;
  std::uint64_t transmissions = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t empty = 0;
  bool audit = false;

  const std::uint64_t batch_len =
      config.slots >= kBatches * 10 ? config.slots / kBatches : 0;
  std::vector<double> batch_aoi;
  std::vector<double> batch_cost;
  std::uint64_t batch_aoi_sum = 0;
  std::uint64_t batch_tx = 0;
  std::uint64_t in_batch = 0;

  for (std::uint64_t i = 0; i < config.slots; ++i) {
    SlotDraws draws;
    draws.arrival = rng.uniform();
    draws.channel = rng.uniform();
    draws.policy = rng.uniform();
    const StepOutcome out = step(state, params, config.policy, draws);
    const SlotRecord& rec = out.record;

    if (audit && !out.decision.occupancy_identity_holds()) {
      ++stats.identity_violations;
    }
    aoi_sum += rec.delta_r;
    transmissions += rec.transmit;
    deliveries += rec.success;
    empty += !rec.occupied;
    ++stats.empirical_pmf[rec.delta_r <= cap ? rec.delta_r - 1 : cap];
    if (rec.success) audit = true;

    if (batch_len) {
      batch_aoi_sum += rec.delta_r;
      batch_tx += rec.transmit;
      if (++in_batch == batch_len && batch_aoi.size() < kBatches) {
        batch_aoi.push_back(static_cast<double>(batch_aoi_sum) / batch_len);
        batch_cost.push_back(static_cast<double>(batch_tx) / batch_len);
        batch_aoi_sum = batch_tx = in_batch = 0;
      }
    }
    if (config.record_trace) {
      stats.decisions.push_back(out.decision);
      stats.trace.push_back(rec);
    }
    state = out.next;
  }

  const auto t = static_cast<double>(config.slots);
  stats.avg_aoi = static_cast<double>(aoi_sum) / t;
  stats.avg_cost = static_cast<double>(transmissions) / t;
  stats.throughput = static_cast<double>(deliveries) / t;
  stats.empty_buffer_freq = static_cast<double>(empty) / t;
  stats.aoi_stderr = batch_stderr(batch_aoi);
  stats.cost_stderr = batch_stderr(batch_cost);
  return stats;
}

std::vector<SimStats> run_all(std::span<const SimConfig> configs) {
  std::vector<SimStats> results(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      results[k] = run(configs[k]);
    }
  };
  const unsigned n = std::clamp<unsigned>(std::thread::hardware_concurrency(), 1,
                                          static_cast<unsigned>(configs.size()));
  if (n <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

double empirical_vs_analytical(const SimStats& stats, const AoiPmf& pmf) {
  const unsigned cap = stats.pmf_cap();
  if (cap == 0 || stats.slots == 0) throw DomainError("empty histogram");
  if (pmf.jmax() < cap) {
    throw DomainError("analytical PMF stops at " + std::to_string(pmf.jmax()) +
                      " but the histogram resolves up to " + std::to_string(cap));
  }
  const auto t = static_cast<double>(stats.slots);
  double tv = 0.0;
  double analytic_head = 0.0;
  for (unsigned j = 1; j <= cap; ++j) {
    const double p = pmf.at(j);
    analytic_head += p;
    tv += std::abs(static_cast<double>(stats.empirical_pmf[j - 1]) / t - p);
  }
  const double analytic_over = std::max(0.0, 1.0 - analytic_head);
  tv += std::abs(static_cast<double>(stats.empirical_pmf[cap]) / t - analytic_over);
  return 0.5 * tv;
}

void write_trace(std::ostream& os, std::span<const SlotRecord> trace) {
  for (const auto& r : trace) {
    os << r.slot << '\t' << r.delta_t << '\t' << r.delta_r << '\t'
       << int{r.transmit} << '\t' << int{r.success} << '\t' << int{r.occupied}
       << '\n';
  }
}

}  // namespace aoilab
