#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "aoilab/model.hpp"

namespace aoilab {

/// Truncated PMF of the receiver AoI under a single-threshold policy.
/// masses[k] holds Pr(delta_r = k + 1); tail_mass = 1 - sum(masses).
struct AoiPmf {
  unsigned delta = 0;
  std::vector<double> masses;
  double tail_mass = 0.0;
  double beta = 0.0;

  std::size_t jmax() const noexcept { return masses.size(); }
  /// Pr(delta_r = j) for 1 <= j <= jmax, 0 otherwise.
  double at(std::size_t j) const noexcept {
    return (j >= 1 && j <= masses.size()) ? masses[j - 1] : 0.0;
  }
};

enum class PointSource {
  closed_form,
  simulated,
  cmdp,
  lower_bound,
  random_benchmark,
  double_threshold,
};

std::string_view to_string(PointSource source) noexcept;

struct TradeoffPoint {
  double avg_aoi = 0.0;
  double avg_cost = 0.0;
  PointSource source = PointSource::closed_form;
  std::string label;
};

/// Two adjacent thresholds and the probability q of using the lower
/// (more aggressive) one so that the costs mix linearly to eta_max.
struct MixedThreshold {
  unsigned delta_low = 0;
  unsigned delta_high = 0;
  double q = 1.0;

  bool randomized() const noexcept { return q > 0.0 && q < 1.0; }
};

struct RandomBenchmark {
  double gamma = 1.0;
  double effective_epsilon = 0.0;
  TradeoffPoint point;
};

/// Exact long-run metrics of a policy given by closed form or recurrence.
struct PolicyMetrics {
  double avg_aoi = 0.0;
  double avg_cost = 0.0;
};

/// |epsilon + lambda - 1| below which the closed forms are 0/0.
inline constexpr double kSingularLineTolerance = 1e-9;

bool on_singular_line(const NetworkParams& params) noexcept;

/// Slowest geometric decay rate of the AoI tail, max(eps, 1 - lambda, 1e-3).
double tail_decay_rate(const NetworkParams& params) noexcept;

/// Truncation point that leaves roughly e^-60 of tail mass.
unsigned default_jmax(const NetworkParams& params, unsigned delta);

double p_empty(const NetworkParams& params) noexcept;

/// (epsilon * (1 - lambda))^delta, evaluated in log space for large delta.
double threshold_decay(const NetworkParams& params, unsigned delta) noexcept;

/// Normalizer of the single-threshold AoI PMF; also 1 / ((1 - eps) eta(delta)).
double beta(const NetworkParams& params, unsigned delta) noexcept;

/// Closed-form PMF. On the singular line the recurrence path is used instead.
/// Throws DomainError if jmax < delta + 1.
AoiPmf aoi_pmf(const NetworkParams& params, unsigned delta, unsigned jmax);
AoiPmf aoi_pmf(const NetworkParams& params, unsigned delta);

/// Independent route to the same PMF: solves the arrival-conditioned
/// recurrence (latest packet delivered / not delivered) for P_j with the
/// unknown Pr(delta_r >= delta) found by normalized fixed-point iteration.
/// Valid on the singular line. Throws ConvergenceError.
AoiPmf pmf_recurrence_oracle(const NetworkParams& params, unsigned delta,
                             unsigned jmax);

/// sum_j j P_j with a geometric estimate of the part beyond jmax.
double tail_corrected_mean(const AoiPmf& pmf, double decay) noexcept;

double avg_aoi_closed(const NetworkParams& params, unsigned delta);
double avg_cost_closed(const NetworkParams& params, unsigned delta) noexcept;

TradeoffPoint plgfs_metrics(const NetworkParams& params);

/// Generate-at-will reference (lambda = 1). Requires delta >= 1.
TradeoffPoint gaw_metrics(double epsilon, unsigned delta);

/// AoI floor 0.5 * (1 / min(lambda, eta_max (1 - eps)) + 1).
double lower_bound(const NetworkParams& params, double eta_max);

/// Smallest threshold meeting the budget, paired with its predecessor.
MixedThreshold select_threshold(const NetworkParams& params, double eta_max);

RandomBenchmark random_benchmark(const NetworkParams& params, double eta_max);

/// Exact metrics of the boundary-randomized threshold policy: transmit when
/// the age gap exceeds delta, with probability q per slot when it equals delta.
PolicyMetrics boundary_mixed_metrics(const NetworkParams& params,
                                     unsigned delta, double q);

/// q in [0, 1] at which the boundary-randomized policy with threshold
/// mix.delta_low spends exactly eta_max. Returns mix.q unchanged when no
/// randomization is active.
double calibrate_mixed_q(const NetworkParams& params, const MixedThreshold& mix,
                         double eta_max);

}  // namespace aoilab
