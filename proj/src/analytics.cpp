#include "aoilab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace aoilab {

namespace {

// Powers base^0 .. base^n.
std::vector<double> power_table(double base, std::size_t n) {
  std::vector<double> out(n + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= n; ++k) out[k] = out[k - 1] * base;
  return out;
}

double tail_estimate(double last_mass, double decay) noexcept {
  return last_mass * decay / (1.0 - decay);
}

AoiPmf finish_pmf(unsigned delta, std::vector<double> masses, double beta) {
  AoiPmf pmf;
  pmf.delta = delta;
  pmf.beta = beta;
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  pmf.masses = std::move(masses);
  pmf.tail_mass = std::max(0.0, 1.0 - total);
  return pmf;
}

// Receiver-AoI PMF of the policy that delivers with per-slot probability
// success[k] a packet that arrived while the receiver AoI was k. The
// delivered branch is a combination of `weights` over the success classes;
// the caller supplies that term. Returns unnormalized masses P_1..P_jmax
// (index 0 unused).
template <typename DeliveredTerm, typename Survival>
std::vector<double> arrival_recurrence(const NetworkParams& params,
                                       unsigned jmax, DeliveredTerm delivered,
                                       Survival survival) {
  const double lambda = params.lambda();
  const auto idle = power_table(1.0 - lambda, jmax);
  std::vector<double> p(jmax + 1, 0.0);
  for (unsigned j = 1; j <= jmax; ++j) {
    // Latest packet arrived j slots back and has been delivered.
    double v = idle[j - 1] * lambda * delivered(j);
    // Latest packet arrived m < j slots back onto a receiver at AoI j - m,
    // and is still undelivered.
    for (unsigned m = 1; m < j; ++m) {
      v += p[j - m] * idle[m - 1] * lambda * survival(j - m, m);
    }
    p[j] = v;
  }
  return p;
}

}  // namespace

std::string_view to_string(PointSource source) noexcept {
  switch (source) {
    case PointSource::closed_form: return "closed_form";
    case PointSource::simulated: return "simulated";
    case PointSource::cmdp: return "cmdp";
    case PointSource::lower_bound: return "lower_bound";
    case PointSource::random_benchmark: return "random_benchmark";
    case PointSource::double_threshold: return "double_threshold";
  }
  return "unknown";
}

bool on_singular_line(const NetworkParams& params) noexcept {
  return std::abs(params.epsilon() + params.lambda() - 1.0) <
         kSingularLineTolerance;
}

double tail_decay_rate(const NetworkParams& params) noexcept {
  return std::max({params.epsilon(), 1.0 - params.lambda(), 1e-3});
}

unsigned default_jmax(const NetworkParams& params, unsigned delta) {
  const double r = tail_decay_rate(params);
  return delta + static_cast<unsigned>(std::ceil(60.0 / -std::log(r)));
}

double p_empty(const NetworkParams& params) noexcept {
  const double l = params.lambda();
  const double e = params.epsilon();
  return (1.0 - e) * (1.0 - l) / (1.0 - e + e * l);
}

double threshold_decay(const NetworkParams& params, unsigned delta) noexcept {
  const double base = params.epsilon() * (1.0 - params.lambda());
  if (delta == 0) return 1.0;
  if (base <= 0.0) return 0.0;
  if (delta > 64) return std::exp(static_cast<double>(delta) * std::log(base));
  return std::pow(base, static_cast<double>(delta));
}

double beta(const NetworkParams& params, unsigned delta) noexcept {
  const double l = params.lambda();
  const double e = params.epsilon();
  const double a = 1.0 - e + l * e;
  return static_cast<double>(delta) + e / (1.0 - e) +
         (1.0 - e) * (1.0 - l) / (a * l) + threshold_decay(params, delta) / a;
}

AoiPmf aoi_pmf(const NetworkParams& params, unsigned delta, unsigned jmax) {
  if (jmax < delta + 1) {
    std::ostringstream os;
    os << "jmax = " << jmax << " must be at least delta + 1 = " << delta + 1;
    throw DomainError(os.str());
  }
  if (on_singular_line(params)) {
    return pmf_recurrence_oracle(params, delta, jmax);
  }
  const double l = params.lambda();
  const double e = params.epsilon();
  const double b = beta(params, delta);
  const double d = static_cast<double>(delta);
  const double denom = b * (e + l - 1.0);
  const double e_delta = std::pow(e, d);
  const double idle_delta = std::pow(1.0 - l, d);

  std::vector<double> masses(jmax);
  for (unsigned j = 1; j <= jmax; ++j) {
    const double jj = static_cast<double>(j);
    if (j <= delta) {
      masses[j - 1] = (1.0 - threshold_decay(params, j)) / b;
    } else {
      const double num = l * std::pow(e, jj - d + 1.0) -
                         l * e_delta * std::pow(1.0 - l, jj) +
                         (1.0 - e) * idle_delta * std::pow(e, jj) -
                         (1.0 - e) * std::pow(1.0 - l, jj - d + 1.0);
      masses[j - 1] = num / denom;
    }
  }
  return finish_pmf(delta, std::move(masses), b);
}

AoiPmf aoi_pmf(const NetworkParams& params, unsigned delta) {
  return aoi_pmf(params, delta, default_jmax(params, delta));
}

AoiPmf pmf_recurrence_oracle(const NetworkParams& params, unsigned delta,
                             unsigned jmax) {
  constexpr int kMaxIterations = 10000;
  constexpr double kFixedPointTolerance = 1e-13;

  const double e = params.epsilon();
  const double decay = tail_decay_rate(params);
  const auto erase = power_table(e, jmax);
  const unsigned first_active = std::max(delta, 1u);

  // Pr(delta_r >= delta); the recurrence is linear in it.
  double p_active = 1.0;
  std::vector<double> p;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    p = arrival_recurrence(
        params, jmax,
        [&](unsigned j) { return p_active * (1.0 - erase[j]); },
        [&](unsigned prior_aoi, unsigned m) {
          return prior_aoi >= delta ? erase[m] : 1.0;
        });
    const double z = std::accumulate(p.begin() + 1, p.end(), 0.0) +
                     tail_estimate(p[jmax], decay);
    for (double& v : p) v /= z;
    const double next = std::accumulate(p.begin() + first_active, p.end(), 0.0) +
                        tail_estimate(p[jmax], decay);
    const double change = std::abs(next - p_active);
    p_active = next;
    if (change < kFixedPointTolerance) {
      // Self-consistency: recomputing with the settled P_active must return
      // a distribution whose mass above the threshold is P_active again.
      // Normalization alone cannot enforce this.
      if (std::abs(z - 1.0) > 1e-8) {
        std::ostringstream os;
        os << "recurrence inconsistent: normalizer " << z
           << " at fixed point (jmax too small?)";
        throw ConvergenceError(os.str());
      }
      p.erase(p.begin());
      return finish_pmf(delta, std::move(p), beta(params, delta));
    }
  }
  throw ConvergenceError("P_active fixed point did not settle");
}

double tail_corrected_mean(const AoiPmf& pmf, double decay) noexcept {
  double mean = 0.0;
  for (std::size_t j = 1; j <= pmf.jmax(); ++j) {
    mean += static_cast<double>(j) * pmf.at(j);
  }
  const double last = pmf.at(pmf.jmax());
  const double n = static_cast<double>(pmf.jmax());
  mean += last * (n * decay / (1.0 - decay) +
                  decay / ((1.0 - decay) * (1.0 - decay)));
  return mean;
}

double avg_aoi_closed(const NetworkParams& params, unsigned delta) {
  if (on_singular_line(params)) {
    const auto pmf = pmf_recurrence_oracle(params, delta,
                                           default_jmax(params, delta));
    return tail_corrected_mean(pmf, tail_decay_rate(params));
  }
  const double l = params.lambda();
  const double e = params.epsilon();
  const double d = static_cast<double>(delta);
  const double a = 1.0 - e + l * e;
  const double x = threshold_decay(params, delta);
  const double b = beta(params, delta);
  const double s = e + l - 1.0;

  const double inner = d * (d + 1.0) / 2.0 - (1.0 - l) * e / (a * a) * (1.0 - x) +
                       l * e * e / ((1.0 - e) * (1.0 - e) * s) -
                       (1.0 - e) * (1.0 - l) * (1.0 - l) / (s * l * l) +
                       x / ((1.0 - e) * l);
  const double linear = (l * e + (1.0 - e) * (1.0 - l)) / ((1.0 - e) * l) + x / a;
  return inner / b + d / b * linear;
}

double avg_cost_closed(const NetworkParams& params, unsigned delta) noexcept {
  return 1.0 / ((1.0 - params.epsilon()) * beta(params, delta));
}

TradeoffPoint plgfs_metrics(const NetworkParams& params) {
  const double l = params.lambda();
  const double e = params.epsilon();
  return {1.0 / l + e / (1.0 - e), l / (1.0 - (1.0 - l) * e),
          PointSource::closed_form, "plgfs"};
}

TradeoffPoint gaw_metrics(double epsilon, unsigned delta) {
  if (delta < 1) throw DomainError("generate-at-will threshold must be >= 1");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw DomainError("epsilon outside [0, 1)");
  }
  const double span = static_cast<double>(delta) * (1.0 - epsilon) + epsilon;
  const double aoi =
      (span * span + epsilon) / (2.0 * (1.0 - epsilon) * span) + 0.5;
  return {aoi, 1.0 / span, PointSource::closed_form,
          "gaw:" + std::to_string(delta)};
}

double lower_bound(const NetworkParams& params, double eta_max) {
  if (!(eta_max > 0.0 && eta_max <= 1.0)) {
    throw DomainError("eta_max outside (0, 1]");
  }
  const double throughput =
      std::min(params.lambda(), eta_max * (1.0 - params.epsilon()));
  return 0.5 * (1.0 / throughput + 1.0);
}

MixedThreshold select_threshold(const NetworkParams& params, double eta_max) {
  if (!(eta_max > 0.0 && eta_max <= 1.0)) {
    throw DomainError("eta_max outside (0, 1]");
  }
  if (avg_cost_closed(params, 0) <= eta_max) return {0, 0, 1.0};

  // eta is strictly decreasing for delta >= 1 and eta(1) = eta(0) > eta_max,
  // so bracket by doubling and bisect for the smallest feasible threshold.
  constexpr unsigned kLimit = 1u << 30;
  unsigned infeasible = 1;
  unsigned feasible = 2;
  while (avg_cost_closed(params, feasible) > eta_max) {
    infeasible = feasible;
    if (feasible >= kLimit) throw DomainError("eta_max too small to resolve");
    feasible *= 2;
  }
  while (feasible - infeasible > 1) {
    const unsigned mid = infeasible + (feasible - infeasible) / 2;
    (avg_cost_closed(params, mid) <= eta_max ? feasible : infeasible) = mid;
  }
  const unsigned high = feasible;
  const unsigned low = high - 1;
  const double eta_high = avg_cost_closed(params, high);
  const double eta_low = avg_cost_closed(params, low);
  const double q = std::clamp((eta_max - eta_high) / (eta_low - eta_high), 0.0, 1.0);
  return {low, high, q};
}

RandomBenchmark random_benchmark(const NetworkParams& params, double eta_max) {
  if (!(eta_max > 0.0 && eta_max <= 1.0)) {
    throw DomainError("eta_max outside (0, 1]");
  }
  const double l = params.lambda();
  const double e = params.epsilon();
  double gamma = 1.0;
  if (eta_max < plgfs_metrics(params).avg_cost) {
    gamma = eta_max * l / (l - eta_max * (1.0 - l) * (1.0 - e));
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    std::ostringstream os;
    os << "transmission probability " << gamma << " outside (0, 1]";
    throw DomainError(os.str());
  }
  RandomBenchmark out;
  out.gamma = gamma;
  out.effective_epsilon = 1.0 - gamma * (1.0 - e);
  const double ee = out.effective_epsilon;
  out.point = {1.0 / l + ee / (1.0 - ee), gamma * l / (1.0 - (1.0 - l) * ee),
               PointSource::random_benchmark, "random"};
  return out;
}

PolicyMetrics boundary_mixed_metrics(const NetworkParams& params,
                                     unsigned delta, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("q outside [0, 1]");
  const double l = params.lambda();
  const double e = params.epsilon();
  const double decay = tail_decay_rate(params);
  const unsigned jmax = default_jmax(params, delta + 1);
  // Per-slot survival of a packet that found the receiver exactly at the
  // boundary gap.
  const double boundary_survive = 1.0 - q * (1.0 - e);
  const auto erase = power_table(e, jmax);
  const auto boundary = power_table(boundary_survive, jmax);

  auto survival = [&](unsigned prior_aoi, unsigned m) {
    if (prior_aoi > delta) return erase[m];
    if (prior_aoi == delta && delta > 0) return boundary[m];
    return 1.0;
  };
  // The unknowns are Pr(delta_r > delta) and Pr(delta_r = delta); solve once
  // per unit vector and combine.
  const auto above = arrival_recurrence(
      params, jmax, [&](unsigned j) { return 1.0 - erase[j]; }, survival);
  std::vector<double> p = above;
  double at_boundary = 0.0;
  if (delta > 0) {
    const auto on = arrival_recurrence(
        params, jmax, [&](unsigned j) { return 1.0 - boundary[j]; }, survival);
    at_boundary = above[delta] / (1.0 - on[delta]);
    for (unsigned j = 1; j <= jmax; ++j) p[j] += at_boundary * on[j];
  }
  // With Pr(delta_r > delta) fixed at 1, the normalizer rescales both.
  const double z = std::accumulate(p.begin() + 1, p.end(), 0.0) +
                   tail_estimate(p[jmax], decay);
  for (double& v : p) v /= z;
  const double p_above = 1.0 / z;
  const double p_boundary = at_boundary / z;

  AoiPmf pmf;
  pmf.delta = delta;
  pmf.masses.assign(p.begin() + 1, p.end());

  PolicyMetrics out;
  out.avg_aoi = tail_corrected_mean(pmf, decay);
  out.avg_cost = p_above * l / (1.0 - e + l * e);
  if (delta > 0 && q > 0.0) {
    out.avg_cost += p_boundary * q * l / (1.0 - (1.0 - l) * boundary_survive);
  }
  return out;
}

double calibrate_mixed_q(const NetworkParams& params, const MixedThreshold& mix,
                         double eta_max) {
  if (!mix.randomized()) return mix.q;
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double cost = boundary_mixed_metrics(params, mix.delta_low, mid).avg_cost;
    (cost < eta_max ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace aoilab
