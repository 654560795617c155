#include "aoilab/policies.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "aoilab/format.hpp"

namespace aoilab {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

unsigned parse_unsigned(std::string_view field, std::string_view text) {
  unsigned value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw DomainError("bad integer '" + std::string(field) + "' in policy '" +
                      std::string(text) + "'");
  }
  return value;
}

double parse_probability(std::string_view field, std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw DomainError("bad number '" + std::string(field) + "' in policy '" +
                      std::string(text) + "'");
  }
  return value;
}

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1]");
  }
}

}  // namespace

PolicySpec PolicySpec::single(unsigned delta) {
  PolicySpec s;
  s.kind = PolicyKind::single_threshold;
  s.delta = delta;
  return s;
}

PolicySpec PolicySpec::mixed(unsigned delta, double q) {
  require_probability(q, "q");
  PolicySpec s;
  s.kind = PolicyKind::randomized_single_threshold;
  s.delta = delta;
  s.q = q;
  return s;
}

PolicySpec PolicySpec::double_threshold(unsigned max_age, unsigned min_gap) {
  PolicySpec s;
  s.kind = PolicyKind::double_threshold;
  s.delta1 = max_age;
  s.delta2 = min_gap;
  return s;
}

PolicySpec PolicySpec::random(double gamma) {
  require_probability(gamma, "gamma");
  PolicySpec s;
  s.kind = PolicyKind::random_transmission;
  s.gamma = gamma;
  return s;
}

bool PolicySpec::deterministic() const noexcept {
  switch (kind) {
    case PolicyKind::randomized_single_threshold: return q == 0.0 || q == 1.0;
    case PolicyKind::random_transmission: return gamma == 0.0 || gamma == 1.0;
    default: return true;
  }
}

PolicySpec parse_policy(std::string_view text) {
  const auto parts = split(text, ':');
  const auto name = parts.front();
  auto expect = [&](std::size_t n) {
    if (parts.size() != n) {
      throw DomainError("policy '" + std::string(text) + "' expects " +
                        std::to_string(n - 1) + " parameter(s)");
    }
  };
  if (name == "plgfs") {
    expect(1);
    return PolicySpec::plgfs();
  }
  if (name == "single") {
    expect(2);
    return PolicySpec::single(parse_unsigned(parts[1], text));
  }
  if (name == "mixed") {
    expect(3);
    return PolicySpec::mixed(parse_unsigned(parts[1], text),
                             parse_probability(parts[2], text));
  }
  if (name == "double") {
    expect(3);
    return PolicySpec::double_threshold(parse_unsigned(parts[1], text),
                                        parse_unsigned(parts[2], text));
  }
  if (name == "random") {
    expect(2);
    return PolicySpec::random(parse_probability(parts[1], text));
  }
  throw DomainError("unknown policy '" + std::string(text) + "'");
}

std::string to_string(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::plgfs: return "plgfs";
    case PolicyKind::single_threshold:
      return "single:" + std::to_string(spec.delta);
    case PolicyKind::randomized_single_threshold:
      return "mixed:" + std::to_string(spec.delta) + ":" + format_shortest(spec.q);
    case PolicyKind::double_threshold:
      return "double:" + std::to_string(spec.delta1) + ":" +
             std::to_string(spec.delta2);
    case PolicyKind::random_transmission:
      return "random:" + format_shortest(spec.gamma);
  }
  return "?";
}

Action decide(const PolicySpec& spec, const LinkState& state,
              double uniform_draw) noexcept {
  if (!state.buffer_occupied) return {false};
  const std::int64_t gap = state.age_gap();
  switch (spec.kind) {
    case PolicyKind::plgfs:
      return {true};
    case PolicyKind::single_threshold:
      return {gap >= static_cast<std::int64_t>(spec.delta)};
    case PolicyKind::randomized_single_threshold: {
      const auto d = static_cast<std::int64_t>(spec.delta);
      if (gap > d) return {true};
      return {gap == d && uniform_draw < spec.q};
    }
    case PolicyKind::double_threshold:
      return {state.delta_t <= spec.delta1 &&
              gap >= static_cast<std::int64_t>(spec.delta2)};
    case PolicyKind::random_transmission:
      return {uniform_draw < spec.gamma};
  }
  return {false};
}

bool decision_epochs_property(const PolicySpec& spec,
                              std::span<const LinkState> trace) {
  bool have_segment = false;
  bool segment_action = false;
  for (const auto& state : trace) {
    const bool action = decide(spec, state, 0.0).transmit;
    const bool arrival = state.buffer_occupied && state.delta_t == 0;
    if (arrival) {
      have_segment = true;
      segment_action = action;
    } else if (state.buffer_occupied && have_segment && action != segment_action) {
      return false;
    }
  }
  return true;
}

}  // namespace aoilab
