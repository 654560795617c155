#include "aoilab/model.hpp"

#include <cmath>
#include <sstream>

namespace aoilab {

namespace {

std::string describe(const char* name, double value, const char* range) {
  std::ostringstream os;
  os << name << " = " << value << " is outside " << range;
  return os.str();
}

}  // namespace

NetworkParams validate_params(double lambda, double epsilon,
                              std::optional<double> eta_max) {
  // Written as negated in-range tests so NaN is rejected too.
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw DomainError(describe("lambda", lambda, "(0, 1]"));
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw DomainError(describe("epsilon", epsilon, "[0, 1)"));
  }
  if (eta_max && !(*eta_max > 0.0 && *eta_max <= 1.0)) {
    throw DomainError(describe("eta_max", *eta_max, "(0, 1]"));
  }
  return NetworkParams(lambda, epsilon, eta_max);
}

}  // namespace aoilab
