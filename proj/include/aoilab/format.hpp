#pragma once

#include <string>

namespace aoilab {

/// Number formatting for CSV/SVG output: locale-independent, '.' separator.

/// 9 significant digits, general notation.
std::string format_number(double value);

/// Shortest text that round-trips to the same double.
std::string format_shortest(double value);

}  // namespace aoilab
