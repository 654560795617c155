#include "aoilab/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace aoilab {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (value == 0.0) value = 0.0;  // fold -0
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 9);
  return std::string(buf.data(), res.ptr);
}

std::string format_shortest(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

}  // namespace aoilab
