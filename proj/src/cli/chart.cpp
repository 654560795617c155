#include "aoilab/chart.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "aoilab/experiments.hpp"
#include "aoilab/format.hpp"

namespace aoilab {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 200.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 64.0;

constexpr std::array<const char*, 8> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(value);
}

std::string fixed2(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                               std::chars_format::fixed, 2);
  return std::string(buf.data(), r.ptr);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.2;
};

// Tick step from {1, 2, 5} x 10^k giving about five intervals.
Axis nice_axis(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  const double step = (frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0 : 10.0) * mag;
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_row(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

ChartSpec chart_from_table(const CsvTable& table, const std::string& x_column,
                           const std::vector<std::string>& y_columns,
                           const std::string& title) {
  const int xi = table.column(x_column);
  if (xi < 0) throw UsageError("column '" + x_column + "' not found");
  if (y_columns.empty()) throw UsageError("no y columns given");
  ChartSpec chart;
  chart.title = title;
  chart.x_label = x_column;
  chart.y_label = y_columns.size() == 1 ? y_columns.front() : "value";
  for (const auto& name : y_columns) {
    const int yi = table.column(name);
    if (yi < 0) throw UsageError("column '" + name + "' not found");
    Series s;
    s.name = name;
    for (const auto& row : table.rows) {
      double x = 0.0;
      double y = 0.0;
      if (static_cast<int>(row.size()) <= std::max(xi, yi)) continue;
      if (parse_double(row[xi], x) && parse_double(row[yi], y)) {
        s.x.push_back(x);
        s.y.push_back(y);
      }
    }
    chart.series.push_back(std::move(s));
  }
  return chart;
}

void render_svg(std::ostream& os, const ChartSpec& chart) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : chart.series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  const Axis ax = nice_axis(xmin, xmax);
  const Axis ay = nice_axis(ymin, ymax);

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - ay.lo) / (ay.hi - ay.lo) * ph; };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
     << kWidth << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";
  if (!chart.title.empty()) {
    os << "<text x=\"" << fixed2(kLeft + pw / 2) << "\" y=\"26\" text-anchor=\"middle\" "
       << "font-size=\"15\">" << escape_xml(chart.title) << "</text>\n";
  }

  // Grid and ticks.
  os << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  const int nx = static_cast<int>(std::lround((ax.hi - ax.lo) / ax.step));
  const int ny = static_cast<int>(std::lround((ay.hi - ay.lo) / ay.step));
  for (int k = 0; k <= nx; ++k) {
    const double x = px(ax.lo + k * ax.step);
    os << "<line x1=\"" << fixed2(x) << "\" y1=\"" << fixed2(kTop) << "\" x2=\""
       << fixed2(x) << "\" y2=\"" << fixed2(kTop + ph) << "\"/>\n";
  }
  for (int k = 0; k <= ny; ++k) {
    const double y = py(ay.lo + k * ay.step);
    os << "<line x1=\"" << fixed2(kLeft) << "\" y1=\"" << fixed2(y) << "\" x2=\""
       << fixed2(kLeft + pw) << "\" y2=\"" << fixed2(y) << "\"/>\n";
  }
  os << "</g>\n";
  os << "<rect x=\"" << fixed2(kLeft) << "\" y=\"" << fixed2(kTop) << "\" width=\""
     << fixed2(pw) << "\" height=\"" << fixed2(ph)
     << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int k = 0; k <= nx; ++k) {
    const double v = ax.lo + k * ax.step;
    os << "<text x=\"" << fixed2(px(v)) << "\" y=\"" << fixed2(kTop + ph + 18)
       << "\" text-anchor=\"middle\">" << format_number(v) << "</text>\n";
  }
  for (int k = 0; k <= ny; ++k) {
    const double v = ay.lo + k * ay.step;
    os << "<text x=\"" << fixed2(kLeft - 8) << "\" y=\"" << fixed2(py(v) + 4)
       << "\" text-anchor=\"end\">" << format_number(v) << "</text>\n";
  }
  os << "<text x=\"" << fixed2(kLeft + pw / 2) << "\" y=\"" << fixed2(kHeight - 18)
     << "\" text-anchor=\"middle\">" << escape_xml(chart.x_label) << "</text>\n";
  os << "<text transform=\"translate(20 " << fixed2(kTop + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(chart.y_label)
     << "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const char* color = kPalette[i % kPalette.size()];
    if (s.x.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        os << (k ? " " : "") << fixed2(px(s.x[k])) << ',' << fixed2(py(s.y[k]));
      }
      os << "\"/>\n";
    }
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      os << "<circle cx=\"" << fixed2(px(s.x[k])) << "\" cy=\"" << fixed2(py(s.y[k]))
         << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 12 + 20.0 * static_cast<double>(i);
    const double lx = kLeft + pw + 16;
    os << "<line x1=\"" << fixed2(lx) << "\" y1=\"" << fixed2(ly) << "\" x2=\""
       << fixed2(lx + 22) << "\" y2=\"" << fixed2(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fixed2(lx + 28) << "\" y=\"" << fixed2(ly + 4) << "\">"
       << escape_xml(s.name) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace aoilab
