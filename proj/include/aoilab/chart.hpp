#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aoilab {

/// Header plus string cells of a comma-separated file; '#' lines skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  int column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Numeric series from table columns; empty or non-numeric cells are skipped.
/// Throws UsageError if a column is missing.
ChartSpec chart_from_table(const CsvTable& table, const std::string& x_column,
                           const std::vector<std::string>& y_columns,
                           const std::string& title);

/// Self-contained SVG 1.1 line chart with markers, axes and legend.
void render_svg(std::ostream& os, const ChartSpec& chart);

}  // namespace aoilab
