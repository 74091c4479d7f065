// results.csv emission/parsing and the two static SVG figures.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace drmech {

struct ResultRow {
  std::string mechanism;
  double mu = 0.0;  // NaN when the scenario has no flexibility parameter
  uint64_t seed = 0;
  int starts = 0;
  double production_cost = 0.0;
  double discounts_paid = 0.0;
  double wasted_discounts = 0.0;
  double total_cost = 0.0;
  double savings_fraction = 0.0;
  double dictatorial_savings_fraction = 0.0;
  double wall_time_s = 0.0;
};

// Shortest round-trip decimal representation.
std::string format_double(double v);

extern const char* const kResultsHeader;

void write_results_header(std::ostream& out);
void write_results_row(std::ostream& out, const ResultRow& row);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Grouped savings bars per mechanism per flexibility value, with a dashed
// line at the dictatorial bound.
void write_savings_svg(const std::string& path, const std::vector<ResultRow>& rows);

// Stacked decomposition of each mechanism's production saving into net
// savings, useful discounts and wasted discounts, at the flexibility value
// closest to 1/3.
void write_components_svg(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace drmech
