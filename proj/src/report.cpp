#include "drmech/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace drmech {

const char* const kResultsHeader =
    "mechanism,mu,seed,starts,production_cost,discounts_paid,wasted_discounts,"
    "total_cost,savings_fraction,dictatorial_savings_fraction,wall_time_s";

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_results_header(std::ostream& out) { out << kResultsHeader << "\n"; }

void write_results_row(std::ostream& out, const ResultRow& r) {
  out << r.mechanism << ',' << format_double(r.mu) << ',' << r.seed << ',' << r.starts
      << ',' << format_double(r.production_cost) << ',' << format_double(r.discounts_paid)
      << ',' << format_double(r.wasted_discounts) << ',' << format_double(r.total_cost)
      << ',' << format_double(r.savings_fraction) << ','
      << format_double(r.dictatorial_savings_fraction) << ','
      << format_double(r.wall_time_s) << "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s) {
  if (s.empty()) return std::nan("");
  return std::stod(s);
}

}  // namespace

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw std::runtime_error(path + ": unexpected results.csv header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 11) throw std::runtime_error(path + ": malformed row: " + line);
    ResultRow r;
    r.mechanism = f[0];
    r.mu = parse_field(f[1]);
    r.seed = f[2].empty() ? 0 : std::stoull(f[2]);
    r.starts = f[3].empty() ? 0 : std::stoi(f[3]);
    r.production_cost = parse_field(f[4]);
    r.discounts_paid = parse_field(f[5]);
    r.wasted_discounts = parse_field(f[6]);
    r.total_cost = parse_field(f[7]);
    r.savings_fraction = parse_field(f[8]);
    r.dictatorial_savings_fraction = parse_field(f[9]);
    r.wall_time_s = parse_field(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG figures. Hand-rolled: self-contained files with the data values
// embedded as labels, no plotting dependency.

namespace {

struct MechStyle {
  const char* name;
  const char* color;
};

constexpr MechStyle kMechStyles[] = {
    {"base", "#4c78a8"},
    {"optimized", "#f58518"},
    {"robust", "#54a24b"},
    {"broadcast", "#b279a2"},
};

const char* mech_color(const std::string& name) {
  for (const MechStyle& m : kMechStyles)
    if (name == m.name) return m.color;
  return "#888888";
}

std::string pct_label(double frac) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * frac);
  return buf;
}

std::string mu_label(double mu) {
  if (std::isnan(mu)) return "-";
  char buf[32];
  snprintf(buf, sizeof(buf), "%g", mu);
  return buf;
}

struct SvgCanvas {
  std::ostringstream body;
  int width, height;

  SvgCanvas(int w, int h) : width(w), height(h) {}

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& title = "") {
    body << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w
         << "\" height=\"" << h << "\" fill=\"" << fill << "\">";
    if (!title.empty()) body << "<title>" << title << "</title>";
    body << "</rect>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            bool dashed = false) {
    body << "  <line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\""
         << y2 << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"";
    if (dashed) body << " stroke-dasharray=\"6,4\"";
    body << "/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "middle", const std::string& fill = "#222") {
    body << "  <text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\""
         << fill << "\">" << s << "</text>\n";
  }
  void save(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write file");
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
        << "\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body.str() << "</svg>\n";
  }
};

}  // namespace

void write_savings_svg(const std::string& path, const std::vector<ResultRow>& rows) {
  // Group by flexibility value in order of first appearance.
  std::vector<double> mus;
  for (const ResultRow& r : rows) {
    bool seen = false;
    for (double m : mus)
      if (m == r.mu || (std::isnan(m) && std::isnan(r.mu))) seen = true;
    if (!seen) mus.push_back(r.mu);
  }
  std::vector<std::string> mechs;
  for (const MechStyle& st : kMechStyles)
    for (const ResultRow& r : rows)
      if (r.mechanism == st.name &&
          std::find(mechs.begin(), mechs.end(), r.mechanism) == mechs.end())
        mechs.push_back(r.mechanism);

  double ymax = 0.0;
  for (const ResultRow& r : rows)
    ymax = std::max({ymax, r.savings_fraction, r.dictatorial_savings_fraction});
  if (ymax <= 0.0) ymax = 0.01;
  ymax *= 1.15;

  const int W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 60;
  const double pw = W - ml - mr, ph = H - mt - mb;
  SvgCanvas svg(W, H);
  svg.text(W / 2.0, 22, "Cost savings normalized to the baseline cost", 14);
  auto yof = [&](double frac) { return mt + ph * (1.0 - frac / ymax); };

  // y axis with 5 ticks
  svg.line(ml, mt, ml, mt + ph, "#222");
  svg.line(ml, mt + ph, ml + pw, mt + ph, "#222");
  for (int t = 0; t <= 5; ++t) {
    double frac = ymax * t / 5.0;
    svg.line(ml - 4, yof(frac), ml, yof(frac), "#222");
    svg.text(ml - 8, yof(frac) + 4, pct_label(frac), 10, "end");
  }

  const double group_w = pw / std::max<size_t>(mus.size(), 1);
  const double bar_w = 0.8 * group_w / std::max<size_t>(mechs.size(), 1);
  for (size_t g = 0; g < mus.size(); ++g) {
    double gx = ml + g * group_w;
    svg.text(gx + group_w / 2.0, mt + ph + 18, "mu = " + mu_label(mus[g]), 11);
    double dict = std::nan("");
    for (const ResultRow& r : rows) {
      if (!(r.mu == mus[g] || (std::isnan(r.mu) && std::isnan(mus[g])))) continue;
      dict = r.dictatorial_savings_fraction;
      auto it = std::find(mechs.begin(), mechs.end(), r.mechanism);
      if (it == mechs.end()) continue;
      size_t b = static_cast<size_t>(it - mechs.begin());
      double x = gx + 0.1 * group_w + b * bar_w;
      double y = yof(r.savings_fraction);
      svg.rect(x, y, bar_w * 0.9, mt + ph - y, mech_color(r.mechanism),
               r.mechanism + std::string(" ") + format_double(r.savings_fraction));
      svg.text(x + bar_w * 0.45, y - 3, pct_label(r.savings_fraction), 9);
    }
    if (!std::isnan(dict))
      svg.line(gx + 0.05 * group_w, yof(dict), gx + 0.95 * group_w, yof(dict), "#333",
               true);
  }

  // legend
  double lx = ml, ly = H - 22;
  for (const std::string& m : mechs) {
    svg.rect(lx, ly - 9, 10, 10, mech_color(m));
    svg.text(lx + 14, ly, m, 11, "start");
    lx += 18 + 8.0 * m.size();
  }
  svg.line(lx, ly - 4, lx + 28, ly - 4, "#333", true);
  svg.text(lx + 34, ly, "dictatorial", 11, "start");
  svg.save(path);
}

void write_components_svg(const std::string& path, const std::vector<ResultRow>& rows) {
  // Reference flexibility: the value closest to 1/3 among the rows.
  double ref_mu = std::nan("");
  double best_gap = std::numeric_limits<double>::infinity();
  for (const ResultRow& r : rows) {
    double gap = std::isnan(r.mu) ? 0.0 : std::abs(r.mu - 1.0 / 3.0);
    if (gap < best_gap) {
      best_gap = gap;
      ref_mu = r.mu;
    }
  }

  struct Bar {
    std::string mech;
    double net, useful, wasted;
  };
  std::vector<Bar> bars;
  for (const MechStyle& st : kMechStyles) {
    for (const ResultRow& r : rows) {
      if (r.mechanism != st.name) continue;
      if (!(r.mu == ref_mu || (std::isnan(r.mu) && std::isnan(ref_mu)))) continue;
      // Baseline cost recovered from savings_fraction = 1 - total / baseline.
      double baseline = r.savings_fraction < 1.0 ? r.total_cost / (1.0 - r.savings_fraction)
                                                 : r.total_cost;
      if (!(baseline > 0.0)) continue;
      double useful = (r.discounts_paid - r.wasted_discounts) / baseline;
      double wasted = r.wasted_discounts / baseline;
      bars.push_back({r.mechanism, r.savings_fraction, useful, wasted});
      break;
    }
  }

  double ymax = 0.01;
  for (const Bar& b : bars) ymax = std::max(ymax, b.net + b.useful + b.wasted);
  ymax *= 1.2;

  const int W = 560, H = 400, ml = 70, mr = 20, mt = 40, mb = 70;
  const double pw = W - ml - mr, ph = H - mt - mb;
  SvgCanvas svg(W, H);
  svg.text(W / 2.0, 22,
           "Production saving split: net savings, paid discounts, wasted discounts (mu = " +
               mu_label(ref_mu) + ")",
           12);
  auto yof = [&](double frac) { return mt + ph * (1.0 - frac / ymax); };
  svg.line(ml, mt, ml, mt + ph, "#222");
  svg.line(ml, mt + ph, ml + pw, mt + ph, "#222");
  for (int t = 0; t <= 5; ++t) {
    double frac = ymax * t / 5.0;
    svg.line(ml - 4, yof(frac), ml, yof(frac), "#222");
    svg.text(ml - 8, yof(frac) + 4, pct_label(frac), 10, "end");
  }

  const char* seg_colors[3] = {"#2a9d8f", "#e9c46a", "#e76f51"};
  const char* seg_names[3] = {"net savings", "useful discounts", "wasted discounts"};
  const double group_w = pw / std::max<size_t>(bars.size(), 1);
  for (size_t b = 0; b < bars.size(); ++b) {
    double x = ml + b * group_w + 0.25 * group_w;
    double w = 0.5 * group_w;
    double vals[3] = {bars[b].net, bars[b].useful, bars[b].wasted};
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (vals[k] <= 0.0) continue;
      double y0 = yof(acc + vals[k]);
      svg.rect(x, y0, w, yof(acc) - y0, seg_colors[k],
               bars[b].mech + " " + seg_names[k] + " " + format_double(vals[k]));
      acc += vals[k];
    }
    svg.text(x + w / 2.0, yof(acc) - 4, pct_label(acc), 9);
    svg.text(x + w / 2.0, mt + ph + 16, bars[b].mech, 11);
  }

  double lx = ml, ly = H - 26;
  for (int k = 0; k < 3; ++k) {
    svg.rect(lx, ly - 9, 10, 10, seg_colors[k]);
    svg.text(lx + 14, ly, seg_names[k], 11, "start");
    lx += 30 + 7.0 * std::string(seg_names[k]).size();
  }
  svg.save(path);
}

}  // namespace drmech
