#include "drmech/probability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drmech {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double cdf_eval(const DiscomfortModel& model, int origin, double x) {
  if (x < 0.0) throw std::domain_error("cdf_eval: x must be nonnegative");
  const SlotDiscomfort& d = model.at(origin);
  switch (d.family) {
    case DiscomfortFamily::Uniform:
      return std::min(x / d.scale, 1.0);
    case DiscomfortFamily::Exponential:
      return 1.0 - std::exp(-d.mu * x / d.scale);
    case DiscomfortFamily::Tabulated: {
      if (x >= d.knots_x.back()) return d.knots_f.back();
      auto it = std::upper_bound(d.knots_x.begin(), d.knots_x.end(), x);
      size_t k = static_cast<size_t>(it - d.knots_x.begin());  // first knot > x, k >= 1
      double t = (x - d.knots_x[k - 1]) / (d.knots_x[k] - d.knots_x[k - 1]);
      return d.knots_f[k - 1] + t * (d.knots_f[k] - d.knots_f[k - 1]);
    }
  }
  return 0.0;
}

double density_eval(const DiscomfortModel& model, int origin, double x) {
  if (x < 0.0) throw std::domain_error("density_eval: x must be nonnegative");
  const SlotDiscomfort& d = model.at(origin);
  switch (d.family) {
    case DiscomfortFamily::Uniform:
      return x < d.scale ? 1.0 / d.scale : 0.0;
    case DiscomfortFamily::Exponential:
      return d.mu / d.scale * std::exp(-d.mu * x / d.scale);
    case DiscomfortFamily::Tabulated: {
      if (x >= d.knots_x.back()) return 0.0;
      auto it = std::upper_bound(d.knots_x.begin(), d.knots_x.end(), x);
      size_t k = static_cast<size_t>(it - d.knots_x.begin());
      return (d.knots_f[k] - d.knots_f[k - 1]) / (d.knots_x[k] - d.knots_x[k - 1]);
    }
  }
  return 0.0;
}

double cdf_inverse(const DiscomfortModel& model, int origin, double u) {
  if (!(u > 0.0) || !(u < 1.0)) throw std::domain_error("cdf_inverse: u must be in (0, 1)");
  const SlotDiscomfort& d = model.at(origin);
  switch (d.family) {
    case DiscomfortFamily::Uniform:
      return u * d.scale;
    case DiscomfortFamily::Exponential:
      return -d.scale / d.mu * std::log1p(-u);
    case DiscomfortFamily::Tabulated: {
      if (u > d.knots_f.back()) return kInf;  // mass beyond the table never accepts
      auto it = std::lower_bound(d.knots_f.begin(), d.knots_f.end(), u);
      size_t k = static_cast<size_t>(it - d.knots_f.begin());
      if (k == 0) return d.knots_x.front();
      double df = d.knots_f[k] - d.knots_f[k - 1];
      double t = df > 0.0 ? (u - d.knots_f[k - 1]) / df : 0.0;
      return d.knots_x[k - 1] + t * (d.knots_x[k] - d.knots_x[k - 1]);
    }
  }
  return 0.0;
}

double single_offer_accept_prob(const DiscomfortModel& model, int origin, int dest,
                                double discount) {
  if (origin == dest)
    throw std::domain_error("single_offer_accept_prob: the stay option has no offer");
  if (discount < 0.0)
    throw std::domain_error("single_offer_accept_prob: discount must be nonnegative");
  double dist = std::abs(dest - origin);
  double m = std::pow(dist, model.at(origin).exponent);
  return cdf_eval(model, origin, discount / m);
}

BroadcastChoice::BroadcastChoice(const DiscomfortModel& model, int n_slots, double flat_rate)
    : model_(model), n_slots_(n_slots), tie_tol_(1e-12 * flat_rate) {
  tables_.resize(n_slots);
  for (int j = 0; j < n_slots; ++j) {
    double t = model.at(j).exponent;
    // Group the move options by slope coefficient. With t > 0 a class is the
    // pair {j - d, j + d}; with t = 0 every move shares coefficient 1.
    std::vector<std::pair<double, int>> coeffs;
    coeffs.reserve(n_slots - 1);
    for (int k = 0; k < n_slots; ++k) {
      if (k == j) continue;
      coeffs.emplace_back(std::pow(std::abs(k - j), t), k);
    }
    std::stable_sort(coeffs.begin(), coeffs.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    OriginTable& table = tables_[j];
    for (const auto& [c, k] : coeffs) {
      if (table.classes.empty() || table.classes.back().slope_coeff != c)
        table.classes.push_back(SlopeClass{c, {}});
      table.classes.back().members.push_back(k);
    }
    table.classes.push_back(SlopeClass{0.0, {j}});  // stay option, steepest slope 0
  }
}

ShiftDistribution BroadcastChoice::distribution(int origin,
                                                const std::vector<double>& discounts,
                                                double smoothing) const {
  const OriginTable& table = tables_.at(origin);
  const int n_classes = static_cast<int>(table.classes.size());

  // Representative line per class: the member with max discount.
  std::vector<double> intercept(n_classes);
  for (int m = 0; m < n_classes; ++m) {
    double a = -kInf;
    for (int k : table.classes[m].members) a = std::max(a, discounts[k]);
    intercept[m] = a;
  }

  // Upper envelope over beta in [0, inf). Classes arrive in ascending slope
  // order (-c increasing), so a stack sweep yields each class's interval.
  std::vector<int> stack;
  std::vector<double> start;  // start[s]: beta where stack[s] becomes maximal
  stack.reserve(n_classes);
  start.reserve(n_classes);
  for (int m = 0; m < n_classes; ++m) {
    double bm = -table.classes[m].slope_coeff;
    double x = -kInf;
    while (!stack.empty()) {
      int t = stack.back();
      double bt = -table.classes[t].slope_coeff;
      x = (intercept[t] - intercept[m]) / (bm - bt);  // bm > bt, strict
      if (x <= start.back()) {
        stack.pop_back();
        start.pop_back();
        x = -kInf;
      } else {
        break;
      }
    }
    stack.push_back(m);
    start.push_back(stack.size() == 1 ? -kInf : x);
  }

  ShiftDistribution out;
  out.origin = origin;
  out.probabilities.assign(n_slots_, 0.0);

  // Probability mass per envelope interval, clipped to beta >= 0. The stay
  // class owns the unbounded final interval; it absorbs the remainder below.
  std::vector<double> class_mass(n_classes, 0.0);
  for (size_t s = 0; s < stack.size(); ++s) {
    double lo = std::max(start[s], 0.0);
    double hi = s + 1 < stack.size() ? std::max(start[s + 1], 0.0) : kInf;
    if (!(hi > lo)) continue;
    double mass = (hi == kInf ? 1.0 : cdf_eval(model_, origin, hi)) -
                  cdf_eval(model_, origin, lo);
    class_mass[stack[s]] = std::max(mass, 0.0);
  }

  double moved = 0.0;
  for (int m = 0; m + 1 < n_classes; ++m) {  // all but the stay class
    const SlopeClass& cls = table.classes[m];
    if (cls.members.size() == 1) {
      out.probabilities[cls.members[0]] = class_mass[m];
      moved += class_mass[m];
      continue;
    }
    if (smoothing > 0.0) {
      // Logistic split within the class; the envelope itself already uses the
      // class-max discount, so the result is continuous in R.
      double wsum = 0.0;
      std::vector<double> w(cls.members.size());
      for (size_t u = 0; u < cls.members.size(); ++u) {
        w[u] = std::exp((discounts[cls.members[u]] - intercept[m]) / smoothing);
        wsum += w[u];
      }
      for (size_t u = 0; u < cls.members.size(); ++u) {
        out.probabilities[cls.members[u]] = class_mass[m] * w[u] / wsum;
      }
    } else {
      int tied = 0;
      for (int k : cls.members)
        if (discounts[k] >= intercept[m] - tie_tol_) ++tied;
      if (tied > 1) out.had_tie = true;
      for (int k : cls.members)
        if (discounts[k] >= intercept[m] - tie_tol_)
          out.probabilities[k] = class_mass[m] / tied;
    }
    moved += class_mass[m];
  }
  out.probabilities[origin] = std::max(0.0, 1.0 - moved);
  return out;
}

ShiftDistribution broadcast_shift_distribution(const DiscomfortModel& model, int n_slots,
                                               double flat_rate, int origin,
                                               const std::vector<double>& discounts,
                                               double smoothing) {
  return BroadcastChoice(model, n_slots, flat_rate).distribution(origin, discounts, smoothing);
}

}  // namespace drmech
