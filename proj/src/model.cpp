#include "drmech/model.hpp"

#include <algorithm>
#include <cmath>

#include "drmech/mechanisms.hpp"

namespace drmech {

PiecewiseLinearCost::PiecewiseLinearCost(std::vector<double> breakpoints,
                                         std::vector<double> marginal_rates)
    : breakpoints_(std::move(breakpoints)), rates_(std::move(marginal_rates)) {
  if (rates_.size() != breakpoints_.size() + 1)
    throw ValidationError("cost: need exactly one more marginal rate than breakpoints");
  for (size_t k = 0; k + 1 < rates_.size(); ++k)
    if (!(rates_[k] < rates_[k + 1]))
      throw ValidationError("cost: marginal rates must be strictly increasing");
  for (size_t k = 0; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > 0.0))
      throw ValidationError("cost: breakpoints must be positive");
    if (k > 0 && !(breakpoints_[k] > breakpoints_[k - 1]))
      throw ValidationError("cost: breakpoints must be strictly ascending");
  }
  for (double r : rates_)
    if (!std::isfinite(r) || r < 0.0)
      throw ValidationError("cost: marginal rates must be finite and nonnegative");
  cum_.resize(breakpoints_.size());
  double acc = 0.0, prev = 0.0;
  for (size_t k = 0; k < breakpoints_.size(); ++k) {
    acc += rates_[k] * (breakpoints_[k] - prev);
    cum_[k] = acc;
    prev = breakpoints_[k];
  }
}

double PiecewiseLinearCost::operator()(double energy) const {
  if (energy < 0.0) throw std::domain_error("production cost: negative consumption");
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), energy);
  size_t seg = static_cast<size_t>(it - breakpoints_.begin());
  double base = seg == 0 ? 0.0 : cum_[seg - 1];
  double from = seg == 0 ? 0.0 : breakpoints_[seg - 1];
  return base + rates_[seg] * (energy - from);
}

double PiecewiseLinearCost::marginal(double energy) const {
  if (energy < 0.0) throw std::domain_error("production cost: negative consumption");
  // Right-derivative: at a breakpoint the next segment's rate applies.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), energy);
  return rates_[static_cast<size_t>(it - breakpoints_.begin())];
}

DiscomfortModel DiscomfortModel::uniform(double scale, double exponent) {
  SlotDiscomfort d;
  d.family = DiscomfortFamily::Uniform;
  d.scale = scale;
  d.exponent = exponent;
  return DiscomfortModel{{d}};
}

DiscomfortModel DiscomfortModel::exponential(double mu, double scale, double exponent) {
  SlotDiscomfort d;
  d.family = DiscomfortFamily::Exponential;
  d.mu = mu;
  d.scale = scale;
  d.exponent = exponent;
  return DiscomfortModel{{d}};
}

double Scenario::total_baseline_energy() const {
  double t = 0.0;
  for (double e : baseline) t += e;
  return t;
}

double Scenario::baseline_production_cost() const {
  double t = 0.0;
  for (int i = 0; i < n_slots; ++i) t += cost_at(i)(baseline[i]);
  return t;
}

namespace {

void validate_slot_discomfort(const SlotDiscomfort& d, int origin) {
  const std::string where = "discomfort[" + std::to_string(origin) + "]: ";
  if (!(d.scale > 0.0)) throw ValidationError(where + "scale must be positive");
  if (!(d.exponent >= 0.0)) throw ValidationError(where + "exponent must be nonnegative");
  switch (d.family) {
    case DiscomfortFamily::Uniform:
      break;
    case DiscomfortFamily::Exponential:
      if (!(d.mu > 0.0)) throw ValidationError(where + "mu must be positive");
      break;
    case DiscomfortFamily::Tabulated: {
      if (d.knots_x.size() != d.knots_f.size() || d.knots_x.size() < 2)
        throw ValidationError(where + "tabulated CDF needs matching knot arrays, length >= 2");
      if (d.knots_x.front() != 0.0 || d.knots_f.front() != 0.0)
        throw ValidationError(where + "tabulated CDF must start at (0, 0)");
      double prev_slope = std::numeric_limits<double>::infinity();
      for (size_t k = 1; k < d.knots_x.size(); ++k) {
        double dx = d.knots_x[k] - d.knots_x[k - 1];
        double df = d.knots_f[k] - d.knots_f[k - 1];
        if (!(dx > 0.0)) throw ValidationError(where + "tabulated knots_x must be ascending");
        if (df < 0.0) throw ValidationError(where + "tabulated CDF must be nondecreasing");
        double slope = df / dx;
        if (slope > prev_slope * (1.0 + 1e-12))
          throw ValidationError(where + "tabulated CDF must be concave");
        prev_slope = slope;
      }
      if (d.knots_f.back() > 1.0 + 1e-12)
        throw ValidationError(where + "tabulated CDF must not exceed 1");
      break;
    }
  }
}

}  // namespace

Scenario validate_scenario(Scenario s) {
  if (s.n_slots < 2) throw ValidationError("n_slots must be at least 2");
  if (static_cast<int>(s.baseline.size()) != s.n_slots)
    throw ValidationError("baseline must have one entry per slot");
  for (int j = 0; j < s.n_slots; ++j) {
    if (!std::isfinite(s.baseline[j]) || s.baseline[j] < 0.0)
      throw ValidationError("baseline must be nonnegative (slot " + std::to_string(j) + ")");
  }
  if (!(s.flat_rate > 0.0)) throw ValidationError("flat_rate must be positive");

  if (s.cost.empty()) throw ValidationError("cost curve is required");
  if (s.cost.size() != 1 && static_cast<int>(s.cost.size()) != s.n_slots)
    throw ValidationError("cost must be one shared curve or one per slot");

  if (s.discomfort.slots.empty()) throw ValidationError("discomfort model is required");
  if (s.discomfort.slots.size() != 1 &&
      static_cast<int>(s.discomfort.slots.size()) != s.n_slots)
    throw ValidationError("discomfort must be one shared entry or one per slot");
  for (size_t j = 0; j < s.discomfort.slots.size(); ++j)
    validate_slot_discomfort(s.discomfort.slots[j], static_cast<int>(j));

  if (s.base_fractions.empty()) {
    s.base_fractions = default_base_fractions(s.n_slots);
  } else {
    if (s.base_fractions.rows() != s.n_slots || s.base_fractions.cols() != s.n_slots)
      throw ValidationError("base_fractions must be an n_slots x n_slots matrix");
    for (int j = 0; j < s.n_slots; ++j) {
      double row = 0.0;
      for (int i = 0; i < s.n_slots; ++i) {
        double q = s.base_fractions(j, i);
        if (!std::isfinite(q) || q < 0.0)
          throw ValidationError("base_fractions must be nonnegative (row " +
                                std::to_string(j) + ")");
        row += q;
      }
      if (row > 1.0 + 1e-12)
        throw ValidationError("base_fractions row " + std::to_string(j) +
                              " must sum to at most 1");
    }
  }
  return s;
}

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::Base: return "base";
    case Mechanism::Optimized: return "optimized";
    case Mechanism::Robust: return "robust";
    case Mechanism::Broadcast: return "broadcast";
  }
  return "?";
}

std::optional<Mechanism> mechanism_from_name(const std::string& name) {
  if (name == "base") return Mechanism::Base;
  if (name == "optimized") return Mechanism::Optimized;
  if (name == "robust") return Mechanism::Robust;
  if (name == "broadcast") return Mechanism::Broadcast;
  return std::nullopt;
}

}  // namespace drmech
