#include "drmech/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace drmech {

namespace {

void check_box(const std::vector<double>& r, double hi, const char* what) {
  for (double v : r)
    if (!std::isfinite(v) || v < -1e-12 * hi || v > hi * (1.0 + 1e-12))
      throw std::domain_error(std::string(what) + ": discount outside [0, flat_rate]");
}

// Clamp away the rounding dust so row sums stay exact.
double remainder_nonneg(double total, double used) { return std::max(total - used, 0.0); }

Evaluation finalize(const Scenario& s, Matrix flows, double discounts_paid, double wasted) {
  Evaluation ev;
  ev.shifts.entries = std::move(flows);
  std::vector<double> final_e = ev.shifts.final_consumption();
  double prod = 0.0;
  for (int i = 0; i < s.n_slots; ++i) prod += s.cost_at(i)(final_e[i]);
  CostBreakdown& b = ev.breakdown;
  b.production = prod;
  b.discounts_paid = discounts_paid;
  b.wasted_discounts = wasted;
  b.total = prod + discounts_paid;
  double baseline = s.baseline_production_cost();
  b.savings_dollars = baseline - b.total;
  b.savings_fraction = baseline > 0.0 ? b.savings_dollars / baseline : 0.0;
  return ev;
}

}  // namespace

Matrix default_base_fractions(int n_slots) {
  if (n_slots < 2) throw ValidationError("n_slots must be at least 2");
  Matrix q(n_slots, n_slots, 0.0);
  for (int j = 0; j < n_slots; ++j) {
    double denom = 0.0;
    for (int k = 0; k < n_slots; ++k) denom += 1.0 / (std::abs(k - j) + 1.0);
    for (int i = 0; i < n_slots; ++i) {
      if (i == j) continue;
      q(j, i) = 1.0 / (std::abs(i - j) + 1.0) / denom;
    }
  }
  return q;
}

double production_cost(const PiecewiseLinearCost& cost, const std::vector<double>& consumption) {
  double total = 0.0;
  for (double e : consumption) total += cost(e);
  return total;
}

Evaluation evaluate_base(const Scenario& s, const std::vector<double>& discounts) {
  const int n = s.n_slots;
  if (static_cast<int>(discounts.size()) != n)
    throw std::domain_error("base plan: need one discount per slot");
  check_box(discounts, s.flat_rate, "base plan");

  Matrix flows(n, n, 0.0);
  double paid = 0.0;
  for (int j = 0; j < n; ++j) {
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      double r = std::clamp(discounts[i], 0.0, s.flat_rate);
      double p = single_offer_accept_prob(s.discomfort, j, i, r);
      double e = s.base_fractions(j, i) * p * s.baseline[j];
      flows(j, i) = e;
      out += e;
      paid += r * e;
    }
    flows(j, j) = remainder_nonneg(s.baseline[j], out);
  }
  return finalize(s, std::move(flows), paid, 0.0);
}

Evaluation evaluate_optimized(const Scenario& s, const Matrix& discounts,
                              const Matrix& fractions) {
  const int n = s.n_slots;
  if (discounts.rows() != n || discounts.cols() != n || fractions.rows() != n ||
      fractions.cols() != n)
    throw std::domain_error("optimized plan: matrices must be n_slots x n_slots");
  for (int z = 0; z < n; ++z) {
    double row = 0.0;
    for (int i = 0; i < n; ++i) {
      double q = fractions(z, i);
      if (!std::isfinite(q) || q < -1e-12 || q > 1.0 + 1e-12)
        throw std::domain_error("optimized plan: fraction outside [0, 1]");
      double r = discounts(z, i);
      if (!std::isfinite(r) || r < -1e-12 * s.flat_rate || r > s.flat_rate * (1.0 + 1e-12))
        throw std::domain_error("optimized plan: discount outside [0, flat_rate]");
      row += q;
    }
    if (row > 1.0 + 1e-9)
      throw std::domain_error("optimized plan: fractions in row " + std::to_string(z) +
                              " sum to more than 1");
  }

  Matrix flows(n, n, 0.0);
  double paid = 0.0;
  for (int z = 0; z < n; ++z) {
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == z) continue;
      double r = std::clamp(discounts(z, i), 0.0, s.flat_rate);
      double p = single_offer_accept_prob(s.discomfort, z, i, r);
      double e = fractions(z, i) * p * s.baseline[z];
      flows(z, i) = e;
      out += e;
      paid += r * e;
    }
    flows(z, z) = remainder_nonneg(s.baseline[z], out);
  }
  return finalize(s, std::move(flows), paid, 0.0);
}

Evaluation evaluate_robust(const Scenario& s, const std::vector<double>& discounts,
                           const std::vector<double>& fractions) {
  const int n = s.n_slots;
  if (static_cast<int>(discounts.size()) != n || static_cast<int>(fractions.size()) != n)
    throw std::domain_error("robust plan: need one discount and one fraction per slot");
  check_box(discounts, s.flat_rate, "robust plan");
  double qsum = 0.0;
  for (double q : fractions) {
    if (!std::isfinite(q) || q < -1e-12 || q > 1.0 + 1e-12)
      throw std::domain_error("robust plan: fraction outside [0, 1]");
    qsum += q;
  }
  if (qsum > 1.0 + 1e-9)
    throw std::domain_error("robust plan: fractions sum to more than 1");

  Matrix flows(n, n, 0.0);
  double paid = 0.0, wasted = 0.0;
  for (int i = 0; i < n; ++i) {
    // Group i's retained consumption in its own slot is discounted whether or
    // not anything moves; that part is pure waste.
    double group_in_slot = fractions[i] * s.baseline[i];
    wasted += discounts[i] * group_in_slot;
    paid += discounts[i] * group_in_slot;
  }
  for (int j = 0; j < n; ++j) {
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      double r = std::clamp(discounts[i], 0.0, s.flat_rate);
      double p = single_offer_accept_prob(s.discomfort, j, i, r);
      double e = fractions[i] * p * s.baseline[j];
      flows(j, i) = e;
      out += e;
      paid += discounts[i] * e;
    }
    flows(j, j) = remainder_nonneg(s.baseline[j], out);
  }
  return finalize(s, std::move(flows), paid, wasted);
}

Evaluation evaluate_broadcast(const Scenario& s, const BroadcastChoice& choice,
                              const std::vector<double>& discounts, double smoothing) {
  const int n = s.n_slots;
  if (static_cast<int>(discounts.size()) != n)
    throw std::domain_error("broadcast plan: need one discount per slot");
  check_box(discounts, s.flat_rate, "broadcast plan");

  Matrix flows(n, n, 0.0);
  for (int j = 0; j < n; ++j) {
    ShiftDistribution dist = choice.distribution(j, discounts, smoothing);
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      double e = dist.probabilities[i] * s.baseline[j];
      flows(j, i) = e;
      out += e;
    }
    flows(j, j) = remainder_nonneg(s.baseline[j], out);
  }
  // Everyone pays the discounted price of the slot they end up in.
  double paid = 0.0, wasted = 0.0;
  std::vector<double> final_e = flows.col_sums();
  for (int i = 0; i < n; ++i) {
    paid += discounts[i] * final_e[i];
    wasted += discounts[i] * flows(i, i);
  }
  return finalize(s, std::move(flows), paid, wasted);
}

Evaluation evaluate_broadcast(const Scenario& s, const std::vector<double>& discounts,
                              double smoothing) {
  BroadcastChoice choice(s.discomfort, s.n_slots, s.flat_rate);
  return evaluate_broadcast(s, choice, discounts, smoothing);
}

Evaluation evaluate_plan(const Scenario& s, const OfferPlan& plan, double smoothing) {
  if (const auto* p = std::get_if<BasePlan>(&plan)) return evaluate_base(s, p->discounts);
  if (const auto* p = std::get_if<OptimizedPlan>(&plan))
    return evaluate_optimized(s, p->discounts, p->fractions);
  if (const auto* p = std::get_if<RobustPlan>(&plan))
    return evaluate_robust(s, p->discounts, p->fractions);
  const auto& p = std::get<BroadcastPlan>(plan);
  return evaluate_broadcast(s, p.discounts, smoothing);
}

DictatorialResult dictatorial_bound(const Scenario& s) {
  const int n = s.n_slots;
  struct Segment {
    double rate;
    double capacity;  // +inf for the last segment of a curve
    int slot;
  };
  std::vector<Segment> segments;
  for (int i = 0; i < n; ++i) {
    const PiecewiseLinearCost& c = s.cost_at(i);
    double prev = 0.0;
    for (size_t k = 0; k < c.breakpoints().size(); ++k) {
      segments.push_back({c.marginal_rates()[k], c.breakpoints()[k] - prev, i});
      prev = c.breakpoints()[k];
    }
    segments.push_back({c.marginal_rates().back(),
                        std::numeric_limits<double>::infinity(), i});
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment& a, const Segment& b) { return a.rate < b.rate; });

  DictatorialResult res;
  res.allocation.assign(n, 0.0);
  double remaining = s.total_baseline_energy();
  size_t k = 0;
  while (remaining > 0.0 && k < segments.size()) {
    // Take the whole equal-rate class at once so a partial fill can be split
    // deterministically across its segments.
    size_t end = k;
    double finite_cap = 0.0;
    int infinite_count = 0;
    while (end < segments.size() && segments[end].rate == segments[k].rate) {
      if (std::isinf(segments[end].capacity))
        ++infinite_count;
      else
        finite_cap += segments[end].capacity;
      ++end;
    }
    if (remaining >= finite_cap && infinite_count == 0) {
      for (size_t m = k; m < end; ++m) res.allocation[segments[m].slot] += segments[m].capacity;
      remaining -= finite_cap;
    } else if (infinite_count == 0) {
      double ratio = remaining / finite_cap;
      for (size_t m = k; m < end; ++m)
        res.allocation[segments[m].slot] += segments[m].capacity * ratio;
      remaining = 0.0;
    } else {
      // Fill the finite segments of the class, then split the rest equally
      // over the unbounded ones. Any split costs the same at equal rates.
      double to_finite = std::min(remaining, finite_cap);
      double ratio = finite_cap > 0.0 ? to_finite / finite_cap : 0.0;
      double leftover = remaining - to_finite;
      for (size_t m = k; m < end; ++m) {
        if (std::isinf(segments[m].capacity))
          res.allocation[segments[m].slot] += leftover / infinite_count;
        else
          res.allocation[segments[m].slot] += segments[m].capacity * ratio;
      }
      remaining = 0.0;
    }
    k = end;
  }

  res.production = 0.0;
  for (int i = 0; i < n; ++i) res.production += s.cost_at(i)(res.allocation[i]);
  double baseline = s.baseline_production_cost();
  res.saving = baseline - res.production;
  res.saving_fraction = baseline > 0.0 ? res.saving / baseline : 0.0;
  return res;
}

}  // namespace drmech
