// Domain types shared by every other component: scenario definition, cost
// curves, discomfort distributions, offer plans and result records.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "drmech/matrix.hpp"

namespace drmech {

// Thrown by validation with a message naming the offending field.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Convex increasing piecewise-linear production cost, zero at zero.
// `marginal_rates` holds one rate per segment ($/MWh, strictly increasing);
// `breakpoints` holds the segment boundaries (MWh, strictly ascending, one
// fewer than the rates, possibly empty).
class PiecewiseLinearCost {
 public:
  PiecewiseLinearCost() = default;
  PiecewiseLinearCost(std::vector<double> breakpoints, std::vector<double> marginal_rates);

  // Exact integral of the marginal rate from 0 to energy.
  double operator()(double energy) const;

  // Right-derivative marginal rate at `energy`.
  double marginal(double energy) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& marginal_rates() const { return rates_; }

  friend bool operator==(const PiecewiseLinearCost& a, const PiecewiseLinearCost& b) {
    return a.breakpoints_ == b.breakpoints_ && a.rates_ == b.rates_;
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> rates_{0.0};
  std::vector<double> cum_;  // cost value at each breakpoint
};

enum class DiscomfortFamily { Uniform, Exponential, Tabulated };

// Per-origin-slot description of the discomfort random variable beta.
// Moving one MWh from slot j to slot i costs the user
//   d[j->i] = beta_j * |i - j|^exponent   (dollars per MWh, zero for i == j).
struct SlotDiscomfort {
  DiscomfortFamily family = DiscomfortFamily::Exponential;
  double mu = 1.0;        // flexibility, exponential family only (> 0)
  double scale = 0.0;     // dollar scale s (> 0); loaders default it to the flat rate
  double exponent = 1.0;  // shift-distance exponent t_j (>= 0)
  // Tabulated family: CDF knots, x ascending from 0, F(0) = 0, F nondecreasing
  // and concave. A final value below 1 leaves tail mass that never accepts.
  std::vector<double> knots_x;
  std::vector<double> knots_f;

  friend bool operator==(const SlotDiscomfort&, const SlotDiscomfort&) = default;
};

// Either one shared entry or one entry per origin slot.
struct DiscomfortModel {
  std::vector<SlotDiscomfort> slots;

  const SlotDiscomfort& at(int origin) const {
    return slots.size() == 1 ? slots.front() : slots.at(origin);
  }
  bool shared() const { return slots.size() == 1; }

  static DiscomfortModel uniform(double scale, double exponent = 0.0);
  static DiscomfortModel exponential(double mu, double scale, double exponent = 1.0);

  friend bool operator==(const DiscomfortModel&, const DiscomfortModel&) = default;
};

struct Scenario {
  int n_slots = 0;
  std::vector<double> baseline;          // E0 per slot, MWh, >= 0
  double flat_rate = 0.0;                // B, $/MWh, > 0
  std::vector<PiecewiseLinearCost> cost; // one shared curve or one per slot
  DiscomfortModel discomfort;
  Matrix base_fractions;                 // q[j][i], rows sum to <= 1, diag 0

  const PiecewiseLinearCost& cost_at(int slot) const {
    return cost.size() == 1 ? cost.front() : cost.at(slot);
  }
  double total_baseline_energy() const;
  double baseline_production_cost() const;
};

// Checks every invariant and fills base_fractions with the default
// distance-weighted split when absent. Throws ValidationError otherwise.
Scenario validate_scenario(Scenario raw);

// ---------------------------------------------------------------------------
// Offer plans (decision variables of the four mechanisms), all in $/MWh.

struct BasePlan {
  std::vector<double> discounts;  // R_i per destination slot
  friend bool operator==(const BasePlan&, const BasePlan&) = default;
};

struct OptimizedPlan {
  Matrix discounts;  // R[z][i], offer made to movers z -> i
  Matrix fractions;  // q[z][i], each row on the capped simplex
  friend bool operator==(const OptimizedPlan&, const OptimizedPlan&) = default;
};

struct RobustPlan {
  std::vector<double> discounts;  // R_i per offer group
  std::vector<double> fractions;  // q_i, sum <= 1
  friend bool operator==(const RobustPlan&, const RobustPlan&) = default;
};

struct BroadcastPlan {
  std::vector<double> discounts;  // R_i, public
  friend bool operator==(const BroadcastPlan&, const BroadcastPlan&) = default;
};

using OfferPlan = std::variant<BasePlan, OptimizedPlan, RobustPlan, BroadcastPlan>;

enum class Mechanism { Base, Optimized, Robust, Broadcast };

const char* mechanism_name(Mechanism m);
std::optional<Mechanism> mechanism_from_name(const std::string& name);

// ---------------------------------------------------------------------------
// Results

// entries(j, i) = demand moved from slot j to slot i, MWh; the diagonal is
// the demand retained in its original slot. Row j sums to baseline[j].
struct ShiftMatrix {
  Matrix entries;

  std::vector<double> final_consumption() const { return entries.col_sums(); }
  std::vector<double> row_sums() const { return entries.row_sums(); }
};

struct CostBreakdown {
  double production = 0.0;        // $
  double discounts_paid = 0.0;    // $
  double wasted_discounts = 0.0;  // $, subset of discounts_paid
  double total = 0.0;             // production + discounts_paid
  double savings_dollars = 0.0;   // baseline total cost minus total
  double savings_fraction = 0.0;  // savings normalized to baseline total cost

  friend bool operator==(const CostBreakdown&, const CostBreakdown&) = default;
};

struct StartRecord {
  int start = 0;
  double objective = 0.0;  // converged objective (exact cost for broadcast)
  int iterations = 0;
  bool aborted = false;
};

struct OptimizationResult {
  OfferPlan best_plan;
  CostBreakdown best_breakdown;
  int starts = 0;  // total descents run, including augmented starts
  std::vector<StartRecord> per_start;
  uint64_t seed = 0;
  double wall_time_s = 0.0;
};

}  // namespace drmech
