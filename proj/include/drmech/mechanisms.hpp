// Shift-matrix and cost evaluation for the four demand-response mechanisms,
// plus the default population fractions and the dictatorial lower bound.
#pragma once

#include <vector>

#include "drmech/model.hpp"
#include "drmech/probability.hpp"

namespace drmech {

// Default fractions q[j][i] proportional to 1 / (|i-j| + 1), normalized per
// row over all slots including the origin itself; the diagonal is then set
// to zero since there is no move-to-self offer.
Matrix default_base_fractions(int n_slots);

// Exact integral of the marginal rate, summed over slots.
double production_cost(const PiecewiseLinearCost& cost, const std::vector<double>& consumption);

struct Evaluation {
  ShiftMatrix shifts;
  CostBreakdown breakdown;
};

// Base: fixed fractions from the scenario, one discount per destination,
// only moved demand is paid.
Evaluation evaluate_base(const Scenario& s, const std::vector<double>& discounts);

// Optimized: per-(origin, destination) discounts and fractions, only moved
// demand is paid. Diagonal entries are not offers and are ignored.
Evaluation evaluate_optimized(const Scenario& s, const Matrix& discounts,
                              const Matrix& fractions);

// Robust: one offer group per destination slot; the group's whole final
// consumption in that slot is discounted, including the demand that was
// already there, which is counted as waste.
Evaluation evaluate_robust(const Scenario& s, const std::vector<double>& discounts,
                           const std::vector<double>& fractions);

// Broadcast: public discounts, everyone pays the discounted price of their
// final slot; the retained demand's discount is counted as waste.
Evaluation evaluate_broadcast(const Scenario& s, const std::vector<double>& discounts,
                              double smoothing = 0.0);
Evaluation evaluate_broadcast(const Scenario& s, const BroadcastChoice& choice,
                              const std::vector<double>& discounts, double smoothing = 0.0);

// Evaluates whichever plan variant is held. `smoothing` applies to broadcast only.
Evaluation evaluate_plan(const Scenario& s, const OfferPlan& plan, double smoothing = 0.0);

struct DictatorialResult {
  std::vector<double> allocation;  // production-cost-minimal consumption
  double production = 0.0;         // $ at that allocation
  double saving = 0.0;             // $ vs baseline production cost
  double saving_fraction = 0.0;    // saving / baseline production cost
};

// Cost-minimal rearrangement of the total baseline energy, ignoring
// discounts and discomfort: greedy fill of marginal-rate segments, splitting
// the last partially used rate class proportionally to segment capacity.
DictatorialResult dictatorial_bound(const Scenario& s);

}  // namespace drmech
