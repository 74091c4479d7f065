// Acceptance and shift probabilities induced by the discomfort model.
//
// Single-offer mechanisms only need F[j->i](R) = Prob(d[j->i] < R). The
// broadcast mechanism needs the full choice distribution: each user picks the
// slot maximizing net utility R_k - beta * |k-j|^t, so option k is a line in
// beta and the winner on each beta interval comes from the upper envelope of
// those lines. Coincident lines (equal distance, equal discount) split their
// interval's probability mass equally; a smoothed variant replaces the hard
// split with logistic weights so the resulting cost is continuous in R.
#pragma once

#include <vector>

#include "drmech/model.hpp"

namespace drmech {

// F_j evaluated at x >= 0 (dollars per unit discomfort).
double cdf_eval(const DiscomfortModel& model, int origin, double x);

// Right-derivative density of F_j at x >= 0.
double density_eval(const DiscomfortModel& model, int origin, double x);

// Inverse CDF at u in (0, 1); +inf when u exceeds the total mass of a
// tabulated sub-CDF. Used by the population sampler.
double cdf_inverse(const DiscomfortModel& model, int origin, double u);

// Prob(d[j->i] < discount) for a single move offer, i != j.
double single_offer_accept_prob(const DiscomfortModel& model, int origin, int dest,
                                double discount);

struct ShiftDistribution {
  int origin = 0;
  std::vector<double> probabilities;  // P[j->i] per destination, sums to 1
  bool had_tie = false;               // an equal-slope, equal-discount class was split
};

// Broadcast choice probabilities for every origin of one scenario shape.
// The slope classes depend only on (n_slots, exponent), so they are built
// once and reused across discount vectors; `distribution` itself is pure.
class BroadcastChoice {
 public:
  BroadcastChoice(const DiscomfortModel& model, int n_slots, double flat_rate);

  // Choice distribution for one origin slot given the public discounts.
  // smoothing == 0 gives the exact (discontinuous in R) tie handling.
  ShiftDistribution distribution(int origin, const std::vector<double>& discounts,
                                 double smoothing) const;

  int n_slots() const { return n_slots_; }

 private:
  struct SlopeClass {
    double slope_coeff = 0.0;   // c = distance^t; option k is the line R_k - beta * c
    std::vector<int> members;   // destination slots sharing this slope
  };
  struct OriginTable {
    // Ordered by descending slope_coeff; the stay class (c = 0) comes last.
    std::vector<SlopeClass> classes;
  };

  DiscomfortModel model_;
  int n_slots_;
  double tie_tol_;
  std::vector<OriginTable> tables_;
};

// One-shot convenience wrapper around BroadcastChoice.
ShiftDistribution broadcast_shift_distribution(const DiscomfortModel& model, int n_slots,
                                               double flat_rate, int origin,
                                               const std::vector<double>& discounts,
                                               double smoothing = 0.0);

}  // namespace drmech
