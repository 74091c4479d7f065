// Monte Carlo agent simulator: samples user discomfort types, applies the
// rational choice rule with random tie-breaking, and produces realized shift
// matrices and costs against which the analytic aggregates are validated.
#pragma once

#include <cstdint>
#include <vector>

#include "drmech/model.hpp"

namespace drmech {

enum class CorrelationMode {
  Correlated,   // one beta per (user, origin); d = beta * distance^t
  Independent,  // one draw per (user, origin, destination)
};

struct Population {
  int64_t users = 0;
  int n_slots = 0;
  CorrelationMode mode = CorrelationMode::Correlated;
  uint64_t seed = 0;
  std::vector<double> beta;        // correlated: users x n_slots
  std::vector<double> discomfort;  // independent: users x n_slots x n_slots

  double d(int64_t user, int origin, int dest, double dist_pow) const {
    if (origin == dest) return 0.0;
    if (mode == CorrelationMode::Correlated)
      return beta[user * n_slots + origin] * dist_pow;
    return discomfort[(user * n_slots + origin) * n_slots + dest];
  }
};

// Deterministic in (seed, mode): draws are inverse-CDF transforms of a fixed
// uniform stream, user-major. Every draw is strictly positive off-diagonal.
Population sample_population(const Scenario& s, int64_t users, uint64_t seed,
                             CorrelationMode mode = CorrelationMode::Correlated);

struct GroupStat {
  int origin = 0;
  int dest = 0;
  int64_t group_size = 0;  // users holding this offer (or everyone, broadcast)
  int64_t accepted = 0;    // users who moved origin -> dest
  double analytic_p = 0.0; // acceptance/choice probability per the model
};

struct SimulationResult {
  ShiftMatrix shifts;        // realized, rows sum to the per-user allocation
  CostBreakdown breakdown;   // realized billing under the plan's semantics
  Matrix move_counts;        // (origin, dest) user decision counts
  std::vector<GroupStat> groups;
};

struct SimOptions {
  uint64_t tie_seed = 0;  // 0: derive from the population seed
  bool allow_independent_broadcast = false;
};

// Users are assigned to offer groups by contiguous index ranges proportional
// to the plan's fractions, so group sizes are exact and only the choice
// randomness remains. Each user carries baseline[j] / users MWh per slot.
SimulationResult simulate_plan(const Scenario& s, const OfferPlan& plan,
                               const Population& pop, const SimOptions& opt = {});

}  // namespace drmech
