#include "drmech/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drmech/probability.hpp"
#include "drmech/rng.hpp"

namespace drmech {

namespace {

std::vector<double> distance_pow_row(const Scenario& s, int origin) {
  std::vector<double> m(s.n_slots, 0.0);
  double t = s.discomfort.at(origin).exponent;
  for (int i = 0; i < s.n_slots; ++i)
    if (i != origin) m[i] = std::pow(std::abs(i - origin), t);
  return m;
}

// Contiguous user ranges proportional to the fractions, in destination order.
// Users beyond the last boundary hold no offer.
struct UserRange {
  int dest;
  int64_t lo, hi;
};

std::vector<UserRange> stratify(const std::vector<std::pair<int, double>>& fractions,
                                int64_t users) {
  std::vector<UserRange> ranges;
  double cum = 0.0;
  int64_t prev = 0;
  for (const auto& [dest, q] : fractions) {
    cum += q;
    int64_t hi = std::clamp<int64_t>(std::llround(cum * static_cast<double>(users)),
                                     prev, users);
    ranges.push_back({dest, prev, hi});
    prev = hi;
  }
  return ranges;
}

struct Accumulator {
  const Scenario& s;
  int64_t users;
  std::vector<double> share;     // per-user baseline, MWh per slot
  Matrix counts;                 // user decisions (origin, dest)
  std::vector<int64_t> moved_out;  // per origin, users who left

  Accumulator(const Scenario& sc, int64_t u)
      : s(sc), users(u), share(sc.n_slots), counts(sc.n_slots, sc.n_slots, 0.0),
        moved_out(sc.n_slots, 0) {
    for (int j = 0; j < sc.n_slots; ++j)
      share[j] = sc.baseline[j] / static_cast<double>(u);
  }

  void move(int origin, int dest) {
    counts(origin, dest) += 1.0;
    ++moved_out[origin];
  }

  void finish_diagonal() {
    for (int j = 0; j < s.n_slots; ++j)
      counts(j, j) = static_cast<double>(users - moved_out[j]);
  }

  Matrix flows() const {
    Matrix f(s.n_slots, s.n_slots, 0.0);
    for (int j = 0; j < s.n_slots; ++j)
      for (int i = 0; i < s.n_slots; ++i) f(j, i) = counts(j, i) * share[j];
    return f;
  }
};

SimulationResult finish(const Scenario& s, Accumulator& acc, double paid, double wasted) {
  acc.finish_diagonal();
  SimulationResult res;
  res.move_counts = acc.counts;
  res.shifts.entries = acc.flows();
  std::vector<double> final_e = res.shifts.final_consumption();
  double prod = 0.0;
  for (int i = 0; i < s.n_slots; ++i) prod += s.cost_at(i)(final_e[i]);
  CostBreakdown& b = res.breakdown;
  b.production = prod;
  b.discounts_paid = paid;
  b.wasted_discounts = wasted;
  b.total = prod + paid;
  double baseline = s.baseline_production_cost();
  b.savings_dollars = baseline - b.total;
  b.savings_fraction = baseline > 0.0 ? b.savings_dollars / baseline : 0.0;
  return res;
}

// Single-offer decision: move exactly when the discount beats the discomfort;
// an exact tie is a coin flip between two equally good options.
bool accepts(double discount, double discomfort, Rng& tie_rng) {
  double net = discount - discomfort;
  if (net > 0.0) return true;
  if (net == 0.0) return tie_rng.below(2) == 0;
  return false;
}

SimulationResult simulate_single_offer_rows(const Scenario& s, const Matrix& discounts,
                                            const Matrix& fractions, const Population& pop,
                                            Rng& tie_rng) {
  Accumulator acc(s, pop.users);
  double paid = 0.0;
  std::vector<GroupStat> stats;
  for (int z = 0; z < s.n_slots; ++z) {
    std::vector<double> m = distance_pow_row(s, z);
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < s.n_slots; ++i)
      if (i != z) row.emplace_back(i, fractions(z, i));
    for (const UserRange& r : stratify(row, pop.users)) {
      double discount = discounts(z, r.dest);
      int64_t accepted = 0;
      for (int64_t u = r.lo; u < r.hi; ++u) {
        if (accepts(discount, pop.d(u, z, r.dest, m[r.dest]), tie_rng)) {
          acc.move(z, r.dest);
          ++accepted;
        }
      }
      paid += discount * acc.share[z] * static_cast<double>(accepted);
      stats.push_back({z, r.dest, r.hi - r.lo, accepted,
                       single_offer_accept_prob(s.discomfort, z, r.dest, discount)});
    }
  }
  SimulationResult res = finish(s, acc, paid, 0.0);
  res.groups = std::move(stats);
  return res;
}

SimulationResult simulate_robust(const Scenario& s, const RobustPlan& plan,
                                 const Population& pop, Rng& tie_rng) {
  Accumulator acc(s, pop.users);
  std::vector<std::pair<int, double>> groups;
  for (int i = 0; i < s.n_slots; ++i) groups.emplace_back(i, plan.fractions[i]);
  std::vector<std::vector<double>> m(s.n_slots);
  for (int j = 0; j < s.n_slots; ++j) m[j] = distance_pow_row(s, j);

  double paid = 0.0, wasted = 0.0;
  std::vector<GroupStat> stats;
  for (const UserRange& r : stratify(groups, pop.users)) {
    const int dest = r.dest;
    const double discount = plan.discounts[dest];
    const int64_t size = r.hi - r.lo;
    // The group's own baseline in its slot never moves and is billed at the
    // discounted price whether or not anything else shifts.
    paid += discount * acc.share[dest] * static_cast<double>(size);
    wasted += discount * acc.share[dest] * static_cast<double>(size);
    for (int j = 0; j < s.n_slots; ++j) {
      if (j == dest) continue;
      int64_t accepted = 0;
      for (int64_t u = r.lo; u < r.hi; ++u) {
        if (accepts(discount, pop.d(u, j, dest, m[j][dest]), tie_rng)) {
          acc.move(j, dest);
          ++accepted;
        }
      }
      paid += discount * acc.share[j] * static_cast<double>(accepted);
      stats.push_back({j, dest, size, accepted,
                       single_offer_accept_prob(s.discomfort, j, dest, discount)});
    }
  }
  SimulationResult res = finish(s, acc, paid, wasted);
  res.groups = std::move(stats);
  return res;
}

SimulationResult simulate_broadcast(const Scenario& s, const BroadcastPlan& plan,
                                    const Population& pop, Rng& tie_rng) {
  Accumulator acc(s, pop.users);
  const int n = s.n_slots;
  std::vector<std::vector<double>> m(n);
  for (int j = 0; j < n; ++j) m[j] = distance_pow_row(s, j);

  std::vector<int> argmax;
  argmax.reserve(n);
  for (int64_t u = 0; u < pop.users; ++u) {
    for (int j = 0; j < n; ++j) {
      double best = 0.0;
      argmax.clear();
      for (int k = 0; k < n; ++k) {
        double utility = plan.discounts[k] - pop.d(u, j, k, m[j][k]);
        if (argmax.empty() || utility > best) {
          best = utility;
          argmax.assign(1, k);
        } else if (utility == best) {
          argmax.push_back(k);
        }
      }
      int choice = argmax.size() == 1
                       ? argmax[0]
                       : argmax[tie_rng.below(argmax.size())];
      if (choice != j) acc.move(j, choice);
    }
  }

  acc.finish_diagonal();
  Matrix flows = acc.flows();
  std::vector<double> final_e = flows.col_sums();
  double paid = 0.0, wasted = 0.0;
  for (int i = 0; i < n; ++i) {
    paid += plan.discounts[i] * final_e[i];
    wasted += plan.discounts[i] * flows(i, i);
  }

  SimulationResult res;
  res.move_counts = acc.counts;
  res.shifts.entries = std::move(flows);
  double prod = 0.0;
  for (int i = 0; i < n; ++i) prod += s.cost_at(i)(final_e[i]);
  CostBreakdown& b = res.breakdown;
  b.production = prod;
  b.discounts_paid = paid;
  b.wasted_discounts = wasted;
  b.total = prod + paid;
  double baseline = s.baseline_production_cost();
  b.savings_dollars = baseline - b.total;
  b.savings_fraction = baseline > 0.0 ? b.savings_dollars / baseline : 0.0;

  BroadcastChoice choice(s.discomfort, n, s.flat_rate);
  for (int j = 0; j < n; ++j) {
    ShiftDistribution dist = choice.distribution(j, plan.discounts, 0.0);
    for (int i = 0; i < n; ++i) {
      res.groups.push_back({j, i, pop.users,
                            static_cast<int64_t>(res.move_counts(j, i)),
                            dist.probabilities[i]});
    }
  }
  return res;
}

}  // namespace

Population sample_population(const Scenario& s, int64_t users, uint64_t seed,
                             CorrelationMode mode) {
  if (users < 1) throw std::invalid_argument("sample_population: need at least one user");
  Population pop;
  pop.users = users;
  pop.n_slots = s.n_slots;
  pop.mode = mode;
  pop.seed = seed;
  Rng rng(mix64(seed, 0x5a3c61u));
  const int n = s.n_slots;
  if (mode == CorrelationMode::Correlated) {
    pop.beta.resize(static_cast<size_t>(users) * n);
    for (int64_t u = 0; u < users; ++u)
      for (int j = 0; j < n; ++j)
        pop.beta[u * n + j] = cdf_inverse(s.discomfort, j, rng.uniform01_pos());
  } else {
    pop.discomfort.assign(static_cast<size_t>(users) * n * n, 0.0);
    for (int64_t u = 0; u < users; ++u) {
      for (int j = 0; j < n; ++j) {
        std::vector<double> m = distance_pow_row(s, j);
        for (int i = 0; i < n; ++i) {
          if (i == j) continue;
          pop.discomfort[(u * n + j) * n + i] =
              cdf_inverse(s.discomfort, j, rng.uniform01_pos()) * m[i];
        }
      }
    }
  }
  return pop;
}

SimulationResult simulate_plan(const Scenario& s, const OfferPlan& plan,
                               const Population& pop, const SimOptions& opt) {
  if (pop.n_slots != s.n_slots)
    throw std::invalid_argument("simulate_plan: population shape does not match scenario");
  uint64_t tie_seed = opt.tie_seed != 0 ? opt.tie_seed : mix64(pop.seed, 0x71e5eedu);
  Rng tie_rng(tie_seed);

  if (const auto* bp = std::get_if<BasePlan>(&plan)) {
    const int n = s.n_slots;
    Matrix discounts(n, n, 0.0);
    for (int z = 0; z < n; ++z)
      for (int i = 0; i < n; ++i)
        if (i != z) discounts(z, i) = bp->discounts[i];
    return simulate_single_offer_rows(s, discounts, s.base_fractions, pop, tie_rng);
  }
  if (const auto* op = std::get_if<OptimizedPlan>(&plan))
    return simulate_single_offer_rows(s, op->discounts, op->fractions, pop, tie_rng);
  if (const auto* rp = std::get_if<RobustPlan>(&plan))
    return simulate_robust(s, *rp, pop, tie_rng);

  const auto& bc = std::get<BroadcastPlan>(plan);
  if (pop.mode == CorrelationMode::Independent && !opt.allow_independent_broadcast)
    throw std::invalid_argument(
        "simulate_plan: broadcast needs a correlated population (or explicitly allow "
        "the independent mode)");
  return simulate_broadcast(s, bc, pop, tie_rng);
}

}  // namespace drmech
