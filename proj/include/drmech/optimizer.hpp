// Multi-start projected local descent over each mechanism's feasible set.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drmech/mechanisms.hpp"
#include "drmech/model.hpp"

namespace drmech {

struct OptimizerOptions {
  int starts = 100;
  int max_iters = 2000;           // per start
  double fd_step_rel = 1e-5;      // finite-difference step, relative to flat_rate
  double grad_tol_rel = 1e-6;     // projected-gradient tolerance x (baseline cost / B)
  double obj_rel_tol = 1e-10;     // stop when the relative decrease falls below this
  double step_init = 1.0;
  double step_shrink = 0.5;
  double armijo = 1e-4;
  // Broadcast smoothing schedule: geometric from hi to lo (relative to B)
  // across the stages of each start; the reported cost is always exact.
  double smooth_eps_hi_rel = 0.1;
  double smooth_eps_lo_rel = 1e-3;
  int smooth_stages = 5;
  double smooth_eps_fixed = -1.0;  // >= 0 pins a single absolute epsilon instead
  uint64_t seed = 1;
  int threads = 0;   // 0: honor DRMECH_THREADS, else hardware concurrency
  bool augment = true;  // add the zero plan and embedded simpler-mechanism optima
};

// Entrywise clamp; the Euclidean projection onto [lo, hi]^n.
std::vector<double> project_box(std::vector<double> x, double lo, double hi);

// Euclidean projection onto {0 <= q_i <= 1, sum q_i <= cap} by the sort-based
// threshold method.
std::vector<double> project_capped_simplex(std::vector<double> v, double cap = 1.0);

struct DescentOptions {
  int max_iters = 2000;
  double step_init = 1.0;
  double step_shrink = 0.5;
  double armijo = 1e-4;
  double pg_tol = 1e-8;       // stop when ||x - P(x - g)|| falls below this
  double obj_rel_tol = 1e-10;
};

struct DescentOutcome {
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  bool aborted = false;
  std::string diagnostic;
};

using ObjectiveFn = std::function<double(const std::vector<double>&)>;
using GradientFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;
using ProjectionFn = std::function<void(std::vector<double>&)>;

// Projected gradient descent with Armijo backtracking. Every iterate is
// feasible and the objective never increases. A non-finite objective value
// aborts the run with a diagnostic.
DescentOutcome local_descent(const ObjectiveFn& f, const GradientFn& grad,
                             std::vector<double> x0, const ProjectionFn& project,
                             const DescentOptions& opt);

// Central finite differences, step h per coordinate.
void finite_difference_gradient(const ObjectiveFn& f, const std::vector<double>& x,
                                double h, std::vector<double>& g);

// Runs `opt.starts` random feasible starts (plus augmented ones) of projected
// descent and returns the best converged plan. Deterministic given the seed:
// start k draws from a child stream derived from seed ^ k, so results do not
// depend on thread scheduling. `extra_starts` plans are appended as
// additional starts; they must match the mechanism's plan variant.
OptimizationResult multi_start_minimize(Mechanism mechanism, const Scenario& s,
                                        const OptimizerOptions& opt,
                                        const std::vector<OfferPlan>& extra_starts = {});

// Embeddings of simpler plans into the optimized mechanism's variable space.
OptimizedPlan embed_base_plan(const Scenario& s, const BasePlan& plan);
OptimizedPlan embed_robust_plan(const Scenario& s, const RobustPlan& plan);

// Copy of the plan with every discount multiplied by `factor` and clamped to
// [0, cap]. With the exponential discomfort family, scaling discounts by
// mu_old / mu_new reproduces a plan's exact flows at the new flexibility for
// a strictly lower outlay, which makes rescaled previous optima ideal warm
// starts along a flexibility sweep.
OfferPlan scale_plan_discounts(OfferPlan plan, double factor, double cap);

// Worker cap: explicit option, else DRMECH_THREADS, else hardware concurrency.
int resolve_thread_count(int requested);

}  // namespace drmech
