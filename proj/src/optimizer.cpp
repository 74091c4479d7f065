#include "drmech/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "drmech/rng.hpp"

namespace drmech {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> project_box(std::vector<double> x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("project_box: lo must not exceed hi");
  for (double& v : x) v = std::clamp(v, lo, hi);
  return x;
}

std::vector<double> project_capped_simplex(std::vector<double> v, double cap) {
  const size_t n = v.size();
  if (cap <= 0.0) return std::vector<double>(n, 0.0);
  std::vector<double> clipped(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    clipped[i] = std::clamp(v[i], 0.0, 1.0);
    sum += clipped[i];
  }
  if (sum <= cap) return clipped;

  // The sum constraint is active: find tau with sum_i clamp(v_i - tau, 0, 1)
  // equal to cap. The map is piecewise linear and nonincreasing in tau with
  // knots at v_i and v_i - 1.
  std::vector<double> knots;
  knots.reserve(2 * n);
  for (double x : v) {
    knots.push_back(x);
    knots.push_back(x - 1.0);
  }
  std::sort(knots.begin(), knots.end());
  auto g = [&](double tau) {
    double s = 0.0;
    for (double x : v) s += std::clamp(x - tau, 0.0, 1.0);
    return s;
  };
  double tau = knots.back();  // g there is 0 <= cap
  for (size_t t = 0; t + 1 < knots.size(); ++t) {
    double glo = g(knots[t]);
    double ghi = g(knots[t + 1]);
    if (glo >= cap && cap >= ghi) {
      tau = glo == ghi ? knots[t]
                       : knots[t] + (glo - cap) * (knots[t + 1] - knots[t]) / (glo - ghi);
      break;
    }
  }
  for (size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - tau, 0.0, 1.0);
  return v;
}

void finite_difference_gradient(const ObjectiveFn& f, const std::vector<double>& x,
                                double h, std::vector<double>& g) {
  std::vector<double> p = x;
  g.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    double fp = f(p);
    p[i] = x[i] - h;
    double fm = f(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
}

DescentOutcome local_descent(const ObjectiveFn& f, const GradientFn& grad,
                             std::vector<double> x0, const ProjectionFn& project,
                             const DescentOptions& opt) {
  DescentOutcome out;
  project(x0);
  out.x = std::move(x0);
  out.objective = f(out.x);
  if (!std::isfinite(out.objective)) {
    out.aborted = true;
    out.diagnostic = "objective not finite at the starting point";
    return out;
  }

  const size_t n = out.x.size();
  std::vector<double> g(n), trial(n), pg(n);
  double step_prev = opt.step_init;
  for (int it = 0; it < opt.max_iters; ++it) {
    grad(out.x, g);
    for (double gv : g) {
      if (!std::isfinite(gv)) {
        out.aborted = true;
        out.diagnostic = "gradient not finite at iteration " + std::to_string(it);
        return out;
      }
    }
    // Projected-gradient stationarity measure with unit step.
    pg = out.x;
    for (size_t i = 0; i < n; ++i) pg[i] -= g[i];
    project(pg);
    double pg_norm = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double d = out.x[i] - pg[i];
      pg_norm += d * d;
    }
    if (std::sqrt(pg_norm) <= opt.pg_tol) break;

    double step = std::min(opt.step_init, 4.0 * step_prev);
    bool accepted = false;
    double fn = out.objective;
    for (int halvings = 0; halvings < 80; ++halvings) {
      trial = out.x;
      for (size_t i = 0; i < n; ++i) trial[i] -= step * g[i];
      project(trial);
      fn = f(trial);
      if (!std::isfinite(fn)) {
        out.aborted = true;
        out.diagnostic = "objective not finite during line search at iteration " +
                         std::to_string(it);
        return out;
      }
      double decrease = 0.0;  // <g, x - trial> >= 0 by the projection property
      for (size_t i = 0; i < n; ++i) decrease += g[i] * (out.x[i] - trial[i]);
      if (fn <= out.objective - opt.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= opt.step_shrink;
    }
    if (!accepted) break;  // no feasible decrease left at this scale
    double rel_dec = (out.objective - fn) / std::max(1.0, std::abs(out.objective));
    out.x = trial;
    out.objective = fn;
    step_prev = step;
    ++out.iterations;
    if (rel_dec <= opt.obj_rel_tol) break;
  }
  return out;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DRMECH_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

OptimizedPlan embed_base_plan(const Scenario& s, const BasePlan& plan) {
  const int n = s.n_slots;
  OptimizedPlan out{Matrix(n, n, 0.0), Matrix(n, n, 0.0)};
  for (int z = 0; z < n; ++z) {
    for (int i = 0; i < n; ++i) {
      if (i == z) continue;
      out.discounts(z, i) = plan.discounts[i];
      out.fractions(z, i) = s.base_fractions(z, i);
    }
  }
  return out;
}

OptimizedPlan embed_robust_plan(const Scenario& s, const RobustPlan& plan) {
  const int n = s.n_slots;
  OptimizedPlan out{Matrix(n, n, 0.0), Matrix(n, n, 0.0)};
  for (int z = 0; z < n; ++z) {
    for (int i = 0; i < n; ++i) {
      if (i == z) continue;
      out.discounts(z, i) = plan.discounts[i];
      out.fractions(z, i) = plan.fractions[i];
    }
  }
  return out;
}

OfferPlan scale_plan_discounts(OfferPlan plan, double factor, double cap) {
  auto scale = [factor, cap](double r) { return std::clamp(r * factor, 0.0, cap); };
  if (auto* p = std::get_if<BasePlan>(&plan)) {
    for (double& r : p->discounts) r = scale(r);
  } else if (auto* p = std::get_if<BroadcastPlan>(&plan)) {
    for (double& r : p->discounts) r = scale(r);
  } else if (auto* p = std::get_if<RobustPlan>(&plan)) {
    for (double& r : p->discounts) r = scale(r);
  } else if (auto* p = std::get_if<OptimizedPlan>(&plan)) {
    for (double& r : p->discounts.data()) r = scale(r);
  }
  return plan;
}

namespace {

// ---------------------------------------------------------------------------
// Per-mechanism flat-vector problems.
//
// The objectives mirror the public evaluators' accumulation order exactly so
// the reported per-start objective matches the final breakdown bit for bit.
// They skip plan validation: descent iterates are feasible by projection, and
// broadcast finite differences probe slightly outside the box on purpose.

struct Problem {
  int dim = 0;
  ObjectiveFn objective;           // optimizer objective (smoothed for broadcast)
  GradientFn gradient;
  ProjectionFn project;
  std::function<OfferPlan(const std::vector<double>&)> to_plan;
  std::function<void(Rng&, std::vector<double>&)> sample;
  std::function<std::vector<double>()> zero_start;
  std::function<double(const std::vector<double>&)> exact_cost;  // eps = 0
  double* smoothing = nullptr;     // broadcast schedule knob
};

struct ScenarioTables {
  const Scenario* s;
  std::vector<double> dist_pow;  // m[j][i] = |i-j|^t_j
  double baseline_cost;

  explicit ScenarioTables(const Scenario& sc) : s(&sc) {
    const int n = sc.n_slots;
    dist_pow.assign(static_cast<size_t>(n) * n, 1.0);
    for (int j = 0; j < n; ++j) {
      double t = sc.discomfort.at(j).exponent;
      for (int i = 0; i < n; ++i)
        if (i != j) dist_pow[static_cast<size_t>(j) * n + i] = std::pow(std::abs(i - j), t);
    }
    baseline_cost = sc.baseline_production_cost();
  }
  double m(int j, int i) const { return dist_pow[static_cast<size_t>(j) * s->n_slots + i]; }
  double accept(int j, int i, double r) const {
    return cdf_eval(s->discomfort, j, r / m(j, i));
  }
  double accept_density(int j, int i, double r) const {
    double mm = m(j, i);
    return density_eval(s->discomfort, j, r / mm) / mm;
  }
};

// Off-diagonal flattening for the optimized mechanism's matrices.
inline int offdiag_index(int n, int z, int i) { return z * (n - 1) + (i < z ? i : i - 1); }

// Discount coordinates are kept normalized by the flat rate so every
// variable lives in [0, 1] and the descent is evenly conditioned.
Problem make_base_problem(const Scenario& s, std::shared_ptr<ScenarioTables> tab) {
  const int n = s.n_slots;
  const double B = s.flat_rate;
  Problem p;
  p.dim = n;
  p.project = [](std::vector<double>& x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
  };
  p.objective = [&s, tab, n, B](const std::vector<double>& x) {
    std::vector<double> e1(s.baseline);
    double paid = 0.0;
    for (int j = 0; j < n; ++j) {
      double out = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        double r = x[i] * B;
        double e = s.base_fractions(j, i) * tab->accept(j, i, r) * s.baseline[j];
        e1[i] += e;
        out += e;
        paid += r * e;
      }
      e1[j] -= std::min(out, s.baseline[j]);
    }
    double prod = 0.0;
    for (int i = 0; i < n; ++i) prod += s.cost_at(i)(e1[i]);
    return prod + paid;
  };
  p.gradient = [&s, tab, n, B](const std::vector<double>& x, std::vector<double>& g) {
    g.assign(n, 0.0);
    std::vector<double> e1(s.baseline);
    Matrix flows(n, n, 0.0);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        double e = s.base_fractions(j, i) * tab->accept(j, i, x[i] * B) * s.baseline[j];
        flows(j, i) = e;
        e1[i] += e;
        e1[j] -= e;
      }
    }
    std::vector<double> marg(n);
    for (int i = 0; i < n; ++i) marg[i] = s.cost_at(i).marginal(std::max(e1[i], 0.0));
    for (int i = 0; i < n; ++i) {
      double r = x[i] * B;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double de = s.base_fractions(j, i) * tab->accept_density(j, i, r) * s.baseline[j];
        g[i] += B * (flows(j, i) + (r + marg[i] - marg[j]) * de);
      }
    }
  };
  p.to_plan = [n, B](const std::vector<double>& x) {
    BasePlan plan;
    plan.discounts.resize(n);
    for (int i = 0; i < n; ++i) plan.discounts[i] = x[i] * B;
    return OfferPlan{std::move(plan)};
  };
  p.sample = [n](Rng& rng, std::vector<double>& x) {
    x.resize(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform01();
  };
  p.zero_start = [n]() { return std::vector<double>(n, 0.0); };
  p.exact_cost = p.objective;
  return p;
}

Problem make_optimized_problem(const Scenario& s, std::shared_ptr<ScenarioTables> tab) {
  const int n = s.n_slots;
  const int d = n * (n - 1);
  const double B = s.flat_rate;
  Problem p;
  p.dim = 2 * d;  // [R offdiag | q offdiag]
  p.project = [n, d](std::vector<double>& x) {
    for (int k = 0; k < d; ++k) x[k] = std::clamp(x[k], 0.0, 1.0);
    std::vector<double> row(n - 1);
    for (int z = 0; z < n; ++z) {
      for (int c = 0; c < n - 1; ++c) row[c] = x[d + z * (n - 1) + c];
      row = project_capped_simplex(std::move(row), 1.0);
      for (int c = 0; c < n - 1; ++c) x[d + z * (n - 1) + c] = row[c];
    }
  };
  p.objective = [&s, tab, n, d, B](const std::vector<double>& x) {
    std::vector<double> e1(s.baseline);
    double paid = 0.0;
    for (int z = 0; z < n; ++z) {
      double out = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i == z) continue;
        int k = offdiag_index(n, z, i);
        double r = x[k] * B;
        double e = x[d + k] * tab->accept(z, i, r) * s.baseline[z];
        e1[i] += e;
        out += e;
        paid += r * e;
      }
      e1[z] -= std::min(out, s.baseline[z]);
    }
    double prod = 0.0;
    for (int i = 0; i < n; ++i) prod += s.cost_at(i)(e1[i]);
    return prod + paid;
  };
  p.gradient = [&s, tab, n, d, B](const std::vector<double>& x, std::vector<double>& g) {
    g.assign(2 * d, 0.0);
    std::vector<double> e1(s.baseline);
    for (int z = 0; z < n; ++z) {
      for (int i = 0; i < n; ++i) {
        if (i == z) continue;
        int k = offdiag_index(n, z, i);
        double e = x[d + k] * tab->accept(z, i, x[k] * B) * s.baseline[z];
        e1[i] += e;
        e1[z] -= e;
      }
    }
    std::vector<double> marg(n);
    for (int i = 0; i < n; ++i) marg[i] = s.cost_at(i).marginal(std::max(e1[i], 0.0));
    for (int z = 0; z < n; ++z) {
      for (int i = 0; i < n; ++i) {
        if (i == z) continue;
        int k = offdiag_index(n, z, i);
        double r = x[k] * B, q = x[d + k];
        double accept = tab->accept(z, i, r);
        double shadow = r + marg[i] - marg[z];
        g[k] = B * q * (accept + shadow * tab->accept_density(z, i, r)) * s.baseline[z];
        g[d + k] = shadow * accept * s.baseline[z];
      }
    }
  };
  p.to_plan = [n, d, B](const std::vector<double>& x) {
    OptimizedPlan plan{Matrix(n, n, 0.0), Matrix(n, n, 0.0)};
    for (int z = 0; z < n; ++z) {
      for (int i = 0; i < n; ++i) {
        if (i == z) continue;
        int k = offdiag_index(n, z, i);
        plan.discounts(z, i) = x[k] * B;
        plan.fractions(z, i) = x[d + k];
      }
    }
    return OfferPlan{std::move(plan)};
  };
  p.sample = [n, d](Rng& rng, std::vector<double>& x) {
    x.resize(2 * d);
    for (int k = 0; k < d; ++k) x[k] = rng.uniform01();
    // q rows uniform on the capped simplex: normalized exponential spacings
    // with one slack coordinate.
    for (int z = 0; z < n; ++z) {
      double sum = 0.0;
      for (int c = 0; c < n - 1; ++c) {
        double e = rng.exponential();
        x[d + z * (n - 1) + c] = e;
        sum += e;
      }
      sum += rng.exponential();
      for (int c = 0; c < n - 1; ++c) x[d + z * (n - 1) + c] /= sum;
    }
  };
  p.zero_start = [&s, n, d]() {
    std::vector<double> x(2 * d, 0.0);
    for (int z = 0; z < n; ++z)
      for (int i = 0; i < n; ++i)
        if (i != z) x[d + offdiag_index(n, z, i)] = s.base_fractions(z, i);
    return x;
  };
  p.exact_cost = p.objective;
  return p;
}

Problem make_robust_problem(const Scenario& s, std::shared_ptr<ScenarioTables> tab) {
  const int n = s.n_slots;
  const double B = s.flat_rate;
  Problem p;
  p.dim = 2 * n;  // [R | q]
  p.project = [n](std::vector<double>& x) {
    for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], 0.0, 1.0);
    std::vector<double> q(x.begin() + n, x.end());
    q = project_capped_simplex(std::move(q), 1.0);
    std::copy(q.begin(), q.end(), x.begin() + n);
  };
  p.objective = [&s, tab, n, B](const std::vector<double>& x) {
    std::vector<double> e1(s.baseline);
    double paid = 0.0;
    for (int i = 0; i < n; ++i) paid += x[i] * B * x[n + i] * s.baseline[i];
    for (int j = 0; j < n; ++j) {
      double out = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        double e = x[n + i] * tab->accept(j, i, x[i] * B) * s.baseline[j];
        e1[i] += e;
        out += e;
        paid += x[i] * B * e;
      }
      e1[j] -= std::min(out, s.baseline[j]);
    }
    double prod = 0.0;
    for (int i = 0; i < n; ++i) prod += s.cost_at(i)(e1[i]);
    return prod + paid;
  };
  p.gradient = [&s, tab, n, B](const std::vector<double>& x, std::vector<double>& g) {
    g.assign(2 * n, 0.0);
    std::vector<double> e1(s.baseline);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        double e = x[n + i] * tab->accept(j, i, x[i] * B) * s.baseline[j];
        e1[i] += e;
        e1[j] -= e;
      }
    }
    std::vector<double> marg(n);
    for (int i = 0; i < n; ++i) marg[i] = s.cost_at(i).marginal(std::max(e1[i], 0.0));
    for (int i = 0; i < n; ++i) {
      double r = x[i] * B, q = x[n + i];
      g[i] = B * q * s.baseline[i];
      g[n + i] = r * s.baseline[i];
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double accept = tab->accept(j, i, r);
        double shadow = r + marg[i] - marg[j];
        g[i] += B * q * (accept + shadow * tab->accept_density(j, i, r)) * s.baseline[j];
        g[n + i] += shadow * accept * s.baseline[j];
      }
    }
  };
  p.to_plan = [n, B](const std::vector<double>& x) {
    RobustPlan plan{std::vector<double>(x.begin(), x.begin() + n),
                    std::vector<double>(x.begin() + n, x.end())};
    for (double& r : plan.discounts) r *= B;
    return OfferPlan{std::move(plan)};
  };
  p.sample = [n](Rng& rng, std::vector<double>& x) {
    x.resize(2 * n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform01();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double e = rng.exponential();
      x[n + i] = e;
      sum += e;
    }
    sum += rng.exponential();
    for (int i = 0; i < n; ++i) x[n + i] /= sum;
  };
  p.zero_start = [n]() {
    std::vector<double> x(2 * n, 0.0);
    for (int i = 0; i < n; ++i) x[n + i] = 1.0 / n;
    return x;
  };
  p.exact_cost = p.objective;
  return p;
}

struct BroadcastState {
  BroadcastChoice choice;
  double eps = 0.0;
  explicit BroadcastState(const Scenario& s)
      : choice(s.discomfort, s.n_slots, s.flat_rate) {}
};

Problem make_broadcast_problem(const Scenario& s, std::shared_ptr<BroadcastState> st,
                               double fd_step) {
  const int n = s.n_slots;
  const double B = s.flat_rate;
  Problem p;
  p.dim = n;
  p.project = [](std::vector<double>& x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
  };
  auto cost_at_eps = [&s, st, n, B](const std::vector<double>& x, double eps) {
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = x[i] * B;
    std::vector<double> e1(n, 0.0);
    std::vector<double> stay(n, 0.0);
    for (int j = 0; j < n; ++j) {
      ShiftDistribution dist = st->choice.distribution(j, r, eps);
      double out = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        double e = dist.probabilities[i] * s.baseline[j];
        e1[i] += e;
        out += e;
      }
      stay[j] = std::max(s.baseline[j] - std::min(out, s.baseline[j]), 0.0);
      e1[j] += stay[j];
    }
    double paid = 0.0;
    for (int i = 0; i < n; ++i) paid += r[i] * e1[i];
    double prod = 0.0;
    for (int i = 0; i < n; ++i) prod += s.cost_at(i)(std::max(e1[i], 0.0));
    return prod + paid;
  };
  p.objective = [st, cost_at_eps](const std::vector<double>& r) {
    return cost_at_eps(r, st->eps);
  };
  p.gradient = [p_obj = p.objective, fd_step](const std::vector<double>& x,
                                              std::vector<double>& g) {
    finite_difference_gradient(p_obj, x, fd_step, g);
  };
  p.to_plan = [n, B](const std::vector<double>& x) {
    BroadcastPlan plan;
    plan.discounts.resize(n);
    for (int i = 0; i < n; ++i) plan.discounts[i] = x[i] * B;
    return OfferPlan{std::move(plan)};
  };
  p.sample = [n](Rng& rng, std::vector<double>& x) {
    x.resize(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform01();
  };
  p.zero_start = [n]() { return std::vector<double>(n, 0.0); };
  p.exact_cost = [cost_at_eps](const std::vector<double>& r) { return cost_at_eps(r, 0.0); };
  p.smoothing = &st->eps;
  return p;
}

// Converts a plan into the optimizer's normalized coordinates.
std::vector<double> plan_to_x(Mechanism mech, const Scenario& s, const OfferPlan& plan) {
  const int n = s.n_slots;
  const double B = s.flat_rate;
  switch (mech) {
    case Mechanism::Base:
    case Mechanism::Broadcast: {
      std::vector<double> x = mech == Mechanism::Base
                                  ? std::get<BasePlan>(plan).discounts
                                  : std::get<BroadcastPlan>(plan).discounts;
      for (double& v : x) v /= B;
      return x;
    }
    case Mechanism::Robust: {
      const auto& rp = std::get<RobustPlan>(plan);
      std::vector<double> x = rp.discounts;
      for (double& v : x) v /= B;
      x.insert(x.end(), rp.fractions.begin(), rp.fractions.end());
      return x;
    }
    case Mechanism::Optimized: {
      OptimizedPlan op;
      if (const auto* bp = std::get_if<BasePlan>(&plan))
        op = embed_base_plan(s, *bp);
      else if (const auto* rp = std::get_if<RobustPlan>(&plan))
        op = embed_robust_plan(s, *rp);
      else
        op = std::get<OptimizedPlan>(plan);
      const int d = n * (n - 1);
      std::vector<double> x(2 * d, 0.0);
      for (int z = 0; z < n; ++z) {
        for (int i = 0; i < n; ++i) {
          if (i == z) continue;
          int k = offdiag_index(n, z, i);
          x[k] = op.discounts(z, i) / B;
          x[d + k] = op.fractions(z, i);
        }
      }
      return x;
    }
  }
  throw std::logic_error("plan_to_x: unknown mechanism");
}

}  // namespace

OptimizationResult multi_start_minimize(Mechanism mechanism, const Scenario& s,
                                        const OptimizerOptions& opt,
                                        const std::vector<OfferPlan>& extra_starts) {
  auto t0 = std::chrono::steady_clock::now();
  const double B = s.flat_rate;

  // Augmented starts: the zero plan plus, for the optimized mechanism, the
  // embedded optima of the simpler mechanisms (computed here unless the
  // caller already supplies plans to embed).
  std::vector<OfferPlan> embeds = extra_starts;
  if (mechanism == Mechanism::Optimized && opt.augment && extra_starts.empty()) {
    OptimizerOptions sub = opt;
    embeds.push_back(multi_start_minimize(Mechanism::Base, s, sub).best_plan);
    embeds.push_back(multi_start_minimize(Mechanism::Robust, s, sub).best_plan);
  }

  auto tables = std::make_shared<ScenarioTables>(s);
  auto make_problem = [&]() -> Problem {
    switch (mechanism) {
      case Mechanism::Base: return make_base_problem(s, tables);
      case Mechanism::Optimized: return make_optimized_problem(s, tables);
      case Mechanism::Robust: return make_robust_problem(s, tables);
      case Mechanism::Broadcast:
        // Coordinates are normalized by B, so the relative step applies as is.
        return make_broadcast_problem(s, std::make_shared<BroadcastState>(s),
                                      opt.fd_step_rel);
    }
    throw std::logic_error("unknown mechanism");
  };

  std::vector<std::vector<double>> aug_x;
  if (opt.augment) aug_x.push_back(make_problem().zero_start());
  for (const OfferPlan& plan : embeds) aug_x.push_back(plan_to_x(mechanism, s, plan));

  const int random_starts = std::max(opt.starts, 0);
  const int total = random_starts + static_cast<int>(aug_x.size());
  if (total == 0) throw std::invalid_argument("multi_start_minimize: no starts configured");

  DescentOptions dopt;
  dopt.max_iters = opt.max_iters;
  dopt.step_init = opt.step_init;
  dopt.step_shrink = opt.step_shrink;
  dopt.armijo = opt.armijo;
  dopt.obj_rel_tol = opt.obj_rel_tol;
  dopt.pg_tol = opt.grad_tol_rel * tables->baseline_cost / B;

  // Broadcast descends through a geometric smoothing schedule; the recorded
  // objective is always the exact (eps = 0) cost of the final point.
  std::vector<double> eps_schedule;
  if (mechanism == Mechanism::Broadcast) {
    if (opt.smooth_eps_fixed >= 0.0) {
      eps_schedule.push_back(opt.smooth_eps_fixed);
    } else {
      int stages = std::max(opt.smooth_stages, 1);
      double hi = opt.smooth_eps_hi_rel * B, lo = opt.smooth_eps_lo_rel * B;
      for (int m = 0; m < stages; ++m) {
        double f = stages == 1 ? 0.0 : static_cast<double>(m) / (stages - 1);
        eps_schedule.push_back(hi * std::pow(lo / hi, f));
      }
    }
  }

  std::vector<StartRecord> records(total);
  std::vector<std::vector<double>> finals(total);
  std::vector<std::string> diagnostics(total);

  auto run_start = [&](int k, Problem& prob) {
    std::vector<double> x0;
    if (k < random_starts) {
      Rng rng(opt.seed ^ static_cast<uint64_t>(k));
      prob.sample(rng, x0);
    } else {
      x0 = aug_x[k - random_starts];
    }
    StartRecord rec;
    rec.start = k;
    if (mechanism == Mechanism::Broadcast) {
      DescentOptions stage_opt = dopt;
      stage_opt.max_iters = std::max(opt.max_iters / static_cast<int>(eps_schedule.size()), 1);
      std::vector<double> x = std::move(x0);
      int iters = 0;
      bool aborted = false;
      for (double eps : eps_schedule) {
        *prob.smoothing = eps;
        DescentOutcome outc = local_descent(prob.objective, prob.gradient, std::move(x),
                                            prob.project, stage_opt);
        iters += outc.iterations;
        x = std::move(outc.x);
        if (outc.aborted) {
          aborted = true;
          diagnostics[k] = outc.diagnostic;
          break;
        }
      }
      rec.iterations = iters;
      rec.aborted = aborted;
      rec.objective = aborted ? kNaN : prob.exact_cost(x);
      finals[k] = std::move(x);
    } else {
      DescentOutcome outc =
          local_descent(prob.objective, prob.gradient, std::move(x0), prob.project, dopt);
      rec.iterations = outc.iterations;
      rec.aborted = outc.aborted;
      rec.objective = outc.aborted ? kNaN : outc.objective;
      diagnostics[k] = outc.diagnostic;
      finals[k] = std::move(outc.x);
    }
    records[k] = rec;
  };

  const int threads = std::min(resolve_thread_count(opt.threads), total);
  if (threads <= 1) {
    Problem prob = make_problem();
    for (int k = 0; k < total; ++k) run_start(k, prob);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        Problem prob = make_problem();
        int k;
        while ((k = next.fetch_add(1)) < total) {
          try {
            run_start(k, prob);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  int best = -1;
  for (int k = 0; k < total; ++k) {
    if (records[k].aborted) continue;
    if (best < 0 || records[k].objective < records[best].objective) best = k;
  }
  if (best < 0) {
    std::string msg = "multi_start_minimize: all " + std::to_string(total) +
                      " starts aborted;";
    int listed = 0;
    for (int k = 0; k < total && listed < 5; ++k) {
      if (!diagnostics[k].empty()) {
        msg += " [start " + std::to_string(k) + ": " + diagnostics[k] + "]";
        ++listed;
      }
    }
    throw std::runtime_error(msg);
  }

  Problem prob = make_problem();
  OptimizationResult res;
  res.best_plan = prob.to_plan(finals[best]);
  res.best_breakdown = evaluate_plan(s, res.best_plan, 0.0).breakdown;
  res.starts = total;
  res.per_start = std::move(records);
  res.seed = opt.seed;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace drmech
