#include "drmech/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <list>
#include <map>
#include <optional>

#include "drmech/microsim.hpp"
#include "drmech/report.hpp"
#include "drmech/rng.hpp"
#include "drmech/scenario_io.hpp"

namespace drmech {

namespace {

double scenario_mu(const Scenario& s) {
  const SlotDiscomfort& d = s.discomfort.slots.front();
  if (s.discomfort.shared() && d.family == DiscomfortFamily::Exponential) return d.mu;
  return std::nan("");
}

void validate_manifest(const RunManifest& m) {
  if (m.mechanisms.empty()) throw ValidationError("no mechanisms selected");
  for (const std::string& name : m.mechanisms) {
    if (name != "dictatorial" && !mechanism_from_name(name))
      throw ValidationError("unknown mechanism '" + name + "'");
  }
  for (double mu : m.mu_values)
    if (!std::isfinite(mu) || mu <= 0.0)
      throw ValidationError("sweep values must be finite and positive");
}

struct MuRun {
  Scenario scenario;
  double mu;  // NaN when not applicable
  DictatorialResult dictatorial;
  std::map<Mechanism, OptimizationResult> results;
  // Previous sweep point, if any: its optima are rescaled into warm starts
  // (discount scaling replicates flows exactly under the exponential family).
  const MuRun* prev = nullptr;
  double chain_factor = 1.0;  // mu_prev / mu_cur
};

const OptimizationResult& ensure_result(MuRun& run, Mechanism mech,
                                        const RunManifest& manifest, int mu_index) {
  auto it = run.results.find(mech);
  if (it != run.results.end()) return it->second;

  std::vector<OfferPlan> extra;
  if (mech == Mechanism::Optimized && manifest.options.augment) {
    extra.push_back(ensure_result(run, Mechanism::Base, manifest, mu_index).best_plan);
    extra.push_back(ensure_result(run, Mechanism::Robust, manifest, mu_index).best_plan);
  }
  if (run.prev != nullptr) {
    auto prev_it = run.prev->results.find(mech);
    if (prev_it != run.prev->results.end())
      extra.push_back(scale_plan_discounts(prev_it->second.best_plan, run.chain_factor,
                                           run.scenario.flat_rate));
  }
  OptimizerOptions opt = manifest.options;
  opt.seed = mix64(mix64(manifest.seed, static_cast<uint64_t>(mu_index)),
                   static_cast<uint64_t>(mech));
  OptimizationResult res = multi_start_minimize(mech, run.scenario, opt, extra);
  return run.results.emplace(mech, std::move(res)).first->second;
}

}  // namespace

int run(const RunManifest& manifest) {
  namespace fs = std::filesystem;
  std::vector<ResultRow> all_rows;
  std::ofstream csv;
  try {
    validate_manifest(manifest);
    Scenario base_scenario = load_scenario(manifest.scenario_path);

    fs::create_directories(manifest.out_dir);
    const std::string csv_path = (fs::path(manifest.out_dir) / "results.csv").string();
    csv.open(csv_path);
    if (!csv) throw std::runtime_error(csv_path + ": cannot write file");
    write_results_header(csv);
    csv.flush();

    std::ofstream sim_csv;
    if (manifest.users > 0) {
      const std::string sim_path =
          (fs::path(manifest.out_dir) / "simulation.csv").string();
      sim_csv.open(sim_path);
      if (!sim_csv) throw std::runtime_error(sim_path + ": cannot write file");
      sim_csv << "mechanism,mu,users,realized_production,realized_discounts,"
                 "realized_wasted,realized_total,analytic_total,abs_error,max_group_z\n";
    }

    std::vector<std::optional<double>> sweep;
    if (manifest.mu_values.empty()) {
      sweep.push_back(std::nullopt);
    } else {
      for (double mu : manifest.mu_values) sweep.push_back(mu);
    }

    std::list<MuRun> history;
    for (size_t mi = 0; mi < sweep.size(); ++mi) {
      MuRun mu_run;
      mu_run.scenario =
          sweep[mi] ? with_flexibility(base_scenario, *sweep[mi]) : base_scenario;
      mu_run.mu = sweep[mi] ? *sweep[mi] : scenario_mu(base_scenario);
      mu_run.dictatorial = dictatorial_bound(mu_run.scenario);
      if (!history.empty() && sweep[mi] && sweep[mi - 1]) {
        mu_run.prev = &history.back();
        mu_run.chain_factor = *sweep[mi - 1] / *sweep[mi];
      }

      for (const std::string& name : manifest.mechanisms) {
        ResultRow row;
        row.mechanism = name;
        row.mu = mu_run.mu;
        row.seed = manifest.seed;
        row.dictatorial_savings_fraction = mu_run.dictatorial.saving_fraction;
        if (name == "dictatorial") {
          auto t0 = std::chrono::steady_clock::now();
          row.starts = 0;
          row.production_cost = mu_run.dictatorial.production;
          row.discounts_paid = 0.0;
          row.wasted_discounts = 0.0;
          row.total_cost = mu_run.dictatorial.production;
          row.savings_fraction = mu_run.dictatorial.saving_fraction;
          row.wall_time_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } else {
          Mechanism mech = *mechanism_from_name(name);
          const OptimizationResult& res =
              ensure_result(mu_run, mech, manifest, static_cast<int>(mi));
          row.starts = res.starts;
          row.production_cost = res.best_breakdown.production;
          row.discounts_paid = res.best_breakdown.discounts_paid;
          row.wasted_discounts = res.best_breakdown.wasted_discounts;
          row.total_cost = res.best_breakdown.total;
          row.savings_fraction = res.best_breakdown.savings_fraction;
          row.wall_time_s = res.wall_time_s;

          if (manifest.users > 0) {
            uint64_t sim_seed = mix64(mix64(manifest.seed, 0x51u + mi),
                                      static_cast<uint64_t>(mech));
            Population pop = sample_population(mu_run.scenario, manifest.users, sim_seed);
            SimulationResult sim = simulate_plan(mu_run.scenario, res.best_plan, pop);
            double max_z = 0.0;
            for (const GroupStat& g : sim.groups) {
              if (g.group_size == 0) continue;
              double p = g.analytic_p;
              double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(g.group_size));
              if (sd == 0.0) continue;
              double freq = static_cast<double>(g.accepted) /
                            static_cast<double>(g.group_size);
              max_z = std::max(max_z, std::abs(freq - p) / sd);
            }
            sim_csv << name << ',' << format_double(row.mu) << ',' << manifest.users << ','
                    << format_double(sim.breakdown.production) << ','
                    << format_double(sim.breakdown.discounts_paid) << ','
                    << format_double(sim.breakdown.wasted_discounts) << ','
                    << format_double(sim.breakdown.total) << ','
                    << format_double(res.best_breakdown.total) << ','
                    << format_double(std::abs(sim.breakdown.total - res.best_breakdown.total))
                    << ',' << format_double(max_z) << "\n";
            sim_csv.flush();
          }
        }
        write_results_row(csv, row);
        csv.flush();
        all_rows.push_back(std::move(row));
      }
      history.push_back(std::move(mu_run));
    }

    write_savings_svg((fs::path(manifest.out_dir) / "savings.svg").string(), all_rows);
    write_components_svg((fs::path(manifest.out_dir) / "components.svg").string(),
                         all_rows);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "drmech: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace drmech
