// drmech: scenario-driven demand-response tariff experiments.
//
// Subcommands: optimize, simulate, sweep, report. Results land in the output
// directory as results.csv plus savings.svg / components.svg; simulate adds
// simulation.csv with realized-vs-analytic totals.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "drmech/report.hpp"
#include "drmech/runner.hpp"

namespace {

struct CommonArgs {
  drmech::RunManifest manifest;
  double smoothing = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_mu) {
  cmd->add_option("--scenario", args.manifest.scenario_path, "Scenario JSON file")
      ->required();
  cmd->add_option("--mechanism", args.manifest.mechanisms,
                  "Mechanisms to run: base, optimized, robust, broadcast, dictatorial")
      ->delimiter(',');
  cmd->add_option("--starts", args.manifest.options.starts, "Random starts per mechanism");
  cmd->add_option("--seed", args.manifest.seed, "Root seed for starts and simulation");
  cmd->add_option("--out", args.manifest.out_dir, "Output directory");
  cmd->add_option("--smoothing", args.smoothing,
                  "Fixed broadcast smoothing epsilon in $/MWh (default: geometric schedule)");
  auto* mu = cmd->add_option("--mu", args.manifest.mu_values,
                             "Flexibility values to sweep (exponential family)")
                 ->delimiter(',');
  if (need_mu) mu->required();
}

int finish(CommonArgs& args) {
  if (args.manifest.mechanisms.empty())
    args.manifest.mechanisms = {"base", "optimized", "robust", "broadcast"};
  if (args.smoothing >= 0.0) args.manifest.options.smooth_eps_fixed = args.smoothing;
  args.manifest.options.seed = args.manifest.seed;
  return drmech::run(args.manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demand-response tariff design toolkit"};
  app.require_subcommand(1);

  CommonArgs optimize_args, simulate_args, sweep_args;
  std::string report_dir = "out";

  CLI::App* optimize = app.add_subcommand("optimize", "Optimize mechanisms on a scenario");
  add_common(optimize, optimize_args, false);
  optimize->add_option("--users", optimize_args.manifest.users,
                       "Also simulate each optimum with this population size");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Optimize, then validate each optimum with the agent simulator");
  add_common(simulate, simulate_args, false);
  simulate->add_option("--users", simulate_args.manifest.users, "Simulated population size")
      ->default_val(100000);

  CLI::App* sweep =
      app.add_subcommand("sweep", "Optimize across a flexibility sweep and plot figures");
  add_common(sweep, sweep_args, true);
  sweep->add_option("--users", sweep_args.manifest.users,
                    "Also simulate each optimum with this population size");

  CLI::App* report =
      app.add_subcommand("report", "Re-render the SVG figures from results.csv");
  report->add_option("--out", report_dir, "Directory holding results.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (optimize->parsed()) return finish(optimize_args);
    if (simulate->parsed()) {
      if (simulate_args.manifest.users <= 0) {
        std::cerr << "drmech: --users must be positive\n";
        return 1;
      }
      return finish(simulate_args);
    }
    if (sweep->parsed()) return finish(sweep_args);
    if (report->parsed()) {
      namespace fs = std::filesystem;
      auto rows = drmech::read_results_csv((fs::path(report_dir) / "results.csv").string());
      drmech::write_savings_svg((fs::path(report_dir) / "savings.svg").string(), rows);
      drmech::write_components_svg((fs::path(report_dir) / "components.svg").string(), rows);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "drmech: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
