// Experiment orchestration: optimize the requested mechanisms across a
// flexibility sweep, optionally validate each optimum by simulation, and
// emit results.csv plus the two SVG figures.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drmech/optimizer.hpp"

namespace drmech {

struct RunManifest {
  std::string scenario_path;
  std::vector<std::string> mechanisms;  // base, optimized, robust, broadcast, dictatorial
  OptimizerOptions options;
  std::vector<double> mu_values;        // empty: run the scenario as configured
  std::string out_dir = "out";
  uint64_t seed = 1;
  int64_t users = 0;                    // > 0: simulate each optimum, simulation.csv
};

// Returns 0 on success, nonzero after printing diagnostics; rows written so
// far are preserved in results.csv.
int run(const RunManifest& manifest);

}  // namespace drmech
