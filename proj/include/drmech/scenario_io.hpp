// Scenario file parsing (JSON) and flexibility overrides for sweeps.
#pragma once

#include <string>

#include "drmech/model.hpp"

namespace drmech {

// Parses and validates a scenario file. Diagnostics carry the file path and
// the offending field.
Scenario load_scenario(const std::string& path);

// Parses a scenario from a JSON string; `context` prefixes diagnostics.
Scenario parse_scenario_json(const std::string& text, const std::string& context);

// Replaces the exponential flexibility parameter on every origin slot.
// Throws for non-exponential discomfort families.
Scenario with_flexibility(Scenario s, double mu);

}  // namespace drmech
