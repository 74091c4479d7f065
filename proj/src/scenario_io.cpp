#include "drmech/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace drmech {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& context, const std::string& what) {
  throw ValidationError(context + ": " + what);
}

const json& require(const json& j, const char* field, const std::string& context) {
  auto it = j.find(field);
  if (it == j.end()) fail(context, std::string("missing field '") + field + "'");
  return *it;
}

double number(const json& j, const char* field, const std::string& context) {
  const json& v = require(j, field, context);
  if (!v.is_number()) fail(context, std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

std::vector<double> number_array(const json& v, const char* field,
                                 const std::string& context) {
  if (!v.is_array()) fail(context, std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number())
      fail(context, std::string("field '") + field + "' must contain numbers only");
    out.push_back(x.get<double>());
  }
  return out;
}

PiecewiseLinearCost parse_cost(const json& j, const std::string& context) {
  if (!j.is_object()) fail(context, "field 'cost' must be an object");
  std::vector<double> bps = number_array(require(j, "breakpoints_mwh", context),
                                         "breakpoints_mwh", context);
  std::vector<double> rates = number_array(require(j, "marginal_rates", context),
                                           "marginal_rates", context);
  try {
    return PiecewiseLinearCost(std::move(bps), std::move(rates));
  } catch (const ValidationError& e) {
    fail(context, e.what());
  }
}

SlotDiscomfort parse_discomfort(const json& j, double flat_rate,
                                const std::string& context) {
  if (!j.is_object()) fail(context, "field 'discomfort' must be an object");
  SlotDiscomfort d;
  std::string family = require(j, "family", context).get<std::string>();
  if (family == "uniform") {
    d.family = DiscomfortFamily::Uniform;
  } else if (family == "exponential") {
    d.family = DiscomfortFamily::Exponential;
    d.mu = number(j, "mu", context);
  } else if (family == "tabulated") {
    d.family = DiscomfortFamily::Tabulated;
    d.knots_x = number_array(require(j, "knots_x", context), "knots_x", context);
    d.knots_f = number_array(require(j, "knots_f", context), "knots_f", context);
  } else {
    fail(context, "discomfort family must be uniform, exponential or tabulated");
  }
  d.scale = j.contains("scale") ? number(j, "scale", context) : flat_rate;
  d.exponent = j.contains("exponent") ? number(j, "exponent", context) : 1.0;
  return d;
}

}  // namespace

Scenario parse_scenario_json(const std::string& text, const std::string& context) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(context, std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(context, "top level must be an object");

  Scenario s;
  double n = number(j, "n_slots", context);
  if (n != static_cast<int>(n)) fail(context, "n_slots must be an integer");
  s.n_slots = static_cast<int>(n);
  s.baseline = number_array(require(j, "baseline_mwh", context), "baseline_mwh", context);
  s.flat_rate = number(j, "flat_rate", context);

  const json& cost = require(j, "cost", context);
  if (cost.is_array()) {
    for (const json& c : cost) s.cost.push_back(parse_cost(c, context));
  } else {
    s.cost.push_back(parse_cost(cost, context));
  }

  const json& disc = require(j, "discomfort", context);
  if (disc.is_array()) {
    for (const json& d : disc)
      s.discomfort.slots.push_back(parse_discomfort(d, s.flat_rate, context));
  } else {
    s.discomfort.slots.push_back(parse_discomfort(disc, s.flat_rate, context));
  }

  if (j.contains("base_fractions")) {
    const json& bf = j["base_fractions"];
    if (!bf.is_array() || static_cast<int>(bf.size()) != s.n_slots)
      fail(context, "base_fractions must be an n_slots x n_slots array");
    s.base_fractions = Matrix(s.n_slots, s.n_slots, 0.0);
    for (int r = 0; r < s.n_slots; ++r) {
      std::vector<double> row = number_array(bf[r], "base_fractions", context);
      if (static_cast<int>(row.size()) != s.n_slots)
        fail(context, "base_fractions row " + std::to_string(r) + " has the wrong length");
      for (int c = 0; c < s.n_slots; ++c) s.base_fractions(r, c) = row[c];
    }
  }

  try {
    return validate_scenario(std::move(s));
  } catch (const ValidationError& e) {
    fail(context, e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str(), path);
}

Scenario with_flexibility(Scenario s, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw ValidationError("flexibility mu must be positive and finite");
  for (SlotDiscomfort& d : s.discomfort.slots) {
    if (d.family != DiscomfortFamily::Exponential)
      throw ValidationError("flexibility sweep requires the exponential discomfort family");
    d.mu = mu;
  }
  return s;
}

}  // namespace drmech
