#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>

#include "ni_swarm/engine.hpp"
#include "ni_swarm/lti.hpp"

namespace ni_swarm::cli {

inline constexpr const char* kScenarioSchema = "ni-swarm-scenario/1";
inline constexpr const char* kCheckSchema = "ni-swarm-check/1";
inline constexpr const char* kCompareSchema = "ni-swarm-compare/1";
inline constexpr const char* kMetricsSchema = "ni-swarm-metrics/1";

/// Bad user input: schema mismatch, unknown key, wrong type, bad value.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full scenario as JSON. Every field is written, so the output re-parses
/// to the same configuration.
nlohmann::json to_json(const sim::ScenarioConfig& c);

/// Parses a scenario. Unknown keys, a wrong or missing "schema" and type
/// mismatches throw InputError. Missing keys keep the defaults of the base:
/// the named "preset" when present, otherwise a default ScenarioConfig.
sim::ScenarioConfig scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const sim::Summary& s);

/// "NUM/DEN", split at the one '/' outside parentheses. Each side is a
/// polynomial in s with + - * ^ and parentheses; juxtaposition multiplies,
/// so "(3.31s + 195.26)/(s^2 + 174.66s + 3.12)" works. Coefficient lists
/// "[1, 2]/[1, 3, 2]" (descending powers) are accepted too.
lti::RationalTF parse_tf(const std::string& text);

/// {"num": [...], "den": [...]}.
lti::RationalTF tf_from_json(const nlohmann::json& j);

}  // namespace ni_swarm::cli
