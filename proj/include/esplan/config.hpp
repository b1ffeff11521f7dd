#pragma once

// Study configuration: one JSON document naming the network, the scenario
// sources and every planner knob. Relative paths resolve against the file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "esplan/planner.hpp"
#include "json.hpp"

namespace esplan {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct StudyConfig {
  std::filesystem::path network;
  std::vector<std::filesystem::path> day_types;  // forecasts, scenarios generated on load
  std::vector<std::filesystem::path> scenarios;  // ready scenario files
  int n_scenarios = 200;
  std::uint64_t seed = 1;        // day-type i uses seed + i
  std::optional<double> sigma;   // replaces every day-type's relative std
  bool reduce = true;
  ReductionConfig reduction;
  PlannerOptions planner;
  nlohmann::json cost_overrides = nlohmann::json::object();
  std::filesystem::path output_dir = "out";
};

/// Every key with its default value.
nlohmann::json default_config();

/// Validates keys, ranges and file existence. Throws ConfigError.
StudyConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
nlohmann::json read_config_file(const std::filesystem::path& path);

/// "a.b.c=value": value is read as JSON when it parses, else as a string.
/// Throws ConfigError for keys that do not exist in the defaults.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Network with the cost overrides merged in.
RadialNetwork load_study_network(const StudyConfig& cfg);

struct StudyScenarios {
  std::vector<ScenarioSet> sets;             // what the planner sees
  std::vector<ReductionResult> reductions;   // one per set when reduction ran
};

/// Reads scenario files or generates from the day-types, then reduces when enabled.
StudyScenarios load_study_scenarios(const StudyConfig& cfg);

/// Generated (unreduced) scenarios, one set per configured day-type.
std::vector<ScenarioSet> generate_study_scenarios(const StudyConfig& cfg);

}  // namespace esplan
