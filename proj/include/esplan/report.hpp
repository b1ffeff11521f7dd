#pragma once

// Report emission: JSON document, plain-text table built from that JSON,
// CSV traces, and the solved-case file the verify command reads back.

#include <string>
#include <vector>

#include "esplan/planner.hpp"
#include "json.hpp"

namespace esplan {

nlohmann::json block1_json(const Block1Result& b1, const RadialNetwork& net,
                           const std::vector<ScenarioSet>& sets);

nlohmann::json report_json(const PlanReport& rep, const RadialNetwork& net,
                           const std::vector<ScenarioSet>& sets);

/// Human-readable summary of a report_json (or block1_json) document.
std::string report_text(const nlohmann::json& report);

/// day,scenario,t,DP_pu,gcp_p_pu,eps_pu,dp_sum_pu,soe_<bus>_pu_h...,pE_<bus>_pu...
std::string dispatch_csv(const DispatchSummary& s, const RadialNetwork& net);

/// n,lb,ub,gap,master_objective,candidate_cost,R_<bus>,C_<bus>...
std::string benders_csv(const BendersState& st, const RadialNetwork& net);

/// Network state per day, scenario and step, for re-checking against the oracle.
nlohmann::json solution_json(const DispatchSummary& s);
/// [day][phi][t]
std::vector<std::vector<std::vector<FlowState>>> parse_solution(const nlohmann::json& doc);

/// Residual table of one exactness report.
std::string exactness_text(const ExactnessReport& r, const std::string& label);

}  // namespace esplan
