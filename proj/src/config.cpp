#include "esplan/config.hpp"

#include <fstream>
#include <sstream>

namespace esplan {

using nlohmann::json;
namespace fs = std::filesystem;

json default_config() {
  const PlannerOptions p;
  const ReductionConfig r;
  auto solver = [](const SolverOptions& o) {
    return json{{"feastol", o.feastol},
                {"abstol", o.abstol},
                {"reltol", o.reltol},
                {"max_iterations", o.max_iterations},
                {"time_limit_s", o.time_limit_s}};
  };
  return {
      {"network", ""},
      {"day_types", json::array()},
      {"scenarios", json::array()},
      {"generation", {{"n", 200}, {"seed", 1}, {"sigma", nullptr}}},
      {"reduction",
       {{"enabled", true},
        {"n_q", r.n_q},
        {"quantile_lo", r.quantile_lo},
        {"quantile_hi", r.quantile_hi},
        {"weights", json::array()},
        {"tolerance", r.tolerance},
        {"max_k", r.max_k},
        {"seed", r.seed}}},
      {"planner",
       {{"benders_gap", p.benders_gap},
        {"benders_max_iter", p.benders_max_iter},
        {"losses_tol", p.losses_tol},
        {"losses_max_iter", p.losses_max_iter},
        {"realize_every_iteration", p.realize_every_iteration},
        {"losses_passes", p.losses_passes},
        {"cone_tol", p.cone_tol},
        {"oracle_tol", p.oracle_tol},
        {"aux_floor", p.aux_floor},
        {"cut_form", "sensitivity"},
        {"binary_mode", "enumerate"},
        {"parallel_days", p.parallel_days},
        {"baseline", p.baseline},
        {"block1_only", p.block1_only}}},
      {"aropf",
       {{"upper_flow_current", "fbar"},
        {"periodic_soe", p.model.periodic_soe},
        {"fbar_weight", p.model.fbar_weight},
        {"ess_floor", p.model.ess_floor}}},
      {"solver", solver(p.solver)},
      {"sub_solver", solver(p.sub_solver)},
      {"costs", json::object()},
      {"output_dir", "out"},
  };
}

namespace {

// Unknown keys are errors, so a typo never silently falls back to a default.
void check_keys(const json& doc, const json& ref, const std::string& where) {
  for (const auto& [k, v] : doc.items()) {
    if (!ref.contains(k)) throw ConfigError("unknown key " + where + k);
    if (v.is_object() && ref[k].is_object() && !ref[k].empty()) check_keys(v, ref[k], where + k + ".");
  }
}

double positive(const json& j, const char* key, const std::string& where) {
  const double v = j.at(key).get<double>();
  if (!(v > 0.0)) throw ConfigError(where + key + " must be positive");
  return v;
}

int positive_int(const json& j, const char* key, const std::string& where) {
  const int v = j.at(key).get<int>();
  if (v < 1) throw ConfigError(where + key + " must be at least 1");
  return v;
}

SolverOptions solver_from(const json& j, const std::string& where) {
  SolverOptions o;
  o.feastol = positive(j, "feastol", where);
  o.abstol = positive(j, "abstol", where);
  o.reltol = positive(j, "reltol", where);
  o.max_iterations = positive_int(j, "max_iterations", where);
  o.time_limit_s = positive(j, "time_limit_s", where);
  return o;
}

fs::path existing(const json& j, const fs::path& base, const std::string& what) {
  fs::path p = j.get<std::string>();
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

StudyConfig parse_config(const json& user, const fs::path& base_dir) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  const json ref = default_config();
  check_keys(user, ref, "");
  json doc = ref;
  doc.merge_patch(user);
  // merge_patch drops nulls; keep the explicit "no override" meaning
  if (!doc["generation"].contains("sigma")) doc["generation"]["sigma"] = nullptr;

  StudyConfig c;
  try {
    if (doc["network"].get<std::string>().empty()) throw ConfigError("network path is required");
    c.network = existing(doc["network"], base_dir, "network");
    for (const auto& p : doc["day_types"]) c.day_types.push_back(existing(p, base_dir, "day-type file"));
    for (const auto& p : doc["scenarios"]) c.scenarios.push_back(existing(p, base_dir, "scenario file"));
    if (c.day_types.empty() == c.scenarios.empty()) {
      throw ConfigError("give exactly one of day_types and scenarios");
    }

    const json& g = doc["generation"];
    c.n_scenarios = positive_int(g, "n", "generation.");
    c.seed = g["seed"].get<std::uint64_t>();
    if (!g["sigma"].is_null()) {
      c.sigma = g["sigma"].get<double>();
      if (*c.sigma < 0.0) throw ConfigError("generation.sigma must be nonnegative");
    }

    const json& r = doc["reduction"];
    c.reduce = r["enabled"].get<bool>();
    c.reduction.n_q = positive_int(r, "n_q", "reduction.");
    c.reduction.quantile_lo = r["quantile_lo"].get<double>();
    c.reduction.quantile_hi = r["quantile_hi"].get<double>();
    c.reduction.weights = r["weights"].get<std::vector<double>>();
    c.reduction.tolerance = positive(r, "tolerance", "reduction.");
    c.reduction.max_k = r["max_k"].get<int>();
    c.reduction.seed = r["seed"].get<std::uint64_t>();
    try {
      c.reduction.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("reduction: ") + e.what());
    }

    const json& p = doc["planner"];
    PlannerOptions& o = c.planner;
    o.benders_gap = positive(p, "benders_gap", "planner.");
    o.benders_max_iter = positive_int(p, "benders_max_iter", "planner.");
    o.losses_tol = positive(p, "losses_tol", "planner.");
    o.losses_max_iter = positive_int(p, "losses_max_iter", "planner.");
    o.realize_every_iteration = p["realize_every_iteration"].get<bool>();
    o.losses_passes = positive_int(p, "losses_passes", "planner.");
    o.cone_tol = positive(p, "cone_tol", "planner.");
    o.oracle_tol = positive(p, "oracle_tol", "planner.");
    o.aux_floor = positive(p, "aux_floor", "planner.");
    const auto cut = p["cut_form"].get<std::string>();
    if (cut == "sensitivity") {
      o.cut_form = CutForm::kSensitivity;
    } else if (cut == "literal") {
      o.cut_form = CutForm::kLiteral;
    } else {
      throw ConfigError("planner.cut_form must be sensitivity or literal");
    }
    const auto mode = p["binary_mode"].get<std::string>();
    if (mode == "enumerate") {
      o.binary_mode = BinaryMode::kEnumerate;
    } else if (mode == "branch_bound") {
      o.binary_mode = BinaryMode::kBranchBound;
    } else {
      throw ConfigError("planner.binary_mode must be enumerate or branch_bound");
    }
    o.parallel_days = p["parallel_days"].get<bool>();
    o.baseline = p["baseline"].get<bool>();
    o.block1_only = p["block1_only"].get<bool>();

    const json& a = doc["aropf"];
    const auto upper = a["upper_flow_current"].get<std::string>();
    if (upper != "fbar" && upper != "f") throw ConfigError("aropf.upper_flow_current must be fbar or f");
    o.model.upper_flow_uses_fbar = upper == "fbar";
    o.model.periodic_soe = a["periodic_soe"].get<bool>();
    o.model.fbar_weight = positive(a, "fbar_weight", "aropf.");
    o.model.ess_floor = positive(a, "ess_floor", "aropf.");

    o.solver = solver_from(doc["solver"], "solver.");
    o.sub_solver = solver_from(doc["sub_solver"], "sub_solver.");

    c.cost_overrides = doc["costs"];
    c.output_dir = doc["output_dir"].get<std::string>();
    if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value type: ") + e.what());
  }
  return c;
}

json read_config_file(const fs::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override needs key=value: " + assignment);
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  std::string pointer;
  std::stringstream parts(key);
  for (std::string part; std::getline(parts, part, '.');) pointer += "/" + part;
  const json::json_pointer ptr(pointer);
  // cost keys are free-form; everything else must exist
  const bool is_cost = key.rfind("costs.", 0) == 0;
  if (!is_cost && !default_config().contains(ptr)) throw ConfigError("unknown key " + key);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  if (!doc.is_object()) doc = json::object();
  doc[ptr] = value;
}

RadialNetwork load_study_network(const StudyConfig& cfg) {
  json doc;
  try {
    doc = json::parse(slurp(cfg.network));
  } catch (const json::parse_error& e) {
    throw ConfigError(cfg.network.string() + ": " + e.what());
  }
  if (!cfg.cost_overrides.empty()) {
    if (!doc.contains("costs")) doc["costs"] = json::object();
    doc["costs"].merge_patch(cfg.cost_overrides);
  }
  return parse_network(doc.dump());
}

std::vector<ScenarioSet> generate_study_scenarios(const StudyConfig& cfg) {
  std::vector<ScenarioSet> out;
  for (std::size_t i = 0; i < cfg.day_types.size(); ++i) {
    DayType day = read_day_type(cfg.day_types[i].string());
    if (cfg.sigma) {
      day.sigma = Eigen::VectorXd::Constant(day.bus_ids.size(), *cfg.sigma);
      day.sigma_q.resize(0);
    }
    try {
      out.push_back(generate_scenarios(day, cfg.n_scenarios, cfg.seed + i));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("day-type " + std::to_string(day.id) + ": " + e.what());
    }
  }
  return out;
}

StudyScenarios load_study_scenarios(const StudyConfig& cfg) {
  StudyScenarios s;
  if (!cfg.scenarios.empty()) {
    for (const auto& p : cfg.scenarios) s.sets.push_back(read_scenarios(p.string()));
  } else {
    s.sets = generate_study_scenarios(cfg);
  }
  if (cfg.reduce) {
    for (auto& set : s.sets) {
      s.reductions.push_back(reduce_scenarios(set, cfg.reduction));
      set = s.reductions.back().reduced;
    }
  }
  return s;
}

}  // namespace esplan
