#include <filesystem>

#include "doctest.h"
#include "esplan/config.hpp"
#include "esplan/report.hpp"

using namespace esplan;
using nlohmann::json;

namespace {

json feeder8_config() {
  return {{"network", "feeder8.json"}, {"day_types", {"day1_summer.json"}}, {"generation", {{"n", 12}, {"seed", 5}}}};
}

EssCandidate cand(int bus, double r_max, double c_max) {
  EssCandidate c;
  c.bus = bus;
  c.r_max = r_max;
  c.c_max = c_max;
  return c;
}

RadialNetwork three_bus() {
  RadialNetwork net({2.0, 1.0}, {{1, true, 0.81, 1.21}, {2, false, 0.81, 1.21}, {3, false, 0.81, 1.21}},
                    {{2, 1, 0.01, 0.01, 1e-4, 1.0}, {3, 2, 0.01, 0.01, 1e-4, 1.0}});
  net.candidates = {cand(2, 0.5, 3.0), cand(3, 0.5, 3.0)};
  net.costs.i_c = 100.0;
  net.costs.i_p = 0.5;
  net.costs.i_e = 0.2;
  net.costs.w_d = 700.0;
  net.costs.w_l = 100.0;
  net.costs.w_u = 1e5;
  net.costs.horizon_years = 10.0;
  return net;
}

ScenarioSet three_bus_day() {
  DayType day;
  day.id = 1;
  day.n_days = 365.0;
  day.delta_t_h = 6.0;
  day.bus_ids = {2, 3};
  day.p_forecast.resize(2, 4);
  day.p_forecast << 0.20, 0.25, 0.30, 0.20, 0.30, 0.35, 0.25, 0.30;
  day.q_forecast = 0.3 * day.p_forecast;
  day.sigma = Eigen::VectorXd::Constant(2, 0.2);
  return generate_scenarios(day, 4, 3);
}

}  // namespace

TEST_CASE("config defaults reach the planner options") {
  auto c = parse_config(feeder8_config(), "data");
  const PlannerOptions d;
  CHECK(c.planner.benders_gap == d.benders_gap);
  CHECK(c.planner.losses_tol == 1e-5);
  CHECK(c.planner.sub_solver.abstol == d.sub_solver.abstol);
  CHECK(c.planner.model.upper_flow_uses_fbar);
  CHECK(c.n_scenarios == 12);
  CHECK(c.reduce);
  CHECK(std::filesystem::equivalent(c.network, "data/feeder8.json"));
  CHECK(c.output_dir == std::filesystem::path("data") / "out");
}

TEST_CASE("config rejects bad input") {
  auto bad = [](json patch) {
    json j = feeder8_config();
    j.merge_patch(patch);
    return j;
  };
  CHECK_THROWS_AS(parse_config(bad({{"planer", json::object()}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"planner", {{"benders_gapp", 1.0}}}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"planner", {{"losses_tol", 0.0}}}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"planner", {{"cut_form", "other"}}}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"aropf", {{"upper_flow_current", "g"}}}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"network", "missing.json"}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"scenarios", {"day2_winter.json"}}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(bad({{"generation", {{"n", "many"}}}}), "data"), ConfigError);
  CHECK_THROWS_AS(parse_config(json::array(), "data"), ConfigError);
}

TEST_CASE("overrides map one key to one value") {
  json j = feeder8_config();
  apply_override(j, "planner.benders_gap=1e-3");
  apply_override(j, "aropf.upper_flow_current=f");
  apply_override(j, "costs.w_d=350");
  apply_override(j, "planner.block1_only=true");
  auto c = parse_config(j, "data");
  CHECK(c.planner.benders_gap == 1e-3);
  CHECK_FALSE(c.planner.model.upper_flow_uses_fbar);
  CHECK(c.planner.block1_only);
  CHECK(load_study_network(c).costs.w_d == 350.0);
  // untouched cost keys keep the network's values
  CHECK(load_study_network(c).costs.i_c == 20000.0);
  CHECK_THROWS_AS(apply_override(j, "planner.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
}

TEST_CASE("study scenarios are deterministic per seed and reduced on request") {
  auto c = parse_config(feeder8_config(), "data");
  auto a = generate_study_scenarios(c);
  auto b = generate_study_scenarios(c);
  REQUIRE(a.size() == 1);
  CHECK(write_scenarios_json(a[0]) == write_scenarios_json(b[0]));
  c.reduction.tolerance = 1e9;
  auto s = load_study_scenarios(c);
  REQUIRE(s.reductions.size() == 1);
  CHECK(s.sets[0].size() == 1);
  CHECK(s.sets[0].lambda[0] == doctest::Approx(1.0));
  c.reduce = false;
  CHECK(load_study_scenarios(c).sets[0].size() == 12);
}

TEST_CASE("frozen seeds reproduce the recorded k") {
  const json g = read_config_file("data/golden_k.json");
  json doc = {{"network", "feeder8.json"}, {"generation", g["generation"]}, {"reduction", g["reduction"]}};
  for (const auto& [file, k] : g["k"].items()) doc["day_types"].push_back(file);
  auto c = parse_config(doc, "data");
  const auto s = load_study_scenarios(c);
  int i = 0;
  for (const auto& [file, k] : g["k"].items()) {
    CAPTURE(file);
    CHECK(s.reductions[i].k == k.get<int>());
    CHECK(s.sets[i].size() == k.get<int>());
    ++i;
  }
}

TEST_CASE("report documents: JSON, text, CSV and the solved case") {
  auto net = three_bus();
  auto set = three_bus_day();
  PlannerOptions opt;
  opt.benders_max_iter = 3;
  auto rep = plan(net, {set}, opt);
  auto doc = report_json(rep, net, {set});

  REQUIRE(doc["allocation"].size() == 2);
  for (const auto& a : doc["allocation"]) {
    // s_base 2 MVA
    CHECK(a["r_mva"].get<double>() == doctest::Approx(2.0 * a["r_pu"].get<double>()));
  }
  // the -inf lower bound of iteration 0 goes out as null
  CHECK(doc["benders"]["iterations"][0]["lb"].is_null());
  CHECK(doc["costs"]["total"].get<double>() == doctest::Approx(rep.total));
  CHECK(doc["with_ess"]["uncovered_error_mwh"].get<double>() == doctest::Approx(rep.with_ess.uncovered_error_mwh));
  CHECK(doc["block1"]["lder"][0].size() == 4);

  // text comes from the JSON alone, so it survives a round trip through a file
  const auto text = report_text(json::parse(doc.dump()));
  CHECK(text.find("Allocation") != std::string::npos);
  CHECK(text.find("without ESS") != std::string::npos);
  CHECK(report_text(block1_json(rep.block1, net, {set})).find("Block 1") != std::string::npos);

  const auto csv = dispatch_csv(rep.with_ess, net);
  CHECK(csv.rfind("day,scenario,t,DP_pu,gcp_p_pu,eps_pu,dp_sum_pu,soe_2_pu_h,soe_3_pu_h,pE_2_pu,pE_3_pu\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 4);
  const auto bcsv = benders_csv(rep.benders, net);
  CHECK(std::count(bcsv.begin(), bcsv.end(), '\n') == 1 + static_cast<long>(rep.benders.trace.size()));

  auto back = parse_solution(json::parse(solution_json(rep.with_ess).dump()));
  REQUIRE(back.size() == 1);
  auto again = check_flows(net, back[0], opt);
  const auto& orig = rep.with_ess.days[0].exactness;
  CHECK(again.pass == orig.pass);
  CHECK(again.max_cone_slack == doctest::Approx(orig.max_cone_slack).epsilon(1e-9));
  CHECK(again.max_oracle_dv == doctest::Approx(orig.max_oracle_dv).scale(1e-15));

  // tamper one current: the table names the line
  back[0][1][2].f[1] *= 1.01;
  auto bad = check_flows(net, back[0], opt);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_line == 3);
  CHECK(exactness_text(bad, "day 0").find("line 3") != std::string::npos);
  CHECK_THROWS_AS(parse_solution(json{{"days", {{{"scenarios", {{{{"v", {1.0}}}}}}}}}}), std::invalid_argument);
}
