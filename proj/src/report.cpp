#include "esplan/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace esplan {

using nlohmann::json;

namespace {

// JSON has no infinities; unbounded values go out as null
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json table2(const std::vector<std::vector<double>>& m) {
  json a = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (double v : row) r.push_back(num(v));
    a.push_back(r);
  }
  return a;
}

json allocation_json(const Allocation& a, const PerUnitBase& base) {
  json out = json::array();
  for (std::size_t k = 0; k < a.bus.size(); ++k) {
    out.push_back({{"bus", a.bus[k]},
                   {"installed", a.u[k] == 1},
                   {"r_pu", a.r[k]},
                   {"r_mva", a.r[k] * base.s_base_mva},
                   {"c_pu_h", a.c[k]},
                   {"c_mwh", a.c[k] * base.s_base_mva}});
  }
  return out;
}

json exactness_json(const ExactnessReport& e) {
  return {{"pass", e.pass},
          {"max_cone_slack", num(e.max_cone_slack)},
          {"max_v_gap", num(e.max_v_gap)},
          {"max_f_gap", num(e.max_f_gap)},
          {"max_oracle_dv", num(e.max_oracle_dv)},
          {"max_oracle_df", num(e.max_oracle_df)},
          {"max_oracle_ds", num(e.max_oracle_ds)},
          {"worst", {{"line", e.worst_line}, {"scenario", e.worst_phi}, {"t", e.worst_t}}},
          {"checked", e.checked}};
}

json dispatch_json(const DispatchSummary& s, const PerUnitBase& base) {
  json days = json::array();
  for (const auto& d : s.days) {
    double unc_max = 0.0;
    for (const auto& row : d.eps) {
      for (double e : row) unc_max = std::max(unc_max, std::abs(e));
    }
    days.push_back({{"day", d.day},
                    {"subproblem_cost", d.sc},
                    {"losses_cost", d.losses_cost},
                    {"unserved_cost", d.unserved_cost},
                    {"aux_cost", d.aux_cost},
                    {"losses_pu_h", d.losses_energy},
                    {"unserved_pu_h", d.unserved_energy},
                    {"uncovered_error_pu_h", d.uncovered_error},
                    {"uncovered_error_mwh", d.uncovered_error * base.s_base_mva},
                    {"max_abs_eps_pu", unc_max},
                    {"losses_iterations", d.iterations},
                    {"losses_converged", d.converged},
                    {"zeta_trace", d.zeta_trace},
                    {"solver_iterations", d.solver_iterations},
                    {"max_relative_gap", d.max_relative_gap},
                    {"max_lder_violation_pu", d.max_lder_violation},
                    {"max_gamma_mismatch_pu", d.max_gamma_mismatch},
                    {"dp_plan_pu", d.dp_plan},
                    {"exactness", exactness_json(d.exactness)}});
  }
  return {{"uncovered_error_mwh", s.uncovered_error_mwh},
          {"unserved_mwh", s.unserved_mwh},
          {"losses_mwh", s.losses_mwh},
          {"penalty_cost", s.penalty_cost},
          {"days", days}};
}

}  // namespace

json block1_json(const Block1Result& b1, const RadialNetwork& net, const std::vector<ScenarioSet>& sets) {
  json dp = json::array(), dp_mw = json::array();
  for (const auto& row : b1.dp) {
    dp.push_back(row);
    json mw = json::array();
    for (double v : row) mw.push_back(v * net.base().s_base_mva);
    dp_mw.push_back(mw);
  }
  json lder = json::array();
  for (const auto& d : b1.theta) lder.push_back(table2(d));
  json day_ids = json::array();
  for (const auto& s : sets) day_ids.push_back(s.day_type);
  return {{"allocation", allocation_json(b1.alloc, net.base())},
          {"investment", b1.investment},
          {"penalty", b1.penalty},
          {"objective", b1.objective},
          {"day_types", day_ids},
          {"dp_pu", dp},
          {"dp_mw", dp_mw},
          {"lder", lder},
          {"continuous_solves", b1.continuous_solves}};
}

json report_json(const PlanReport& rep, const RadialNetwork& net, const std::vector<ScenarioSet>& sets) {
  const PerUnitBase& base = net.base();
  json doc;
  doc["bases"] = {{"s_base_mva", base.s_base_mva}, {"v_base_kv", base.v_base_kv}};
  doc["status"] = {{"benders_converged", rep.benders.converged},
                   {"exactness_pass", rep.exactness_pass},
                   {"warnings", rep.warnings}};
  doc["block1"] = block1_json(rep.block1, net, sets);
  if (!net.candidates.empty()) {
    doc["allocation"] = allocation_json(rep.benders.incumbent, base);
    json iters = json::array();
    for (const auto& it : rep.benders.trace) {
      iters.push_back({{"n", it.n},
                       {"pass", it.pass},
                       {"lb", num(it.lb)},
                       {"ub", num(it.ub)},
                       {"gap", num(it.gap)},
                       {"candidate_cost", num(it.candidate_cost)},
                       {"losses_iterations", it.losses_iterations}});
    }
    doc["benders"] = {{"converged", rep.benders.converged},
                      {"lb", num(rep.benders.lb)},
                      {"ub", num(rep.benders.ub)},
                      {"gap", num(rep.benders.gap)},
                      {"passes", rep.benders.passes},
                      {"losses_consistent", rep.benders.losses_consistent},
                      {"iterations", iters},
                      {"cuts", rep.benders.cuts.size()}};
    doc["with_ess"] = dispatch_json(rep.with_ess, base);
  } else {
    doc["allocation"] = json::array();
  }
  if (rep.has_baseline) doc["without_ess"] = dispatch_json(rep.without_ess, base);
  doc["costs"] = {{"horizon_years", net.costs.horizon_years},
                  {"investment", rep.investment},
                  {"operation", rep.operation},
                  {"total", rep.total},
                  {"penalty_with_ess", net.candidates.empty() ? json(nullptr) : json(rep.with_ess.penalty_cost)},
                  {"penalty_without_ess", rep.has_baseline ? json(rep.without_ess.penalty_cost) : json(nullptr)}};
  return doc;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string opt_num(const json& j, const char* f) {
  return j.is_number() ? fmt(f, j.get<double>()) : std::string("-");
}

void dispatch_lines(std::ostringstream& o, const char* label, const json& d) {
  o << "  " << label << ": uncovered error " << fmt("%.4f", d["uncovered_error_mwh"].get<double>())
    << " MWh/yr, unserved " << fmt("%.4f", d["unserved_mwh"].get<double>()) << " MWh/yr, losses "
    << fmt("%.4f", d["losses_mwh"].get<double>()) << " MWh/yr\n";
  for (const auto& day : d["days"]) {
    const auto& e = day["exactness"];
    o << "    day " << day["day"].get<int>() << ": cost " << fmt("%.2f", day["subproblem_cost"].get<double>())
      << ", losses iters " << day["losses_iterations"].get<int>() << ", cone slack "
      << opt_num(e["max_cone_slack"], "%.2e") << ", oracle dv " << opt_num(e["max_oracle_dv"], "%.2e")
      << ", exact " << (e["pass"].get<bool>() ? "yes" : "no") << "\n";
  }
}

}  // namespace

std::string report_text(const json& r) {
  std::ostringstream o;
  const json& b1 = r.contains("block1") ? r["block1"] : r;
  const json& alloc = r.contains("allocation") && r.contains("benders") ? r["allocation"] : b1["allocation"];
  o << "Allocation\n";
  o << "  bus  installed   R [pu]   R [MVA]   C [pu h]   C [MWh]\n";
  for (const auto& a : alloc) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %3d  %9s  %7.4f  %8.4f  %9.4f  %8.4f\n", a["bus"].get<int>(),
                  a["installed"].get<bool>() ? "yes" : "no", a["r_pu"].get<double>(),
                  a["r_mva"].get<double>(), a["c_pu_h"].get<double>(), a["c_mwh"].get<double>());
    o << buf;
  }
  o << "Block 1: investment " << fmt("%.2f", b1["investment"].get<double>()) << ", penalty "
    << fmt("%.2f", b1["penalty"].get<double>()) << ", objective " << fmt("%.2f", b1["objective"].get<double>())
    << "\n";
  if (!r.contains("costs")) return o.str();

  if (r.contains("benders")) {
    const json& b = r["benders"];
    o << "Benders: " << b["iterations"].size() << " iterations, LB " << opt_num(b["lb"], "%.2f") << ", UB "
      << opt_num(b["ub"], "%.2f") << ", gap " << opt_num(b["gap"], "%.2e")
      << (b["converged"].get<bool>() ? " (converged)" : " (NOT converged)") << "\n";
    o << "     n  pass            LB            UB       gap\n";
    for (const auto& it : b["iterations"]) {
      o << fmt("  %4.0f", it["n"].get<double>()) << fmt("  %4.0f", it["pass"].get<double>()) << "  " << (it["lb"].is_number() ? fmt("%12.2f", it["lb"].get<double>()) : "           -")
        << "  " << fmt("%12.2f", it["ub"].is_number() ? it["ub"].get<double>() : NAN) << "  "
        << opt_num(it["gap"], "%.2e") << "\n";
    }
  }
  const json& c = r["costs"];
  o << "Costs over " << fmt("%g", c["horizon_years"].get<double>()) << " years\n";
  o << "  investment " << fmt("%.2f", c["investment"].get<double>()) << ", operation "
    << fmt("%.2f", c["operation"].get<double>()) << ", total " << fmt("%.2f", c["total"].get<double>()) << "\n";
  o << "  dispatch-error penalty with ESS " << opt_num(c["penalty_with_ess"], "%.2f") << ", without ESS "
    << opt_num(c["penalty_without_ess"], "%.2f") << "\n";
  o << "Dispatch\n";
  if (r.contains("with_ess")) dispatch_lines(o, "with ESS", r["with_ess"]);
  if (r.contains("without_ess")) dispatch_lines(o, "without ESS", r["without_ess"]);
  const json& st = r["status"];
  o << "Status: benders " << (st["benders_converged"].get<bool>() ? "converged" : "not converged")
    << ", exactness " << (st["exactness_pass"].get<bool>() ? "pass" : "FAIL") << "\n";
  for (const auto& w : st["warnings"]) o << "  warning: " << w.get<std::string>() << "\n";
  return o.str();
}

std::string dispatch_csv(const DispatchSummary& s, const RadialNetwork& net) {
  std::ostringstream o;
  o.precision(10);
  o << "day,scenario,t,DP_pu,gcp_p_pu,eps_pu,dp_sum_pu";
  for (const auto& c : net.candidates) o << ",soe_" << c.bus << "_pu_h";
  for (const auto& c : net.candidates) o << ",pE_" << c.bus << "_pu";
  o << "\n";
  for (const auto& d : s.days) {
    for (std::size_t phi = 0; phi < d.eps.size(); ++phi) {
      for (std::size_t t = 0; t < d.eps[phi].size(); ++t) {
        o << d.day << "," << phi << "," << t << "," << d.dp_plan[t] << "," << d.gcp_p[phi][t] << ","
          << d.eps[phi][t] << "," << d.dp_total[phi][t];
        // SoE at the end of the step
        for (const auto& k : d.soe) o << "," << k[phi][t + 1];
        for (const auto& k : d.pe) o << "," << k[phi][t];
        o << "\n";
      }
    }
  }
  return o.str();
}

std::string benders_csv(const BendersState& st, const RadialNetwork& net) {
  std::ostringstream o;
  o.precision(12);
  o << "n,pass,lb,ub,gap,master_objective,candidate_cost";
  for (const auto& c : net.candidates) o << ",R_" << c.bus << "_pu";
  for (const auto& c : net.candidates) o << ",C_" << c.bus << "_pu_h";
  o << "\n";
  auto v = [](double x) { return std::isfinite(x) ? std::to_string(x) : std::string(); };
  for (const auto& it : st.trace) {
    o << it.n << "," << it.pass << "," << v(it.lb) << "," << v(it.ub) << "," << v(it.gap) << "," << v(it.master_objective) << ","
      << v(it.candidate_cost);
    for (double r : it.alloc.r) o << "," << r;
    for (double c : it.alloc.c) o << "," << c;
    o << "\n";
  }
  return o.str();
}

json solution_json(const DispatchSummary& s) {
  json days = json::array();
  for (const auto& d : s.days) {
    json scen = json::array();
    for (const auto& row : d.flows) {
      json steps = json::array();
      for (const auto& st : row) {
        json p_top = json::array(), q_top = json::array(), p = json::array(), q = json::array();
        for (std::size_t i = 0; i < st.s_top.size(); ++i) {
          p_top.push_back(st.s_top[i].real());
          q_top.push_back(st.s_top[i].imag());
          p.push_back(st.s_inj[i].real());
          q.push_back(st.s_inj[i].imag());
        }
        steps.push_back({{"v", st.v},
                         {"f", st.f},
                         {"vbar", st.vbar},
                         {"fbar", st.fbar},
                         {"p_top", p_top},
                         {"q_top", q_top},
                         {"p_inj", p},
                         {"q_inj", q}});
      }
      scen.push_back(steps);
    }
    days.push_back({{"day", d.day}, {"scenarios", scen}});
  }
  return {{"format", "esplan-solution"}, {"days", days}};
}

std::vector<std::vector<std::vector<FlowState>>> parse_solution(const json& doc) {
  std::vector<std::vector<std::vector<FlowState>>> out;
  try {
    for (const auto& d : doc.at("days")) {
      out.emplace_back();
      for (const auto& sc : d.at("scenarios")) {
        out.back().emplace_back();
        for (const auto& st : sc) {
          FlowState f;
          f.v = st.at("v").get<std::vector<double>>();
          f.f = st.at("f").get<std::vector<double>>();
          f.vbar = st.value("vbar", f.v);
          f.fbar = st.value("fbar", f.f);
          const auto pt = st.at("p_top").get<std::vector<double>>(), qt = st.at("q_top").get<std::vector<double>>();
          const auto p = st.at("p_inj").get<std::vector<double>>(), q = st.at("q_inj").get<std::vector<double>>();
          const std::size_t n = f.v.size();
          if (f.f.size() != n || pt.size() != n || qt.size() != n || p.size() != n || q.size() != n ||
              f.vbar.size() != n || f.fbar.size() != n) {
            throw std::invalid_argument("solution arrays differ in length");
          }
          for (std::size_t i = 0; i < n; ++i) {
            f.s_top.emplace_back(pt[i], qt[i]);
            f.s_inj.emplace_back(p[i], q[i]);
          }
          out.back().back().push_back(std::move(f));
        }
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad solution file: ") + e.what());
  }
  return out;
}

std::string exactness_text(const ExactnessReport& r, const std::string& label) {
  std::ostringstream o;
  o << label << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.checked << " line states)\n";
  o << "  cone slack (rel)    " << fmt("%.3e", r.max_cone_slack);
  if (r.worst_line >= 0) {
    o << "  at line " << r.worst_line << ", scenario " << r.worst_phi << ", t " << r.worst_t;
  }
  o << "\n";
  o << "  oracle |dv| [pu]    " << fmt("%.3e", r.max_oracle_dv) << "\n";
  o << "  oracle |df| [pu]    " << fmt("%.3e", r.max_oracle_df) << "\n";
  o << "  oracle |ds| [pu]    " << fmt("%.3e", r.max_oracle_ds) << "\n";
  o << "  vbar gap (rel)      " << fmt("%.3e", r.max_v_gap) << "\n";
  o << "  fbar gap (rel)      " << fmt("%.3e", r.max_f_gap) << "\n";
  return o.str();
}

}  // namespace esplan
