#include "esplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include "esplan/pf.hpp"

namespace esplan {

namespace {

double energy_factor(const CostParams& c, double n_days, double dt, const PerUnitBase& base) {
  return c.horizon_years * n_days * dt * base.s_base_mva;
}

std::string day_tag(int d) { return "day " + std::to_string(d); }

// |eps| cap as the subproblem builder sets it
double lder_cap(double theta, double dp_sum, const ModelOptions& opt) {
  if (std::isinf(theta)) return kInf;
  double cap = theta * std::abs(dp_sum);
  if (std::abs(dp_sum) < opt.degenerate_dp) cap = std::min(cap, opt.degenerate_cap);
  return cap;
}

Allocation read_allocation(const RadialNetwork& net, const VarRegistry& reg, const SolveResult& r) {
  Allocation a;
  for (const auto& c : net.candidates) {
    a.bus.push_back(c.bus);
    a.u.push_back(reg.value(r, "U", c.bus) > 0.5 ? 1 : 0);
    // interior-point noise below zero is clipped; off sites are exactly zero
    a.r.push_back(a.u.back() ? std::max(0.0, reg.value(r, "R", c.bus)) : 0.0);
    a.c.push_back(a.u.back() ? std::max(0.0, reg.value(r, "C", c.bus)) : 0.0);
  }
  return a;
}

// First (d, phi, t) whose exact flow without storage leaves the voltage window.
std::string locate_voltage_violation(const RadialNetwork& net, const std::vector<ScenarioSet>& sets) {
  for (std::size_t d = 0; d < sets.size(); ++d) {
    DayLoads day = map_loads(net, sets[d]);
    for (int phi = 0; phi < day.num_scenarios(); ++phi) {
      for (int t = 0; t < day.T; ++t) {
        std::vector<Complex> s;
        for (int i = 0; i < net.num_lines(); ++i) s.emplace_back(day.p[phi][t][i], day.q[phi][t][i]);
        std::ostringstream at;
        at << "day " << d << " scenario " << phi << " t " << t;
        try {
          auto pf = solve_pf(net, s);
          for (int i = 0; i < net.num_lines(); ++i) {
            const Bus& b = net.bus(net.lines()[i].id);
            if (pf.v[i] < b.v_min || pf.v[i] > b.v_max) {
              return "voltage limits infeasible at bus " + std::to_string(b.id) + ", " + at.str();
            }
          }
        } catch (const PfError&) {
          return "no power flow solution at " + at.str();
        }
      }
    }
  }
  return {};
}

}  // namespace

FlowState extract_flow(const RadialNetwork& net, const SubproblemModel& sp, const SolveResult& sol,
                       int phi, int t) {
  const auto& reg = sp.reg;
  FlowState st;
  for (const Line& ln : net.lines()) {
    const int l = ln.id;
    st.v.push_back(reg.value(sol, "v", l, phi, t));
    st.f.push_back(reg.value(sol, "f", l, phi, t));
    st.vbar.push_back(reg.value(sol, "vbar", l, phi, t));
    st.fbar.push_back(reg.value(sol, "fbar", l, phi, t));
    st.s_top.emplace_back(reg.value(sol, "Pt", l, phi, t), reg.value(sol, "Qt", l, phi, t));
    double pe = 0.0, qe = 0.0;
    if (reg.has({"pE", l, phi, t})) {
      pe = reg.value(sol, "pE", l, phi, t);
      qe = reg.value(sol, "qE", l, phi, t);
    }
    st.s_inj.emplace_back(reg.value(sol, "p'", l, phi, t) + pe, reg.value(sol, "q'", l, phi, t) + qe);
  }
  return st;
}

ExactnessReport check_flows(const RadialNetwork& net, const std::vector<std::vector<FlowState>>& flows,
                            const PlannerOptions& opt) {
  ExactnessReport rep;
  const int n = net.num_lines();
  for (std::size_t phi = 0; phi < flows.size(); ++phi) {
    for (std::size_t t = 0; t < flows[phi].size(); ++t) {
      const FlowState& st = flows[phi][t];
      if (static_cast<int>(st.v.size()) != n || static_cast<int>(st.s_inj.size()) != n) {
        throw std::invalid_argument("flow state does not match the network");
      }
      for (int i = 0; i < n; ++i) {
        const Line& ln = net.lines()[i];
        const double vu = net.parent(i) < 0 ? net.slack_v() : st.v[net.parent(i)];
        const double P = st.s_top[i].real(), qs = st.s_top[i].imag() + ln.b * vu;
        const double fv = st.f[i] * vu;
        const double rel = (fv - (P * P + qs * qs)) / std::max(fv, 1e-300);
        if (rep.worst_line < 0 || std::abs(rel) > std::abs(rep.max_cone_slack)) {
          rep.max_cone_slack = rel;
          rep.worst_line = ln.id;
          rep.worst_phi = static_cast<int>(phi);
          rep.worst_t = static_cast<int>(t);
        }
        rep.max_v_gap = std::max(rep.max_v_gap, (st.vbar[i] - st.v[i]) / st.v[i]);
        rep.max_f_gap = std::max(rep.max_f_gap, (st.fbar[i] - st.f[i]) / std::max(st.f[i], opt.aux_floor));
        ++rep.checked;
      }
      try {
        auto orc = verify_against_oracle(net, {st.v, st.f, st.s_top}, st.s_inj, opt.oracle_tol);
        rep.max_oracle_dv = std::max(rep.max_oracle_dv, orc.max_dv);
        rep.max_oracle_df = std::max(rep.max_oracle_df, orc.max_df);
        rep.max_oracle_ds = std::max(rep.max_oracle_ds, orc.max_ds);
      } catch (const PfError&) {
        rep.max_oracle_dv = rep.max_oracle_df = rep.max_oracle_ds = kInf;
      }
    }
  }
  // the slack is reported signed; a violated cone is as bad as a loose one
  rep.pass = std::abs(rep.max_cone_slack) <= opt.cone_tol && rep.max_oracle_dv <= opt.oracle_tol &&
             rep.max_oracle_df <= opt.oracle_tol && rep.max_oracle_ds <= opt.oracle_tol;
  return rep;
}

namespace {

std::vector<std::vector<FlowState>> extract_all(const RadialNetwork& net, const SubproblemModel& sp,
                                                const SolveResult& sol) {
  std::vector<std::vector<FlowState>> out(sp.loads.num_scenarios());
  for (int phi = 0; phi < sp.loads.num_scenarios(); ++phi) {
    for (int t = 0; t < sp.loads.T; ++t) out[phi].push_back(extract_flow(net, sp, sol, phi, t));
  }
  return out;
}

}  // namespace

ExactnessReport check_exactness(const RadialNetwork& net, const SubproblemModel& sp,
                                const SolveResult& sol, const PlannerOptions& opt) {
  return check_flows(net, extract_all(net, sp, sol), opt);
}

SubproblemResult solve_subproblem_day(const RadialNetwork& net, SubproblemModel& sp,
                                      const std::vector<std::vector<double>>& theta, int day,
                                      const PlannerOptions& opt) {
  const DayLoads& L = sp.loads;
  const int K = L.num_scenarios(), T = L.T, n = net.num_lines();
  SubproblemResult res;
  res.day = day;
  auto gamma = sp.gamma;
  SolveResult r;
  for (int m = 1; m <= opt.losses_max_iter; ++m) {
    r = solve_continuous(sp.prog, opt.sub_solver);
    if (!r.optimal()) {
      throw PlanError(FailureKind::kSolver, "subproblem " + day_tag(day),
                      std::string("solver returned ") + to_string(r.status) + " at losses iteration " +
                          std::to_string(m));
    }
    res.iterations = m;
    res.solver_iterations += r.iterations;
    res.max_relative_gap = std::max(res.max_relative_gap, r.relative_gap());
    double zmax = 0.0;
    std::vector<std::vector<double>> zeta(K, std::vector<double>(T));
    for (int phi = 0; phi < K; ++phi) {
      for (int t = 0; t < T; ++t) {
        zeta[phi][t] = sp.reg.value(r, "zeta", -1, phi, t);
        zmax = std::max(zmax, std::abs(zeta[phi][t]));
      }
    }
    res.zeta_trace.push_back(zmax);
    if (zmax < opt.losses_tol) {
      res.converged = true;
      break;
    }
    if (m == opt.losses_max_iter) break;
    for (int t = 0; t < T; ++t) {
      double mean = 0.0;
      for (int phi = 0; phi < K; ++phi) {
        gamma[phi][t] += zeta[phi][t];
        mean += L.lambda[phi] * gamma[phi][t];
      }
      // the offsets average to zero; keep rounding from drifting
      for (int phi = 0; phi < K; ++phi) gamma[phi][t] -= mean;
    }
    sp.set_gamma(gamma);
  }

  res.gamma = sp.gamma;
  res.r_star = sp.r_star;
  res.c_star = sp.c_star;
  res.sc = r.objective / sp.cost_scale;
  for (std::size_t k = 0; k < sp.fix_r.size(); ++k) {
    res.mu.push_back(r.dual(sp.fix_r[k]) / sp.cost_scale);
    res.vartheta.push_back(r.dual(sp.fix_c[k]) / sp.cost_scale);
  }

  const CostParams& cost = net.costs;
  const double Kf = energy_factor(cost, L.n_days, L.dt, net.base());
  res.eps.assign(K, std::vector<double>(T));
  res.gcp_p = res.eps;
  res.dp_total = res.eps;
  res.dp_plan.assign(T, 0.0);
  for (int t = 0; t < T; ++t) res.dp_plan[t] = sp.reg.value(r, "DP", -1, -1, t);
  for (int phi = 0; phi < K; ++phi) {
    const double lam = L.lambda[phi];
    for (int t = 0; t < T; ++t) {
      double losses = 0.0, ul = 0.0, fbar = 0.0, loss_df = 0.0, gcp = 0.0;
      for (int i = 0; i < n; ++i) {
        const Line& ln = net.lines()[i];
        const int l = ln.id;
        losses += ln.r * sp.reg.value(r, "f", l, phi, t);
        loss_df += ln.r * sp.reg.value(r, "df", l, phi, t);
        fbar += sp.reg.value(r, "fbar", l, phi, t);
        for (const char* u : {"ulp+", "ulp-", "ulq+", "ulq-"}) ul += sp.reg.value(r, u, l, phi, t);
        if (net.parent(i) < 0) gcp += sp.reg.value(r, "Pt", l, phi, t);
      }
      double ulp = 0.0;
      for (int i = 0; i < n; ++i) {
        ulp += sp.reg.value(r, "ulp+", net.lines()[i].id, phi, t) +
               sp.reg.value(r, "ulp-", net.lines()[i].id, phi, t);
      }
      const double eps = sp.reg.value(r, "eps", -1, phi, t);
      const double dps = L.total_dp(phi, t);
      res.eps[phi][t] = eps;
      res.gcp_p[phi][t] = gcp;
      res.dp_total[phi][t] = dps;
      res.losses_cost += Kf * lam * cost.w_l * losses;
      res.unserved_cost += Kf * lam * cost.w_u * ul;
      res.aux_cost += Kf * lam * cost.w_l * opt.model.fbar_weight * fbar;
      res.losses_energy += lam * losses * L.dt;
      res.unserved_energy += lam * ulp * L.dt;
      res.uncovered_error += lam * (std::abs(eps) + ulp) * L.dt;
      res.max_lder_violation =
          std::max(res.max_lder_violation, std::abs(eps) - lder_cap(theta[phi][t], dps, opt.model));
      res.max_gamma_mismatch = std::max(res.max_gamma_mismatch, std::abs(sp.gamma[phi][t] - loss_df));
    }
  }
  const std::size_t nc = net.candidates.size();
  res.soe.assign(nc, std::vector<std::vector<double>>(K, std::vector<double>(T + 1)));
  res.pe.assign(nc, std::vector<std::vector<double>>(K, std::vector<double>(T)));
  res.qe = res.pe;
  for (std::size_t k = 0; k < nc; ++k) {
    const int b = net.candidates[k].bus;
    for (int phi = 0; phi < K; ++phi) {
      for (int t = 0; t <= T; ++t) res.soe[k][phi][t] = sp.reg.value(r, "E", b, phi, t);
      for (int t = 0; t < T; ++t) {
        res.pe[k][phi][t] = sp.reg.value(r, "pE", b, phi, t);
        res.qe[k][phi][t] = sp.reg.value(r, "qE", b, phi, t);
      }
    }
  }
  res.flows = extract_all(net, sp, r);
  res.exactness = check_flows(net, res.flows, opt);
  return res;
}

SubproblemResult solve_subproblem_day(const RadialNetwork& net, const ScenarioSet& set,
                                      const std::vector<std::vector<double>>& theta,
                                      const std::vector<double>& r, const std::vector<double>& c,
                                      int day, const PlannerOptions& opt) {
  SubproblemModel sp;
  try {
    sp = build_subproblem(net, set, theta, r, c, {}, opt.model);
  } catch (const std::invalid_argument& e) {
    throw PlanError(FailureKind::kValidation, "subproblem " + day_tag(day), e.what());
  }
  return solve_subproblem_day(net, sp, theta, day, opt);
}

Block1Result run_block1(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                        const PlannerOptions& opt) {
  Block1Model m;
  try {
    m = build_block1(net, sets, opt.model);
  } catch (const std::invalid_argument& e) {
    throw PlanError(FailureKind::kValidation, "block 1", e.what());
  }
  BinarySolveStats st;
  auto r = solve_with_binaries(m.prog, m.atlas, opt.binary_mode, opt.solver, &st);
  if (!r.optimal()) {
    if (r.status == SolveStatus::kInfeasible) {
      std::string where = locate_voltage_violation(net, sets);
      throw PlanError(FailureKind::kValidation, "block 1",
                      where.empty() ? "infeasible (no scenario violates the voltage window by itself)"
                                    : where);
    }
    throw PlanError(FailureKind::kSolver, "block 1",
                    std::string("solver returned ") + to_string(r.status));
  }
  Block1Result out;
  out.continuous_solves = st.continuous_solves;
  out.alloc = read_allocation(net, m.reg, r);
  out.objective = r.objective / m.cost_scale;
  out.relative_gap = r.relative_gap();
  out.investment = investment_cost(m.reg, net.candidates, net.costs, net.base()).evaluate(r.x);
  out.penalty = out.objective - out.investment;
  out.theta = compute_lder(m, r, opt.model);
  for (std::size_t d = 0; d < m.days.size(); ++d) {
    const auto& day = m.days[d];
    std::vector<double> dp(day.T);
    std::vector<std::vector<double>> eps(day.num_scenarios(), std::vector<double>(day.T));
    for (int t = 0; t < day.T; ++t) {
      dp[t] = m.reg.value(r, "DP", -1, -1, t, static_cast<int>(d));
      for (int phi = 0; phi < day.num_scenarios(); ++phi) {
        eps[phi][t] = m.reg.value(r, "eps", -1, phi, t, static_cast<int>(d));
      }
    }
    out.dp.push_back(dp);
    out.eps.push_back(eps);
  }
  return out;
}

double allocation_cost(const std::vector<EssCandidate>& cands, const Allocation& a,
                       const CostParams& costs, const PerUnitBase& base) {
  const double kilo = base.s_base_mva * 1000.0;
  double v = 0.0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    v += costs.i_c * a.u[k] + costs.i_p * kilo * a.r[k] + costs.i_e * kilo * a.c[k];
  }
  return v;
}

namespace {

std::vector<SubproblemResult> evaluate_days(const RadialNetwork& net,
                                            std::vector<SubproblemModel>& models,
                                            const ThetaTable& theta, const Allocation& a,
                                            const PlannerOptions& opt) {
  auto one = [&](int d) {
    models[d].set_allocation(a.r, a.c, opt.model);
    return solve_subproblem_day(net, models[d], theta[d], d, opt);
  };
  std::vector<SubproblemResult> out;
  if (opt.parallel_days && models.size() > 1) {
    std::vector<std::future<SubproblemResult>> jobs;
    for (int d = 0; d < static_cast<int>(models.size()); ++d) {
      jobs.push_back(std::async(std::launch::async, one, d));
    }
    for (auto& j : jobs) out.push_back(j.get());
  } else {
    for (int d = 0; d < static_cast<int>(models.size()); ++d) out.push_back(one(d));
  }
  return out;
}

}  // namespace

BendersState run_benders(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                         const Block1Result& block1, const PlannerOptions& opt) {
  const int nd = static_cast<int>(sets.size());
  if (nd == 0 || static_cast<int>(block1.theta.size()) != nd) {
    throw PlanError(FailureKind::kValidation, "benders", "LDER table does not match the day-types");
  }
  std::vector<SubproblemModel> models;
  try {
    for (int d = 0; d < nd; ++d) {
      models.push_back(build_subproblem(net, sets[d], block1.theta[d], block1.alloc.r, block1.alloc.c,
                                        {}, opt.model));
    }
  } catch (const std::invalid_argument& e) {
    throw PlanError(FailureKind::kValidation, "benders", e.what());
  }

  // Cuts are only valid for one fixed losses offset: SC(R, C) realized through the
  // fixed point is not convex. So each pass freezes gamma at the value realized at
  // its starting point, and a new pass starts whenever the incumbent moves it.
  PlannerOptions frozen = opt;
  if (!opt.realize_every_iteration) frozen.losses_max_iter = 1;
  const int passes = opt.realize_every_iteration ? 1 : std::max(1, opt.losses_passes);

  BendersState st;
  Allocation start = block1.alloc;
  auto start_days = evaluate_days(net, models, block1.theta, start, opt);
  int n_total = 0;
  for (int pass = 0; pass < passes; ++pass) {
    st.cuts.clear();
    st.lb = -kInf;
    st.ub = kInf;
    st.gap = kInf;
    st.converged = false;
    Allocation alloc = start;
    double master_obj = -kInf, master_gap = 0.0;
    bool start_won = false;
    for (int n = 0; n <= opt.benders_max_iter && n_total <= opt.benders_max_iter; ++n, ++n_total) {
      if (n > 0) {
        auto master = build_master(net.candidates, net.costs, net.base(), nd, st.cuts, 0.0,
                                   opt.cut_form);
        auto rm = solve_with_binaries(master.prog, master.atlas, opt.binary_mode, opt.solver);
        if (!rm.optimal()) {
          throw PlanError(FailureKind::kSolver, "benders master",
                          std::string("solver returned ") + to_string(rm.status) + " at iteration " +
                              std::to_string(n_total));
        }
        master_obj = rm.objective;
        master_gap = rm.relative_gap();
        st.lb = std::max(st.lb, master_obj);
        alloc = read_allocation(net, master.reg, rm);
      }
      BendersIteration it;
      it.n = n_total;
      it.pass = pass;
      it.master_objective = master_obj;
      it.alloc = alloc;
      if (n > 0 && std::isfinite(st.ub) && (st.ub - st.lb) <= opt.benders_gap * std::abs(st.ub)) {
        // bounds already closed: the new point cannot improve the incumbent
        it.candidate_cost = std::nan("");
        it.lb = st.lb;
        it.ub = st.ub;
        it.gap = st.gap = (st.ub - st.lb) / std::abs(st.ub);
        st.trace.push_back(it);
        if (opt.log) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "benders %d (pass %d): LB %.6g closes the gap, no new point", n_total,
                        pass, st.lb);
          opt.log(buf);
        }
        st.converged = true;
        ++n_total;
        break;
      }
      auto days = n == 0 ? start_days : evaluate_days(net, models, block1.theta, alloc, frozen);
      const double ic = allocation_cost(net.candidates, alloc, net.costs, net.base());
      double total = ic;
      for (const auto& d : days) {
        total += d.sc;
        it.losses_iterations.push_back(d.iterations);
        it.exactness.push_back(d.exactness);
        it.max_relative_gap = std::max({it.max_relative_gap, master_gap, d.max_relative_gap});
        st.cuts.push_back({d.day, d.sc, d.mu, d.vartheta, d.r_star, d.c_star});
      }
      it.candidate_cost = total;
      if (total < st.ub) {
        st.ub = total;
        st.incumbent = alloc;
        st.incumbent_investment = ic;
        st.incumbent_days = std::move(days);
        start_won = n == 0;
      }
      it.lb = st.lb;
      it.ub = st.ub;
      st.gap = std::isfinite(st.lb) ? (st.ub - st.lb) / std::abs(st.ub) : kInf;
      it.gap = st.gap;
      st.trace.push_back(it);
      if (opt.log) {
        char buf[180];
        std::snprintf(buf, sizeof buf, "benders %d (pass %d): candidate %.6g, LB %.6g, UB %.6g, gap %.3g",
                      n_total, pass, total, st.lb, st.ub, st.gap);
        opt.log(buf);
      }
      if (st.gap <= opt.benders_gap) {
        st.converged = true;
        ++n_total;
        break;
      }
    }
    st.passes = pass + 1;
    if (opt.realize_every_iteration || start_won) {
      // the start point was realized with the full fixed point already
      st.losses_consistent = true;
      break;
    }
    // realize losses at the incumbent, starting from this pass's gamma
    auto real = evaluate_days(net, models, block1.theta, st.incumbent, opt);
    bool settled = true;
    for (const auto& d : real) settled = settled && d.converged && d.iterations == 1;
    if (opt.log) {
      opt.log(std::string("losses at the incumbent ") + (settled ? "match" : "moved") + " after pass " +
              std::to_string(pass));
    }
    if (settled) {
      st.incumbent_days = std::move(real);
      st.losses_consistent = true;
      break;
    }
    start = st.incumbent;
    start_days = std::move(real);
    // the realized days belong to the next pass's first iteration; keep them as incumbent
    // in case the pass budget ends here
    st.incumbent_days = start_days;
    st.ub = st.incumbent_investment;
    for (const auto& d : start_days) st.ub += d.sc;
    st.converged = false;
    if (n_total > opt.benders_max_iter) break;
  }
  st.converged = st.converged && st.losses_consistent;
  return st;
}

DispatchSummary summarize(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                          std::vector<SubproblemResult> days) {
  DispatchSummary s;
  const double sb = net.base().s_base_mva;
  for (const auto& d : days) {
    const ScenarioSet& set = sets.at(d.day);
    s.uncovered_error_mwh += set.n_days * d.uncovered_error * sb;
    s.unserved_mwh += set.n_days * d.unserved_energy * sb;
    s.losses_mwh += set.n_days * d.losses_energy * sb;
    s.penalty_cost += net.costs.horizon_years * set.n_days * net.costs.penalty(set.day_type) *
                      d.uncovered_error * sb;
  }
  s.days = std::move(days);
  return s;
}

std::vector<SubproblemResult> evaluate_baseline(const RadialNetwork& net,
                                                const std::vector<ScenarioSet>& sets,
                                                const PlannerOptions& opt) {
  std::vector<SubproblemModel> models;
  ThetaTable theta;
  const std::vector<double> zero(net.candidates.size(), 0.0);
  for (const auto& set : sets) {
    theta.push_back(std::vector<std::vector<double>>(set.size(), std::vector<double>(set.steps(), kInf)));
    models.push_back(build_subproblem(net, set, theta.back(), zero, zero, {}, opt.model));
  }
  Allocation none;
  none.r = zero;
  none.c = zero;
  return evaluate_days(net, models, theta, none, opt);
}

PlanReport plan(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                const PlannerOptions& opt) {
  if (sets.empty()) throw PlanError(FailureKind::kValidation, "plan", "no day-types given");
  for (std::size_t d = 0; d < sets.size(); ++d) {
    try {
      sets[d].validate();
    } catch (const std::invalid_argument& e) {
      throw PlanError(FailureKind::kValidation, "plan", day_tag(static_cast<int>(d)) + ": " + e.what());
    }
  }
  PlanReport rep;
  rep.block1 = run_block1(net, sets, opt);
  if (opt.log) opt.log("block 1 done, objective " + std::to_string(rep.block1.objective));
  if (opt.block1_only) return rep;

  bool exact = true;
  if (!net.candidates.empty()) {
    rep.benders = run_benders(net, sets, rep.block1, opt);
    if (!rep.benders.losses_consistent) {
      rep.warnings.push_back("losses at the incumbent still moved after " + std::to_string(rep.benders.passes) +
                             " passes");
    } else if (!rep.benders.converged) {
      rep.warnings.push_back("benders stopped at the iteration cap with gap " +
                             std::to_string(rep.benders.gap));
    }
    rep.with_ess = summarize(net, sets, rep.benders.incumbent_days);
    rep.investment = rep.benders.incumbent_investment;
    for (const auto& d : rep.with_ess.days) {
      rep.operation += d.sc;
      exact = exact && d.exactness.pass;
      if (!d.converged) rep.warnings.push_back("losses realization did not settle on " + day_tag(d.day));
    }
  }
  if (opt.baseline || net.candidates.empty()) {
    rep.without_ess = summarize(net, sets, evaluate_baseline(net, sets, opt));
    rep.has_baseline = true;
    for (const auto& d : rep.without_ess.days) exact = exact && d.exactness.pass;
    if (net.candidates.empty()) {
      for (const auto& d : rep.without_ess.days) rep.operation += d.sc;
    }
  }
  rep.exactness_pass = exact;
  if (!exact) rep.warnings.push_back("exactness check failed");
  rep.total = rep.investment + rep.operation;
  return rep;
}

}  // namespace esplan
