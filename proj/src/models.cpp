#include "esplan/models.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace esplan {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

std::string key_text(const SymKey& k) {
  std::ostringstream os;
  os << k.symbol << "[l=" << k.l << ",phi=" << k.phi << ",t=" << k.t << ",d=" << k.d << "]";
  return os.str();
}

std::string vname(const char* s, int l, int phi, int t) {
  std::string n(s);
  n += '[';
  n += std::to_string(l);
  n += ',';
  n += std::to_string(phi);
  n += ',';
  n += std::to_string(t);
  n += ']';
  return n;
}

// $ per unit of pu power held for one step, for energy-priced terms.
double energy_factor(double years, double n_days, double dt, const PerUnitBase& base) {
  return years * n_days * dt * base.s_base_mva;
}

}  // namespace

void VarRegistry::put(const SymKey& key, LinExpr expr) {
  if (!map_.emplace(key, std::move(expr)).second) {
    throw ModelError("duplicate registry key " + key_text(key));
  }
}

const LinExpr& VarRegistry::at(const SymKey& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) throw ModelError("no registry entry " + key_text(key));
  return it->second;
}

std::vector<std::string> VarRegistry::symbols() const {
  std::set<std::string> s;
  for (const auto& [k, e] : map_) s.insert(k.symbol);
  return {s.begin(), s.end()};
}

BinaryAtlas build_investment(ConicProgram& prog, VarRegistry& reg,
                             const std::vector<EssCandidate>& candidates) {
  BinaryAtlas atlas;
  for (const auto& c : candidates) {
    const std::string b = std::to_string(c.bus);
    if (!(c.cr_min > 0.0)) throw ModelError("C-rate minimum must be positive at bus " + b);
    VarId u = prog.add_binary("U[" + b + "]");
    VarId r = prog.add_variable("R[" + b + "]", 0.0, c.r_max);
    VarId cap = prog.add_variable("C[" + b + "]", 0.0, c.c_max);
    prog.add_le(LinExpr(r) - c.r_max * LinExpr(u), 0.0, "rating_max[" + b + "]");
    prog.add_ge(LinExpr(r) - c.r_min * LinExpr(u), 0.0, "rating_min[" + b + "]");
    prog.add_le(LinExpr(cap) - c.c_max * LinExpr(u), 0.0, "reservoir_max[" + b + "]");
    prog.add_ge(LinExpr(cap) - c.c_min * LinExpr(u), 0.0, "reservoir_min[" + b + "]");
    prog.add_le(LinExpr(r) - (1.0 / c.cr_min) * LinExpr(cap), 0.0, "c_rate[" + b + "]");
    reg.put({"U", c.bus}, u);
    reg.put({"R", c.bus}, r);
    reg.put({"C", c.bus}, cap);
    atlas.add(u, c.bus, {r, cap});
  }
  return atlas;
}

LinExpr investment_cost(const VarRegistry& reg, const std::vector<EssCandidate>& candidates,
                        const CostParams& costs, const PerUnitBase& base) {
  // $/kVA and $/kWh against pu and pu*h
  const double kilo = base.s_base_mva * 1000.0;
  LinExpr e;
  for (const auto& c : candidates) {
    e += costs.i_c * reg.at("U", c.bus);
    e += costs.i_p * kilo * reg.at("R", c.bus);
    e += costs.i_e * kilo * reg.at("C", c.bus);
  }
  return e;
}

std::vector<VarId> build_ess_constraints(ConicProgram& prog, VarRegistry& reg,
                                         const EssCandidate& cand, const LinExpr& R,
                                         const LinExpr& C, int T, double dt, int phi, int d,
                                         const ModelOptions& opt) {
  if (!(cand.e_min_frac >= 0.0 && cand.e_min_frac <= cand.e_max_frac && cand.e_max_frac <= 1.0)) {
    throw ModelError("SoE window must satisfy 0 <= Emin <= Emax <= 1 at bus " +
                     std::to_string(cand.bus));
  }
  std::vector<VarId> made;
  const int l = cand.bus;
  const LinExpr half = kInvSqrt2 * R;
  LinExpr E = 0.5 * (cand.e_min_frac + cand.e_max_frac) * C;
  reg.put({"E", l, phi, 0, d}, E);
  const LinExpr E0 = E;
  for (int t = 0; t < T; ++t) {
    VarId p = prog.add_variable(vname("pE", l, phi, t));
    VarId q = prog.add_variable(vname("qE", l, phi, t));
    VarId e = prog.add_variable(vname("E", l, phi, t + 1));
    made.insert(made.end(), {p, q, e});
    prog.add_le(LinExpr(p) - half, 0.0);
    prog.add_ge(LinExpr(p) + half, 0.0);
    prog.add_le(LinExpr(q) - half, 0.0);
    prog.add_ge(LinExpr(q) + half, 0.0);
    prog.add_eq(LinExpr(e) - E - dt * LinExpr(p), 0.0, vname("soe", l, phi, t));
    prog.add_le(LinExpr(e) - cand.e_max_frac * C, 0.0);
    prog.add_ge(LinExpr(e) - cand.e_min_frac * C, 0.0);
    reg.put({"pE", l, phi, t, d}, p);
    reg.put({"qE", l, phi, t, d}, q);
    reg.put({"E", l, phi, t + 1, d}, e);
    E = e;
  }
  if (opt.periodic_soe) prog.add_eq(E - E0, 0.0, vname("periodic", l, phi, d));
  return made;
}

double DayLoads::total_dp(int phi, int t) const {
  double s = 0.0;
  for (std::size_t i = 0; i < p_mean[t].size(); ++i) s += p_mean[t][i] - p[phi][t][i];
  return s;
}

DayLoads map_loads(const RadialNetwork& net, const ScenarioSet& set) {
  set.validate();
  DayLoads out;
  out.day_type = set.day_type;
  out.n_days = set.n_days;
  out.dt = set.delta_t_h;
  out.T = set.steps();
  out.lambda = set.lambda;
  const int n = net.num_lines();
  std::vector<int> pos;
  for (int b : set.bus_ids) {
    if (!net.has_bus(b)) throw ModelError("scenario bus " + std::to_string(b) + " not in network");
    if (b == net.slack_bus()) throw ModelError("scenario carries prosumption at the slack bus");
    pos.push_back(net.line_index(b));
  }
  const int K = set.size();
  out.p.assign(K, std::vector<std::vector<double>>(out.T, std::vector<double>(n, 0.0)));
  out.q = out.p;
  out.p_mean.assign(out.T, std::vector<double>(n, 0.0));
  for (int k = 0; k < K; ++k) {
    const auto& s = set.scenarios[k];
    for (std::size_t b = 0; b < pos.size(); ++b) {
      for (int t = 0; t < out.T; ++t) {
        out.p[k][t][pos[b]] += s.p(static_cast<Eigen::Index>(b), t);
        out.q[k][t][pos[b]] += s.q(static_cast<Eigen::Index>(b), t);
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < out.T; ++t) {
      for (int i = 0; i < n; ++i) out.p_mean[t][i] += out.lambda[k] * out.p[k][t][i];
    }
  }
  return out;
}

namespace {

void check_candidates(const RadialNetwork& net) {
  std::set<int> seen;
  for (const auto& c : net.candidates) {
    if (!net.has_bus(c.bus) || c.bus == net.slack_bus()) {
      throw ModelError("candidate bus " + std::to_string(c.bus) + " is not a load bus");
    }
    if (!seen.insert(c.bus).second) throw ModelError("duplicate candidate bus");
  }
}

// candidate index per line position, -1 where none
std::vector<int> candidate_at(const RadialNetwork& net) {
  std::vector<int> at(net.num_lines(), -1);
  for (std::size_t k = 0; k < net.candidates.size(); ++k) {
    at[net.line_index(net.candidates[k].bus)] = static_cast<int>(k);
  }
  return at;
}

}  // namespace

Block1Model build_block1(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                         const ModelOptions& opt) {
  if (sets.empty()) throw ModelError("at least one day-type is required");
  check_candidates(net);
  Block1Model m;
  auto& prog = m.prog;
  auto& reg = m.reg;
  m.atlas = build_investment(prog, reg, net.candidates);
  LinExpr obj = investment_cost(reg, net.candidates, net.costs, net.base());
  const auto& lines = net.lines();
  const int n = net.num_lines();
  const auto cand_at = candidate_at(net);

  for (int d = 0; d < static_cast<int>(sets.size()); ++d) {
    if (sets[d].size() < 1) throw ModelError("day-type without scenarios");
    m.days.push_back(map_loads(net, sets[d]));
    const DayLoads& day = m.days.back();
    const double K = energy_factor(net.costs.horizon_years, day.n_days, day.dt, net.base()) *
                     net.costs.penalty(day.day_type);
    for (int t = 0; t < day.T; ++t) {
      double dp_total = 0.0;
      for (int i = 0; i < n; ++i) {
        reg.put({"ptilde", lines[i].id, -1, t, d}, day.p_mean[t][i]);
        dp_total += day.p_mean[t][i];
      }
      reg.put({"DP", -1, -1, t, d}, dp_total);
    }
    for (int phi = 0; phi < day.num_scenarios(); ++phi) {
      // storage trajectories for this scenario
      std::vector<std::vector<VarId>> ess_p(net.candidates.size()), ess_q(net.candidates.size());
      for (std::size_t k = 0; k < net.candidates.size(); ++k) {
        const auto& c = net.candidates[k];
        auto made = build_ess_constraints(prog, reg, c, reg.at("R", c.bus), reg.at("C", c.bus),
                                          day.T, day.dt, phi, d, opt);
        auto& off = m.atlas.entries[k].zero_when_off;
        off.insert(off.end(), made.begin(), made.end());
        for (int t = 0; t < day.T; ++t) {
          ess_p[k].push_back(made[3 * t]);
          ess_q[k].push_back(made[3 * t + 1]);
        }
      }
      for (int t = 0; t < day.T; ++t) {
        std::vector<VarId> P(n), Q(n), v(n);
        for (int i = 0; i < n; ++i) {
          const Bus& bus = net.bus(lines[i].id);
          P[i] = prog.add_variable(vname("P", lines[i].id, phi, t));
          Q[i] = prog.add_variable(vname("Q", lines[i].id, phi, t));
          v[i] = prog.add_variable(vname("v", lines[i].id, phi, t), bus.v_min, bus.v_max);
        }
        LinExpr ess_sum;
        double dp_sum = 0.0;
        for (int i = 0; i < n; ++i) {
          const Line& ln = lines[i];
          const int l = ln.id;
          const LinExpr vup = net.parent(i) < 0 ? LinExpr(net.slack_v()) : LinExpr(v[net.parent(i)]);
          LinExpr pe, qe;
          if (cand_at[i] >= 0) {
            pe = ess_p[cand_at[i]][t];
            qe = ess_q[cand_at[i]][t];
            ess_sum += pe;
          }
          LinExpr pbal = LinExpr(P[i]) - pe;
          LinExpr qbal = LinExpr(Q[i]) - qe + ln.b * (vup + LinExpr(v[i]));
          for (int c : net.children(i)) {
            pbal -= P[c];
            qbal -= Q[c];
          }
          prog.add_eq(pbal, day.p[phi][t][i], vname("pbal", l, phi, t));
          prog.add_eq(qbal, day.q[phi][t][i], vname("qbal", l, phi, t));
          // v = v_up - 2 (r P + x (Q + v_up b))
          prog.add_eq(LinExpr(v[i]) - (1.0 - 2.0 * ln.x * ln.b) * vup + 2.0 * ln.r * LinExpr(P[i]) +
                          2.0 * ln.x * LinExpr(Q[i]),
                      0.0, vname("vdrop", l, phi, t));
          reg.put({"Pt", l, phi, t, d}, P[i]);
          reg.put({"Pb", l, phi, t, d}, P[i]);
          reg.put({"Qt", l, phi, t, d}, Q[i]);
          reg.put({"Qb", l, phi, t, d}, LinExpr(Q[i]) + ln.b * (vup + LinExpr(v[i])));
          reg.put({"v", l, phi, t, d}, v[i]);
          reg.put({"p", l, phi, t, d}, day.p[phi][t][i]);
          reg.put({"q", l, phi, t, d}, day.q[phi][t][i]);
          const double dp = day.p_mean[t][i] - day.p[phi][t][i];
          reg.put({"dp", l, phi, t, d}, dp);
          dp_sum += dp;
        }
        VarId ep = prog.add_variable(vname("eps+", -1, phi, t), 0.0);
        VarId em = prog.add_variable(vname("eps-", -1, phi, t), 0.0);
        // sum dp = eps + sum pE
        prog.add_eq(LinExpr(ep) - LinExpr(em) + ess_sum, dp_sum, vname("error", -1, phi, t));
        reg.put({"eps+", -1, phi, t, d}, ep);
        reg.put({"eps-", -1, phi, t, d}, em);
        reg.put({"eps", -1, phi, t, d}, LinExpr(ep) - LinExpr(em));
        obj += (K * day.lambda[phi]) * (LinExpr(ep) + LinExpr(em));
      }
    }
  }
  obj *= m.cost_scale;
  prog.set_objective(obj);
  return m;
}

ThetaTable compute_lder(const Block1Model& model, const SolveResult& sol, const ModelOptions& opt) {
  ThetaTable theta(model.days.size());
  for (std::size_t d = 0; d < model.days.size(); ++d) {
    const auto& day = model.days[d];
    theta[d].assign(day.num_scenarios(), std::vector<double>(day.T, 0.0));
    for (int phi = 0; phi < day.num_scenarios(); ++phi) {
      for (int t = 0; t < day.T; ++t) {
        const double den = std::abs(day.total_dp(phi, t));
        if (den < opt.degenerate_dp) continue;
        const double num =
            std::abs(model.reg.value(sol, "eps", -1, phi, t, static_cast<int>(d)));
        theta[d][phi][t] = num / den;
      }
    }
  }
  return theta;
}

// ---- subproblem

void SubproblemModel::set_allocation(const std::vector<double>& r, const std::vector<double>& c,
                                     const ModelOptions& opt) {
  if (r.size() != fix_r.size() || c.size() != fix_c.size()) {
    throw ModelError("allocation size does not match the candidate list");
  }
  r_star.resize(r.size());
  c_star.resize(c.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r_star[k] = std::max(r[k], opt.ess_floor);
    c_star[k] = std::max(c[k], opt.ess_floor);
    prog.set_rhs(fix_r[k], r_star[k]);
    prog.set_rhs(fix_c[k], c_star[k]);
  }
}

void SubproblemModel::set_gamma(const std::vector<std::vector<double>>& g) {
  if (g.size() != balance_rows.size()) throw ModelError("gamma has the wrong number of scenarios");
  for (std::size_t phi = 0; phi < g.size(); ++phi) {
    if (g[phi].size() != balance_rows[phi].size()) throw ModelError("gamma has the wrong horizon");
    for (std::size_t t = 0; t < g[phi].size(); ++t) {
      prog.set_rhs(balance_rows[phi][t], balance_base[phi][t] - g[phi][t]);
      prog.set_rhs(zeta_rows[phi][t], zeta_base[phi][t] - g[phi][t]);
    }
  }
  gamma = g;
}

SubproblemModel build_subproblem(const RadialNetwork& net, const ScenarioSet& set,
                                 const std::vector<std::vector<double>>& theta,
                                 const std::vector<double>& r_star,
                                 const std::vector<double>& c_star,
                                 const std::vector<std::vector<double>>& gamma,
                                 const ModelOptions& opt) {
  check_candidates(net);
  SubproblemModel m;
  m.loads = map_loads(net, set);
  const DayLoads& day = m.loads;
  const int K = day.num_scenarios();
  const int T = day.T;
  if (static_cast<int>(theta.size()) != K) throw ModelError("missing LDER entries for a scenario");
  for (const auto& row : theta) {
    if (static_cast<int>(row.size()) != T) throw ModelError("missing LDER entries for a time step");
    for (double th : row) {
      if (!(th >= 0.0)) throw ModelError("LDER must be nonnegative");
    }
  }
  if (!gamma.empty()) {
    if (static_cast<int>(gamma.size()) != K) throw ModelError("gamma has the wrong number of scenarios");
    for (const auto& g : gamma) {
      if (static_cast<int>(g.size()) != T) throw ModelError("gamma has the wrong horizon");
    }
  }
  auto& prog = m.prog;
  auto& reg = m.reg;
  const auto& lines = net.lines();
  const int n = net.num_lines();
  const auto cand_at = candidate_at(net);
  const std::size_t nc = net.candidates.size();
  const CostParams& cost = net.costs;
  if (cost.w_u < 0.0 || cost.w_l < 0.0) throw ModelError("cost weights must be nonnegative");

  std::vector<VarId> R(nc), C(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    const int b = net.candidates[k].bus;
    R[k] = prog.add_variable("R[" + std::to_string(b) + "]");
    C[k] = prog.add_variable("C[" + std::to_string(b) + "]");
    m.fix_r.push_back(prog.add_eq(R[k], 0.0, "fix_R[" + std::to_string(b) + "]"));
    m.fix_c.push_back(prog.add_eq(C[k], 0.0, "fix_C[" + std::to_string(b) + "]"));
    reg.put({"R", b}, R[k]);
    reg.put({"C", b}, C[k]);
  }
  m.set_allocation(r_star, c_star, opt);

  const double Kf = energy_factor(cost.horizon_years, day.n_days, day.dt, net.base());
  LinExpr obj;

  // per (l, t) averages
  std::vector<std::vector<VarId>> ptil(T, std::vector<VarId>(n)), ftil(T, std::vector<VarId>(n));
  std::vector<LinExpr> ptil_avg(T * n), ftil_avg(T * n);
  for (int t = 0; t < T; ++t) {
    LinExpr dp_plan;
    for (int i = 0; i < n; ++i) {
      ptil[t][i] = prog.add_variable(vname("ptilde'", lines[i].id, -1, t));
      ftil[t][i] = prog.add_variable(vname("ftilde", lines[i].id, -1, t));
      ptil_avg[t * n + i] = LinExpr(ptil[t][i]);
      ftil_avg[t * n + i] = LinExpr(ftil[t][i]);
      reg.put({"ptilde'", lines[i].id, -1, t}, ptil[t][i]);
      reg.put({"ftilde", lines[i].id, -1, t}, ftil[t][i]);
      dp_plan += LinExpr(ptil[t][i]) + lines[i].r * LinExpr(ftil[t][i]);
    }
    reg.put({"DP", -1, -1, t}, dp_plan);
  }

  m.balance_rows.assign(K, std::vector<RowId>(T));
  m.zeta_rows = m.balance_rows;
  m.balance_base.assign(K, std::vector<double>(T, 0.0));
  m.zeta_base = m.balance_base;

  for (int phi = 0; phi < K; ++phi) {
    const double lam = day.lambda[phi];
    std::vector<std::vector<VarId>> ess_p(nc), ess_q(nc);
    for (std::size_t k = 0; k < nc; ++k) {
      auto made = build_ess_constraints(prog, reg, net.candidates[k], R[k], C[k], T, day.dt, phi,
                                        -1, opt);
      for (int t = 0; t < T; ++t) {
        ess_p[k].push_back(made[3 * t]);
        ess_q[k].push_back(made[3 * t + 1]);
      }
    }
    for (int t = 0; t < T; ++t) {
      struct Slot {
        VarId P, Q, v, f, Ph, Qh, vb, Pb, Qb, fb, ulpp, ulpm, ulqp, ulqm;
      };
      std::vector<Slot> s(n);
      for (int i = 0; i < n; ++i) {
        const int l = lines[i].id;
        const Bus& bus = net.bus(l);
        const Line& ln = lines[i];
        s[i].P = prog.add_variable(vname("Pt", l, phi, t));
        s[i].Q = prog.add_variable(vname("Qt", l, phi, t));
        s[i].v = prog.add_variable(vname("v", l, phi, t), bus.v_min, bus.v_max);
        s[i].f = prog.add_variable(vname("f", l, phi, t), 0.0);
        s[i].Ph = prog.add_variable(vname("Phat_t", l, phi, t));
        s[i].Qh = prog.add_variable(vname("Qhat_t", l, phi, t));
        s[i].vb = prog.add_variable(vname("vbar", l, phi, t), bus.v_min, bus.v_max);
        s[i].Pb = prog.add_variable(vname("Pbar_t", l, phi, t), -kInf, ln.p_max);
        s[i].Qb = prog.add_variable(vname("Qbar_t", l, phi, t), -kInf, ln.q_max);
        s[i].fb = prog.add_variable(vname("fbar", l, phi, t), 0.0);
        s[i].ulpp = prog.add_variable(vname("ulp+", l, phi, t), 0.0);
        s[i].ulpm = prog.add_variable(vname("ulp-", l, phi, t), 0.0);
        s[i].ulqp = prog.add_variable(vname("ulq+", l, phi, t), 0.0);
        s[i].ulqm = prog.add_variable(vname("ulq-", l, phi, t), 0.0);
      }
      LinExpr ess_sum, ul_sum, dpp_sum, zeta_loss;
      double p_sum = 0.0, dp_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const Line& ln = lines[i];
        const int l = ln.id;
        const Slot& x = s[i];
        const int par = net.parent(i);
        const LinExpr vup = par < 0 ? LinExpr(net.slack_v()) : LinExpr(s[par].v);
        const LinExpr vbup = par < 0 ? LinExpr(net.slack_v()) : LinExpr(s[par].vb);
        LinExpr pe, qe;
        if (cand_at[i] >= 0) {
          pe = ess_p[cand_at[i]][t];
          qe = ess_q[cand_at[i]][t];
          ess_sum += pe;
        }
        const double p0 = day.p[phi][t][i], q0 = day.q[phi][t][i];
        const LinExpr ulp = LinExpr(x.ulpp) - LinExpr(x.ulpm);
        const LinExpr ulq = LinExpr(x.ulqp) - LinExpr(x.ulqm);
        // injections without their constants: p' + pE = p0 + ulp + pE
        const LinExpr inj_p = ulp + pe;
        const LinExpr inj_q = ulq + qe;
        const VarId floss = opt.upper_flow_uses_fbar ? x.fb : x.f;

        LinExpr P = LinExpr(x.P) - inj_p - ln.r * LinExpr(x.f);
        LinExpr Q = LinExpr(x.Q) - inj_q - ln.x * LinExpr(x.f) + ln.b * (vup + LinExpr(x.v));
        LinExpr Ph = LinExpr(x.Ph) - inj_p;
        LinExpr Qh = LinExpr(x.Qh) - inj_q + ln.b * (vbup + LinExpr(x.vb));
        LinExpr Pb = LinExpr(x.Pb) - inj_p - ln.r * LinExpr(floss);
        LinExpr Qb = LinExpr(x.Qb) - inj_q - ln.x * LinExpr(floss) + ln.b * (vup + LinExpr(x.v));
        for (int c : net.children(i)) {
          P -= s[c].P;
          Q -= s[c].Q;
          Ph -= s[c].Ph;
          Qh -= s[c].Qh;
          Pb -= s[c].Pb;
          Qb -= s[c].Qb;
        }
        prog.add_eq(P, p0, vname("pbal", l, phi, t));
        prog.add_eq(Q, q0, vname("qbal", l, phi, t));
        prog.add_eq(Ph, p0, vname("pbal_hat", l, phi, t));
        prog.add_eq(Qh, q0, vname("qbal_hat", l, phi, t));
        prog.add_eq(Pb, p0, vname("pbal_bar", l, phi, t));
        prog.add_eq(Qb, q0, vname("qbal_bar", l, phi, t));

        const double z2 = ln.r * ln.r + ln.x * ln.x;
        // v = v_up - 2 (r P + x (Q + v_up b)) + |z|^2 f
        prog.add_eq(LinExpr(x.v) - (1.0 - 2.0 * ln.x * ln.b) * vup + 2.0 * ln.r * LinExpr(x.P) +
                        2.0 * ln.x * LinExpr(x.Q) - z2 * LinExpr(x.f),
                    0.0, vname("vdrop", l, phi, t));
        prog.add_eq(LinExpr(x.vb) - (1.0 - 2.0 * ln.x * ln.b) * vbup + 2.0 * ln.r * LinExpr(x.Ph) +
                        2.0 * ln.x * LinExpr(x.Qh),
                    0.0, vname("vdrop_bar", l, phi, t));
        prog.add_rotated_cone({LinExpr(x.P), LinExpr(x.Q) + ln.b * vup}, x.f, vup,
                              vname("current", l, phi, t));

        // receiving-end and sending-end expressions
        const LinExpr Pb_hat = x.Ph;
        const LinExpr Qb_hat = LinExpr(x.Qh) + ln.b * (vbup + LinExpr(x.vb));
        const LinExpr Pb_bar = LinExpr(x.Pb) - ln.r * LinExpr(floss);
        const LinExpr Qb_bar = LinExpr(x.Qb) - ln.x * LinExpr(floss) + ln.b * (vup + LinExpr(x.v));
        const LinExpr Pb_st = LinExpr(x.P) - ln.r * LinExpr(x.f);
        const LinExpr Qb_st = LinExpr(x.Q) - ln.x * LinExpr(x.f) + ln.b * (vup + LinExpr(x.v));

        auto dominate = [&](const char* name, std::initializer_list<LinExpr> parts) {
          VarId M = prog.add_variable(vname(name, l, phi, t), 0.0);
          for (const auto& e : parts) {
            prog.add_ge(LinExpr(M) - e, 0.0);
            prog.add_ge(LinExpr(M) + e, 0.0);
          }
          reg.put({name, l, phi, t}, M);
          return M;
        };
        const VarId M1 = dominate("M1", {Pb_hat, Pb_bar});
        const VarId M2 = dominate("M2", {Qb_hat - ln.b * LinExpr(x.vb), Qb_bar - ln.b * LinExpr(x.v)});
        const VarId M3 = dominate("M3", {LinExpr(x.Ph), LinExpr(x.Pb)});
        const VarId M4 = dominate("M4", {LinExpr(x.Qh) + ln.b * vbup, LinExpr(x.Qb) + ln.b * vup});
        prog.add_rotated_cone({LinExpr(M1), LinExpr(M2)}, x.fb, x.v, vname("upper_down", l, phi, t));
        prog.add_rotated_cone({LinExpr(M3), LinExpr(M4)}, x.fb, vup, vname("upper_up", l, phi, t));
        if (std::isfinite(ln.i_max)) {
          const VarId M5 = dominate("M5", {LinExpr(x.Qh), LinExpr(x.Qb)});
          const VarId M6 = dominate("M6", {Qb_hat, Qb_bar});
          prog.add_rotated_cone({LinExpr(M3), LinExpr(M5)}, ln.i_max * vup, 1.0,
                                vname("ampacity_up", l, phi, t));
          prog.add_rotated_cone({LinExpr(M1), LinExpr(M6)}, ln.i_max * LinExpr(x.v), 1.0,
                                vname("ampacity_down", l, phi, t));
        }

        reg.put({"Pt", l, phi, t}, x.P);
        reg.put({"Qt", l, phi, t}, x.Q);
        reg.put({"Pb", l, phi, t}, Pb_st);
        reg.put({"Qb", l, phi, t}, Qb_st);
        reg.put({"v", l, phi, t}, x.v);
        reg.put({"f", l, phi, t}, x.f);
        reg.put({"Phat_t", l, phi, t}, x.Ph);
        reg.put({"Qhat_t", l, phi, t}, x.Qh);
        reg.put({"Phat_b", l, phi, t}, Pb_hat);
        reg.put({"Qhat_b", l, phi, t}, Qb_hat);
        reg.put({"vbar", l, phi, t}, x.vb);
        reg.put({"Pbar_t", l, phi, t}, x.Pb);
        reg.put({"Qbar_t", l, phi, t}, x.Qb);
        reg.put({"Pbar_b", l, phi, t}, Pb_bar);
        reg.put({"Qbar_b", l, phi, t}, Qb_bar);
        reg.put({"fbar", l, phi, t}, x.fb);
        reg.put({"ulp+", l, phi, t}, x.ulpp);
        reg.put({"ulp-", l, phi, t}, x.ulpm);
        reg.put({"ulq+", l, phi, t}, x.ulqp);
        reg.put({"ulq-", l, phi, t}, x.ulqm);
        reg.put({"p", l, phi, t}, p0);
        reg.put({"q", l, phi, t}, q0);
        reg.put({"p'", l, phi, t}, ulp + p0);
        reg.put({"q'", l, phi, t}, ulq + q0);
        reg.put({"dp'", l, phi, t}, LinExpr(ptil[t][i]) - ulp - p0);
        reg.put({"df", l, phi, t}, LinExpr(ftil[t][i]) - LinExpr(x.f));

        ptil_avg[t * n + i] -= lam * ulp;
        ftil_avg[t * n + i] -= lam * LinExpr(x.f);
        ul_sum += LinExpr(x.ulpp) + LinExpr(x.ulpm) + LinExpr(x.ulqp) + LinExpr(x.ulqm);
        dpp_sum += LinExpr(ptil[t][i]) - ulp;
        zeta_loss += ln.r * (LinExpr(ftil[t][i]) - LinExpr(x.f));
        p_sum += p0;
        dp_sum += day.p_mean[t][i] - p0;
        obj += (Kf * lam * cost.w_l * ln.r) * LinExpr(x.f);
        obj += (Kf * lam * cost.w_l * opt.fbar_weight) * LinExpr(x.fb);
      }
      obj += (Kf * lam * cost.w_u) * ul_sum;

      // LDER cap |eps| <= theta |sum dp|
      double cap = theta[phi][t] * std::abs(dp_sum);
      if (std::abs(dp_sum) < opt.degenerate_dp) cap = std::min(cap, opt.degenerate_cap);
      if (std::isinf(theta[phi][t])) cap = kInf;
      VarId eps = prog.add_variable(vname("eps", -1, phi, t), -cap, cap);
      VarId zeta = prog.add_variable(vname("zeta", -1, phi, t));
      reg.put({"eps", -1, phi, t}, eps);
      reg.put({"zeta", -1, phi, t}, zeta);
      // sum dp' + gamma = eps + sum pE
      m.balance_base[phi][t] = p_sum;
      m.balance_rows[phi][t] =
          prog.add_eq(dpp_sum - LinExpr(eps) - ess_sum, p_sum, vname("error", -1, phi, t));
      // zeta = sum r df - gamma
      m.zeta_rows[phi][t] = prog.add_eq(LinExpr(zeta) - zeta_loss, 0.0, vname("zeta", -1, phi, t));
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      prog.add_eq(ptil_avg[t * n + i], day.p_mean[t][i], vname("avg_p", lines[i].id, -1, t));
      prog.add_eq(ftil_avg[t * n + i], 0.0, vname("avg_f", lines[i].id, -1, t));
    }
  }
  m.set_gamma(gamma.empty() ? std::vector<std::vector<double>>(K, std::vector<double>(T, 0.0))
                            : gamma);
  obj *= m.cost_scale;
  prog.set_objective(obj);
  return m;
}

// ---- master

double cut_value(const BendersCut& cut, const std::vector<double>& r, const std::vector<double>& c,
                 CutForm form) {
  double v = cut.sc;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double dr = r[k] - cut.r_star[k], dc = c[k] - cut.c_star[k];
    if (form == CutForm::kSensitivity) {
      // equality-row sensitivity is -multiplier
      v += -cut.mu[k] * dr - cut.vartheta[k] * dc;
    } else {
      v -= cut.mu[k] * dr - cut.vartheta[k] * dc;
    }
  }
  return v;
}

MasterModel build_master(const std::vector<EssCandidate>& candidates, const CostParams& costs,
                         const PerUnitBase& base, int num_days,
                         const std::vector<BendersCut>& cuts, double alpha_lower, CutForm form) {
  if (!std::isfinite(alpha_lower)) throw ModelError("alpha lower bound must be finite");
  if (num_days < 1) throw ModelError("master needs at least one day-type");
  MasterModel m;
  m.atlas = build_investment(m.prog, m.reg, candidates);
  LinExpr obj = investment_cost(m.reg, candidates, costs, base);
  std::vector<VarId> alpha;
  for (int d = 0; d < num_days; ++d) {
    alpha.push_back(m.prog.add_variable("alpha[" + std::to_string(d) + "]", alpha_lower));
    m.reg.put({"alpha", -1, -1, -1, d}, alpha.back());
    obj += alpha.back();
  }
  const std::size_t nc = candidates.size();
  for (std::size_t n = 0; n < cuts.size(); ++n) {
    const auto& cut = cuts[n];
    if (cut.day < 0 || cut.day >= num_days) throw ModelError("cut references an unknown day-type");
    if (cut.mu.size() != nc || cut.vartheta.size() != nc || cut.r_star.size() != nc ||
        cut.c_star.size() != nc) {
      throw ModelError("cut references an unknown candidate");
    }
    // alpha - sum g_R R - g_C C >= SC - sum g_R R* - g_C C*
    LinExpr e = alpha[cut.day];
    double rhs = cut.sc;
    for (std::size_t k = 0; k < nc; ++k) {
      const double gr = -cut.mu[k];  // same in both forms
      const double gc = form == CutForm::kSensitivity ? -cut.vartheta[k] : cut.vartheta[k];
      e -= gr * m.reg.at("R", candidates[k].bus);
      e -= gc * m.reg.at("C", candidates[k].bus);
      rhs -= gr * cut.r_star[k] + gc * cut.c_star[k];
    }
    m.prog.add_ge(e, rhs, "cut[" + std::to_string(n) + "]");
  }
  m.prog.set_objective(obj);
  return m;
}

}  // namespace esplan
