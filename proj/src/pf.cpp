#include "esplan/pf.hpp"

#include <cmath>
#include <string>

namespace esplan {

PfSolution solve_pf(const RadialNetwork& net, const std::vector<Complex>& s, double tol,
                    int max_iter) {
  const int n = net.num_lines();
  if (static_cast<int>(s.size()) != n) throw std::invalid_argument("injection size mismatch");
  const Complex j(0.0, 1.0);
  PfSolution sol;
  sol.v.assign(n, net.slack_v());  // flat start
  sol.f.assign(n, 0.0);
  sol.s_top.assign(n, 0.0);
  sol.s_bot.assign(n, 0.0);
  const auto& lines = net.lines();

  for (int it = 1; it <= max_iter; ++it) {
    // backward: children first
    for (int i = n - 1; i >= 0; --i) {
      const Line& l = lines[i];
      Complex sb = s[i];
      for (int c : net.children(i)) sb += sol.s_top[c];
      const double vi = sol.v[i];
      const double vu = sol.v_up(net, i);
      sol.s_bot[i] = sb;
      sol.f[i] = std::norm(sb - j * vi * l.b) / vi;
      sol.s_top[i] = sb + Complex(l.r, l.x) * sol.f[i] - j * (vu + vi) * l.b;
    }
    // forward: parents first
    double dv = 0.0;
    for (int i = 0; i < n; ++i) {
      const Line& l = lines[i];
      const double vu = sol.v_up(net, i);
      const Complex z(l.r, l.x);
      const double vn =
          vu - 2.0 * (std::conj(z) * (sol.s_top[i] + j * vu * l.b)).real() + std::norm(z) * sol.f[i];
      if (!(vn > 0.0)) throw PfError("voltage collapse at line " + std::to_string(l.id));
      dv = std::max(dv, std::abs(vn - sol.v[i]));
      sol.v[i] = vn;
    }
    sol.iterations = it;
    if (dv < tol) {
      sol.converged = true;
      break;
    }
  }
  if (!sol.converged) {
    throw PfError("power flow did not converge in " + std::to_string(max_iter) + " sweeps");
  }
  // settle the flows on the final voltages
  for (int i = n - 1; i >= 0; --i) {
    const Line& l = lines[i];
    Complex sb = s[i];
    for (int c : net.children(i)) sb += sol.s_top[c];
    const double vi = sol.v[i];
    const double vu = sol.v_up(net, i);
    sol.s_bot[i] = sb;
    sol.f[i] = std::norm(sb - j * vi * l.b) / vi;
    sol.s_top[i] = sb + Complex(l.r, l.x) * sol.f[i] - j * (vu + vi) * l.b;
  }
  sol.s_slack = 0.0;
  for (int i = 0; i < n; ++i) {
    if (net.parent(i) < 0) sol.s_slack += sol.s_top[i];
  }
  return sol;
}

OracleReport verify_against_oracle(const RadialNetwork& net, const OpfPoint& point,
                                   const std::vector<Complex>& s, double tol) {
  const PfSolution pf = solve_pf(net, s);
  OracleReport rep;
  const int n = net.num_lines();
  if (static_cast<int>(point.v.size()) != n || static_cast<int>(point.f.size()) != n ||
      static_cast<int>(point.s_top.size()) != n) {
    throw std::invalid_argument("OPF point size mismatch");
  }
  for (int i = 0; i < n; ++i) {
    const int id = net.lines()[i].id;
    const double dv = std::abs(point.v[i] - pf.v[i]);
    const double df = std::abs(point.f[i] - pf.f[i]);
    const double ds = std::abs(point.s_top[i] - pf.s_top[i]);
    if (dv > rep.max_dv) {
      rep.max_dv = dv;
      rep.worst_v_line = id;
    }
    if (df > rep.max_df) {
      rep.max_df = df;
      rep.worst_f_line = id;
    }
    if (ds > rep.max_ds) {
      rep.max_ds = ds;
      rep.worst_s_line = id;
    }
  }
  rep.pass = rep.max_dv <= tol && rep.max_df <= tol && rep.max_ds <= tol;
  return rep;
}

}  // namespace esplan
