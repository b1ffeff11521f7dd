#pragma once

// Exact AC power flow for radial feeders on the pi model, by backward /
// forward sweep. Everything is indexed by line position (the downstream
// bus of line i is "bus i"); injections use the load convention, so a
// positive s consumes power.

#include <complex>
#include <stdexcept>
#include <vector>

#include "esplan/network.hpp"

namespace esplan {

using Complex = std::complex<double>;

struct PfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PfSolution {
  std::vector<double> v;       // squared magnitude at the downstream bus
  std::vector<double> f;       // squared longitudinal current
  std::vector<Complex> s_top;  // injected into the line at the upstream end
  std::vector<Complex> s_bot;  // delivered into the downstream bus
  Complex s_slack;             // total injection at the slack bus
  bool converged = false;
  int iterations = 0;

  /// Squared voltage at the upstream bus of line i.
  double v_up(const RadialNetwork& net, int i) const {
    return net.parent(i) < 0 ? net.slack_v() : v[net.parent(i)];
  }
};

/// Throws PfError when the sweep fails to settle within max_iter.
PfSolution solve_pf(const RadialNetwork& net, const std::vector<Complex>& s, double tol = 1e-10,
                    int max_iter = 500);

/// State claimed by an optimizer for one scenario and time step.
struct OpfPoint {
  std::vector<double> v, f;
  std::vector<Complex> s_top;
};

struct OracleReport {
  double max_dv = 0.0;
  double max_df = 0.0;
  double max_ds = 0.0;
  int worst_v_line = -1;  // line ids, -1 when the residual is zero
  int worst_f_line = -1;
  int worst_s_line = -1;
  bool pass = false;
};

/// Re-solves the flow for the injections and compares.
OracleReport verify_against_oracle(const RadialNetwork& net, const OpfPoint& point,
                                   const std::vector<Complex>& s, double tol = 1e-6);

}  // namespace esplan
