#pragma once

// The two-block planning pipeline: lossless siting, then a Benders loop
// whose daily subproblems run the losses-realization fixed point.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "esplan/binaries.hpp"
#include "esplan/models.hpp"
#include "esplan/network.hpp"
#include "esplan/pf.hpp"
#include "esplan/scenarios.hpp"

namespace esplan {

enum class FailureKind { kValidation, kSolver, kExactness };

struct PlanError : std::runtime_error {
  PlanError(FailureKind kind, std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), kind(kind), stage(std::move(stage)) {}
  FailureKind kind;
  std::string stage;
};

struct PlannerOptions {
  double benders_gap = 1e-4;  // (UB - LB) / UB
  int benders_max_iter = 50;
  double losses_tol = 1e-5;   // pu, on max |zeta|
  int losses_max_iter = 20;
  // false: gamma is realized at the start of each Benders pass and frozen inside it
  bool realize_every_iteration = false;
  int losses_passes = 5;
  double cone_tol = 1e-6;     // relative cone slack
  double oracle_tol = 1e-6;   // pu
  double aux_floor = 1e-6;    // denominator floor of the fbar gap
  CutForm cut_form = CutForm::kSensitivity;
  BinaryMode binary_mode = BinaryMode::kEnumerate;
  bool parallel_days = true;
  bool baseline = true;       // also evaluate the no-storage dispatch
  bool block1_only = false;
  ModelOptions model;
  SolverOptions solver;       // Block 1 and master
  SolverOptions sub_solver = subproblem_solver_options();
  std::function<void(const std::string&)> log;  // progress lines, optional
};

struct Allocation {
  std::vector<int> bus;
  std::vector<int> u;
  std::vector<double> r, c;  // pu, pu*h
};

struct Block1Result {
  Allocation alloc;
  std::vector<std::vector<double>> dp;                // [d][t] dispatch plan, pu
  ThetaTable theta;                                   // [d][phi][t]
  std::vector<std::vector<std::vector<double>>> eps;  // [d][phi][t]
  double investment = 0.0, penalty = 0.0, objective = 0.0;  // $
  int continuous_solves = 0;
  double relative_gap = 0.0;  // of the final continuous solve
};

struct ExactnessReport {
  double max_cone_slack = 0.0;  // relative
  double max_v_gap = 0.0;       // (vbar - v) / v
  double max_f_gap = 0.0;       // (fbar - f) / max(f, floor)
  double max_oracle_dv = 0.0, max_oracle_df = 0.0, max_oracle_ds = 0.0;
  int worst_line = -1, worst_phi = -1, worst_t = -1;  // of the cone slack
  int checked = 0;
  bool pass = false;
};

/// Network state of one (scenario, step) as the optimizer left it. Per line
/// position: v, f, auxiliaries, sending-end flow and nodal injection (load convention).
struct FlowState {
  std::vector<double> v, f, vbar, fbar;
  std::vector<Complex> s_top, s_inj;
};

/// Reads the state at (phi, t) out of a solved subproblem.
FlowState extract_flow(const RadialNetwork& net, const SubproblemModel& sp, const SolveResult& sol,
                       int phi, int t);

/// Cone slack, auxiliary gaps and power-flow oracle residuals over states [phi][t].
ExactnessReport check_flows(const RadialNetwork& net, const std::vector<std::vector<FlowState>>& flows,
                            const PlannerOptions& opt = {});

ExactnessReport check_exactness(const RadialNetwork& net, const SubproblemModel& sp,
                                const SolveResult& sol, const PlannerOptions& opt = {});

struct SubproblemResult {
  int day = 0;
  double sc = 0.0;  // $ objective of the final solve
  double losses_cost = 0.0, unserved_cost = 0.0, aux_cost = 0.0;
  std::vector<double> mu, vartheta, r_star, c_star;
  std::vector<std::vector<double>> gamma;  // [phi][t]
  std::vector<double> zeta_trace;          // max |zeta| per solve
  int iterations = 0;
  bool converged = false;
  int solver_iterations = 0;
  double max_relative_gap = 0.0;
  // lambda-weighted energies over one day, pu*h
  double losses_energy = 0.0, unserved_energy = 0.0, uncovered_error = 0.0;
  double max_lder_violation = 0.0;  // |eps| - theta |sum dp|, pu
  double max_gamma_mismatch = 0.0;  // |gamma - sum r df|, pu
  ExactnessReport exactness;
  // traces [phi][t]; soe [k][phi][0..T]; pe, qe [k][phi][t]
  std::vector<double> dp_plan;  // [t]
  std::vector<std::vector<double>> eps, gcp_p, dp_total;
  std::vector<std::vector<std::vector<double>>> soe, pe, qe;
  std::vector<std::vector<FlowState>> flows;  // [phi][t]
};

/// Runs Algorithm 1 on an already built subproblem (allocation and gamma
/// as currently set) and extracts the cut data. Throws PlanError on solver failure.
SubproblemResult solve_subproblem_day(const RadialNetwork& net, SubproblemModel& sp,
                                      const std::vector<std::vector<double>>& theta, int day,
                                      const PlannerOptions& opt = {});

/// Convenience: builds the day model at (r, c) with zero gamma and solves it.
SubproblemResult solve_subproblem_day(const RadialNetwork& net, const ScenarioSet& set,
                                      const std::vector<std::vector<double>>& theta,
                                      const std::vector<double>& r, const std::vector<double>& c,
                                      int day, const PlannerOptions& opt = {});

Block1Result run_block1(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                        const PlannerOptions& opt = {});

struct BendersIteration {
  int n = 0;
  int pass = 0;                          // bounds reset at each pass
  double lb = 0.0, ub = 0.0, gap = 0.0;  // running bounds
  double master_objective = 0.0;         // -inf at iteration 0
  double candidate_cost = 0.0;           // investment + sum SC at this allocation
  Allocation alloc;
  std::vector<int> losses_iterations;    // per day
  std::vector<ExactnessReport> exactness;  // per day
  double max_relative_gap = 0.0;         // over the master and day solves
};

struct BendersState {
  std::vector<BendersIteration> trace;
  std::vector<BendersCut> cuts;
  double lb = 0.0, ub = kInf, gap = kInf;
  Allocation incumbent;
  double incumbent_investment = 0.0;
  std::vector<SubproblemResult> incumbent_days;
  int passes = 0;
  bool losses_consistent = false;  // incumbent's losses match the frozen gamma
  bool converged = false;
};

BendersState run_benders(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                         const Block1Result& block1, const PlannerOptions& opt = {});

/// Investment cost in $ of an allocation.
double allocation_cost(const std::vector<EssCandidate>& cands, const Allocation& a,
                       const CostParams& costs, const PerUnitBase& base);

struct DispatchSummary {
  // annual energies over all day-types, MWh
  double uncovered_error_mwh = 0.0, unserved_mwh = 0.0, losses_mwh = 0.0;
  double penalty_cost = 0.0;  // horizon $, w_d on the uncovered error
  std::vector<SubproblemResult> days;
};

struct PlanReport {
  Block1Result block1;
  BendersState benders;
  DispatchSummary with_ess, without_ess;
  bool has_baseline = false;
  bool exactness_pass = false;
  double investment = 0.0, operation = 0.0, total = 0.0;  // horizon $
  std::vector<std::string> warnings;
};

/// Summary over day results. Energies scale by days per year and the power base.
DispatchSummary summarize(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                          std::vector<SubproblemResult> days);

/// No-storage dispatch: every candidate at zero, LDER cap dropped.
std::vector<SubproblemResult> evaluate_baseline(const RadialNetwork& net,
                                                const std::vector<ScenarioSet>& sets,
                                                const PlannerOptions& opt = {});

PlanReport plan(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                const PlannerOptions& opt = {});

}  // namespace esplan
