#pragma once

// Builders for the planning programs: the lossless siting MILP, the daily
// augmented relaxed OPF subproblem and the Benders master. Every modeled
// symbol is reachable through a VarRegistry keyed by (symbol, l, phi, t, d);
// l is a bus id (line ids are their downstream bus), -1 where unused.
//
// Symbols
//   siting   U R C
//   storage  pE qE E            (l = candidate bus; E at t = 0..T, E(0) initial)
//   flows    Pt Qt Pb Qb v f    (v is the downstream bus of line l)
//   lower    Phat_t Qhat_t Phat_b Qhat_b vbar
//   upper    Pbar_t Qbar_t Pbar_b Qbar_b fbar
//   bounds   M1..M6             (max{|hat|,|bar|} stand-ins)
//   load     p q                (constants: scenario prosumption)
//            ulp+ ulp- ulq+ ulq- p' q'  (subproblem only)
//   errors   ptilde dp          (block 1 constants)
//            ptilde' dp' ftilde df (subproblem)
//            eps (l = -1, signed), eps+ eps- (block 1 split)
//            zeta DP
//   master   alpha              (d only)

#include <compare>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "esplan/binaries.hpp"
#include "esplan/conic.hpp"
#include "esplan/network.hpp"
#include "esplan/scenarios.hpp"

namespace esplan {

struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SymKey {
  std::string symbol;
  int l = -1, phi = -1, t = -1, d = -1;
  auto operator<=>(const SymKey&) const = default;
};

class VarRegistry {
 public:
  /// Throws ModelError on a duplicate key.
  void put(const SymKey& key, LinExpr expr);
  /// Throws ModelError naming the key when absent.
  const LinExpr& at(const SymKey& key) const;
  const LinExpr& at(const std::string& s, int l = -1, int phi = -1, int t = -1, int d = -1) const {
    return at(SymKey{s, l, phi, t, d});
  }
  bool has(const SymKey& key) const { return map_.count(key) > 0; }
  double value(const SolveResult& r, const std::string& s, int l = -1, int phi = -1, int t = -1,
               int d = -1) const {
    return r.value(at(s, l, phi, t, d));
  }
  std::size_t size() const { return map_.size(); }
  /// Distinct symbols, sorted.
  std::vector<std::string> symbols() const;
  const std::map<SymKey, LinExpr>& entries() const { return map_; }

 private:
  std::map<SymKey, LinExpr> map_;
};

struct ModelOptions {
  bool periodic_soe = false;         // E(T) = E(0)
  bool upper_flow_uses_fbar = true;  // loss term of the upper-bound flows: fbar, or f as printed
  double fbar_weight = 1e-4;         // small cost on fbar (x losses weight) so it sits on its bound
  double ess_floor = 1e-6;           // pu; fixed ratings below this are lifted to keep an interior
  double degenerate_dp = 1e-9;       // |sum dp| below this -> absolute error cap
  double degenerate_cap = 1e-9;
};

/// Shared investment block: U, R, C per candidate with rating/reservoir
/// windows and the C-rate link. Returns the siting atlas (zero-when-off R, C).
BinaryAtlas build_investment(ConicProgram& prog, VarRegistry& reg,
                             const std::vector<EssCandidate>& candidates);

/// Investment cost in $ of the registry's U, R, C.
LinExpr investment_cost(const VarRegistry& reg, const std::vector<EssCandidate>& candidates,
                        const CostParams& costs, const PerUnitBase& base);

/// One storage trajectory over T steps: capability square, SoE dynamics
/// (positive pE charges) and SoE window; E(0) = C (Emin + Emax) / 2.
/// Registers pE, qE at t = 0..T-1 and E at t = 0..T. Returns the VarIds created.
std::vector<VarId> build_ess_constraints(ConicProgram& prog, VarRegistry& reg,
                                         const EssCandidate& cand, const LinExpr& R,
                                         const LinExpr& C, int T, double dt, int phi, int d,
                                         const ModelOptions& opt = {});

/// Prosumption of scenario k mapped onto line positions (pu, load convention).
struct DayLoads {
  int day_type = 0;
  double n_days = 1.0;
  double dt = 1.0;
  int T = 0;
  std::vector<double> lambda;
  // [phi][t][line]
  std::vector<std::vector<std::vector<double>>> p, q;
  // [t][line]: lambda-weighted mean
  std::vector<std::vector<double>> p_mean;
  int num_scenarios() const { return static_cast<int>(lambda.size()); }
  /// sum_l (ptilde - p) for scenario phi at t
  double total_dp(int phi, int t) const;
};

/// Throws ModelError for unknown or slack buses.
DayLoads map_loads(const RadialNetwork& net, const ScenarioSet& set);

struct Block1Model {
  ConicProgram prog;
  VarRegistry reg;
  BinaryAtlas atlas;
  std::vector<DayLoads> days;
  double cost_scale = 1.0;  // program objective = $ * cost_scale
};

/// Lossless DistFlow MILP over all day-types. Pure LP apart from U.
Block1Model build_block1(const RadialNetwork& net, const std::vector<ScenarioSet>& sets,
                         const ModelOptions& opt = {});

/// theta[d][phi][t] = |sum eps*| / |sum dp|, 0 where |sum dp| < degenerate_dp.
using ThetaTable = std::vector<std::vector<std::vector<double>>>;
ThetaTable compute_lder(const Block1Model& model, const SolveResult& sol,
                        const ModelOptions& opt = {});

struct SubproblemModel {
  ConicProgram prog;
  VarRegistry reg;
  DayLoads loads;
  std::vector<RowId> fix_r, fix_c;  // per candidate, R = R*, C = C*
  // [phi][t]: rows whose right-hand side carries gamma
  std::vector<std::vector<RowId>> balance_rows, zeta_rows;
  std::vector<std::vector<double>> balance_base, zeta_base;
  std::vector<std::vector<double>> gamma;
  std::vector<double> r_star, c_star;  // as fixed (after the floor)
  double cost_scale = 1.0;

  /// Re-targets the fixing rows; values below the floor are lifted.
  void set_allocation(const std::vector<double>& r, const std::vector<double>& c,
                      const ModelOptions& opt = {});
  /// Throws ModelError on a shape mismatch.
  void set_gamma(const std::vector<std::vector<double>>& g);
};

/// Loss coefficients sit orders of magnitude below the unserved-load weight,
/// so the gap has to close well past the defaults for the cones to be tight.
inline SolverOptions subproblem_solver_options() {
  SolverOptions o;
  o.feastol = 1e-9;
  o.abstol = 1e-12;
  o.reltol = 1e-10;
  return o;
}

/// Daily AR-OPF with storage fixed to (R*, C*), LDER cap theta (use +inf to
/// drop the cap) and losses offset gamma (empty -> zeros).
SubproblemModel build_subproblem(const RadialNetwork& net, const ScenarioSet& set,
                                 const std::vector<std::vector<double>>& theta,
                                 const std::vector<double>& r_star,
                                 const std::vector<double>& c_star,
                                 const std::vector<std::vector<double>>& gamma = {},
                                 const ModelOptions& opt = {});

struct BendersCut {
  int day = 0;  // position in the day list
  double sc = 0.0;
  std::vector<double> mu, vartheta;  // multipliers of the fixing rows
  std::vector<double> r_star, c_star;
};

enum class CutForm {
  kSensitivity,  // alpha >= SC + sum dSC/dR (R - R*) + dSC/dC (C - C*)
  kLiteral       // alpha >= SC - sum (mu (R - R*) - vartheta (C - C*))
};

/// Value of a cut at an allocation.
double cut_value(const BendersCut& cut, const std::vector<double>& r, const std::vector<double>& c,
                 CutForm form = CutForm::kSensitivity);

struct MasterModel {
  ConicProgram prog;
  VarRegistry reg;
  BinaryAtlas atlas;
};

MasterModel build_master(const std::vector<EssCandidate>& candidates, const CostParams& costs,
                         const PerUnitBase& base, int num_days,
                         const std::vector<BendersCut>& cuts, double alpha_lower = 0.0,
                         CutForm form = CutForm::kSensitivity);

}  // namespace esplan
