#pragma once

// Abstract linear + rotated second-order cone programs and the continuous
// interior-point backend that solves them.
//
// Dual sign convention (used everywhere, including Benders cuts): every
// constraint is read as g(x) <= 0 (or g(x) = 0) and the reported multiplier
// lambda satisfies  grad f + sum lambda_i grad g_i = 0  at the optimum, with
// lambda >= 0 for inequalities.
//   expr <= rhs   ->  g = expr - rhs
//   expr >= rhs   ->  g = rhs - expr
//   expr == rhs   ->  g = expr - rhs
// so d(optimal value)/d(rhs) = -lambda for <= and ==, and +lambda for >=.
// ConicProgram::rhs_sensitivity() applies this once.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace esplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarId {
  int index = -1;
  friend bool operator==(VarId a, VarId b) { return a.index == b.index; }
};

struct RowId {
  int index = -1;
};

struct ConeId {
  int index = -1;
};

/// Affine expression sum_i a_i x_i + constant.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(implicit)
  LinExpr(VarId v) { terms_.emplace_back(v.index, 1.0); }  // NOLINT(implicit)
  LinExpr(VarId v, double coef) { terms_.emplace_back(v.index, coef); }

  LinExpr& add(VarId v, double coef) {
    if (coef != 0.0) terms_.emplace_back(v.index, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);

  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  double constant() const { return constant_; }

  /// Merges duplicate variable entries and drops zeros.
  void compact();

  double evaluate(const std::vector<double>& x) const;

 private:
  std::vector<std::pair<int, double>> terms_;
  double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

enum class Sense { kLe, kGe, kEq };

struct LinearConstraint {
  LinExpr expr;  // constant already folded into rhs
  Sense sense = Sense::kEq;
  double rhs = 0.0;
  std::string name;
};

/// ||u||^2 <= w * t with w, t >= 0.
struct RotatedCone {
  std::vector<LinExpr> u;
  LinExpr w;
  LinExpr t;
  std::string name;
};

struct Variable {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  bool binary = false;
};

class ConicProgram {
 public:
  VarId add_variable(std::string name, double lb = -kInf, double ub = kInf);
  VarId add_binary(std::string name);

  RowId add_linear(LinExpr expr, Sense sense, double rhs, std::string name = {});
  RowId add_le(LinExpr expr, double rhs, std::string name = {}) {
    return add_linear(std::move(expr), Sense::kLe, rhs, std::move(name));
  }
  RowId add_ge(LinExpr expr, double rhs, std::string name = {}) {
    return add_linear(std::move(expr), Sense::kGe, rhs, std::move(name));
  }
  RowId add_eq(LinExpr expr, double rhs, std::string name = {}) {
    return add_linear(std::move(expr), Sense::kEq, rhs, std::move(name));
  }
  ConeId add_rotated_cone(std::vector<LinExpr> u, LinExpr w, LinExpr t,
                          std::string name = {});

  void set_objective(LinExpr obj);
  void add_to_objective(const LinExpr& obj);

  void set_bounds(VarId v, double lb, double ub);
  void fix(VarId v, double value) { set_bounds(v, value, value); }
  /// Turns a binary into a continuous variable on its current bounds (relaxations).
  void relax_binary(VarId v) { vars_.at(v.index).binary = false; }
  void set_rhs(RowId r, double rhs) { rows_.at(r.index).rhs = rhs; }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_cones() const { return static_cast<int>(cones_.size()); }

  const std::vector<Variable>& variables() const { return vars_; }
  const Variable& variable(VarId v) const { return vars_.at(v.index); }
  const std::vector<LinearConstraint>& rows() const { return rows_; }
  const LinearConstraint& row(RowId r) const { return rows_.at(r.index); }
  const std::vector<RotatedCone>& cones() const { return cones_; }
  const LinExpr& objective() const { return objective_; }

  std::vector<VarId> binaries() const;

  /// d(optimal value)/d(rhs) of row r given its multiplier.
  double rhs_sensitivity(RowId r, double multiplier) const;

  /// Plain-text LP-style listing of variables, rows and cones.
  std::string to_lp_text() const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearConstraint> rows_;
  std::vector<RotatedCone> cones_;
  LinExpr objective_;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure, kIterationLimit };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double feastol = 1e-9;
  double abstol = 1e-9;
  double reltol = 1e-9;
  int max_iterations = 150;
  double time_limit_s = 600.0;
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<double> x;                       // by VarId
  std::vector<double> row_duals;               // by RowId, g(x) <= 0 convention
  std::vector<std::vector<double>> cone_duals;  // SOC-form multipliers per cone
  double objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;  // s'z at the returned point
  int iterations = 0;
  double seconds = 0.0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
  double value(VarId v) const { return x.at(v.index); }
  double value(const LinExpr& e) const { return e.evaluate(x); }
  double dual(RowId r) const { return row_duals.at(r.index); }
  /// |primal - dual| / max(1, |primal|, |dual|)
  double relative_gap() const;
};

/// Solves a program whose binary variables are all fixed (lb == ub).
/// Numerical trouble is reported through the status, never thrown.
SolveResult solve_continuous(const ConicProgram& program, const SolverOptions& options = {});

}  // namespace esplan
