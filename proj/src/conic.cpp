#include "esplan/conic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace esplan {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  constant_ += o.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  terms_.reserve(terms_.size() + o.terms_.size());
  for (const auto& [v, c] : o.terms_) terms_.emplace_back(v, -c);
  constant_ -= o.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms_) t.second *= s;
  constant_ *= s;
  return *this;
}

void LinExpr::compact() {
  std::sort(terms_.begin(), terms_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<int, double>> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!out.empty() && out.back().first == t.first) {
      out.back().second += t.second;
    } else {
      out.push_back(t);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const auto& t) { return t.second == 0.0; }),
            out.end());
  terms_ = std::move(out);
}

double LinExpr::evaluate(const std::vector<double>& x) const {
  double v = constant_;
  for (const auto& [i, c] : terms_) v += c * x.at(i);
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

VarId ConicProgram::add_variable(std::string name, double lb, double ub) {
  if (lb > ub) throw std::invalid_argument("variable '" + name + "' has lb > ub");
  vars_.push_back({std::move(name), lb, ub, false});
  return VarId{static_cast<int>(vars_.size()) - 1};
}

VarId ConicProgram::add_binary(std::string name) {
  vars_.push_back({std::move(name), 0.0, 1.0, true});
  return VarId{static_cast<int>(vars_.size()) - 1};
}

namespace {

void check_expr(const LinExpr& e, int nvars) {
  for (const auto& [i, c] : e.terms()) {
    if (i < 0 || i >= nvars) throw std::out_of_range("expression references unknown variable");
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite coefficient");
  }
}

}  // namespace

RowId ConicProgram::add_linear(LinExpr expr, Sense sense, double rhs, std::string name) {
  check_expr(expr, num_variables());
  expr.compact();
  const double folded = rhs - expr.constant();
  LinExpr body;
  for (const auto& [i, c] : expr.terms()) body.add(VarId{i}, c);
  rows_.push_back({std::move(body), sense, folded, std::move(name)});
  return RowId{static_cast<int>(rows_.size()) - 1};
}

ConeId ConicProgram::add_rotated_cone(std::vector<LinExpr> u, LinExpr w, LinExpr t,
                                      std::string name) {
  for (auto& e : u) {
    check_expr(e, num_variables());
    e.compact();
  }
  check_expr(w, num_variables());
  check_expr(t, num_variables());
  w.compact();
  t.compact();
  cones_.push_back({std::move(u), std::move(w), std::move(t), std::move(name)});
  return ConeId{static_cast<int>(cones_.size()) - 1};
}

void ConicProgram::set_objective(LinExpr obj) {
  check_expr(obj, num_variables());
  obj.compact();
  objective_ = std::move(obj);
}

void ConicProgram::add_to_objective(const LinExpr& obj) {
  check_expr(obj, num_variables());
  objective_ += obj;
  objective_.compact();
}

void ConicProgram::set_bounds(VarId v, double lb, double ub) {
  auto& var = vars_.at(v.index);
  if (lb > ub) throw std::invalid_argument("variable '" + var.name + "' has lb > ub");
  var.lb = lb;
  var.ub = ub;
}

std::vector<VarId> ConicProgram::binaries() const {
  std::vector<VarId> out;
  for (int i = 0; i < num_variables(); ++i) {
    if (vars_[i].binary) out.push_back(VarId{i});
  }
  return out;
}

double ConicProgram::rhs_sensitivity(RowId r, double multiplier) const {
  return row(r).sense == Sense::kGe ? multiplier : -multiplier;
}

namespace {

void write_expr(std::ostream& os, const LinExpr& e, const std::vector<Variable>& vars) {
  bool first = true;
  for (const auto& [i, c] : e.terms()) {
    os << (c < 0 ? " - " : (first ? " " : " + ")) << std::abs(c) << ' ' << vars[i].name;
    first = false;
  }
  if (e.constant() != 0.0 || first) {
    os << (e.constant() < 0 ? " - " : " + ") << std::abs(e.constant());
  }
}

}  // namespace

std::string ConicProgram::to_lp_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "minimize\n obj:";
  write_expr(os, objective_, vars_);
  os << "\nsubject to\n";
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    os << ' ' << (row.name.empty() ? "r" + std::to_string(r) : row.name) << ':';
    write_expr(os, row.expr, vars_);
    os << (row.sense == Sense::kLe ? " <= " : row.sense == Sense::kGe ? " >= " : " = ") << row.rhs
       << '\n';
  }
  os << "cones\n";
  for (std::size_t k = 0; k < cones_.size(); ++k) {
    const auto& c = cones_[k];
    os << ' ' << (c.name.empty() ? "k" + std::to_string(k) : c.name) << ": ||(";
    for (std::size_t j = 0; j < c.u.size(); ++j) {
      if (j) os << ',';
      write_expr(os, c.u[j], vars_);
    }
    os << ")||^2 <= (";
    write_expr(os, c.w, vars_);
    os << ") * (";
    write_expr(os, c.t, vars_);
    os << ")\n";
  }
  os << "bounds\n";
  for (const auto& v : vars_) {
    os << ' ' << v.lb << " <= " << v.name << " <= " << v.ub << (v.binary ? "  binary" : "") << '\n';
  }
  os << "end\n";
  return os.str();
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kNumericalFailure:
      return "numerical-failure";
    case SolveStatus::kIterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

double SolveResult::relative_gap() const {
  const double scale = std::max({1.0, std::abs(objective), std::abs(dual_objective)});
  return std::abs(objective - dual_objective) / scale;
}

}  // namespace esplan
