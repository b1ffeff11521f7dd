#include "esplan/binaries.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esplan {

namespace {

bool better(double candidate, double incumbent) {
  const double tol = 1e-9 * std::max(1.0, std::abs(incumbent));
  return candidate < incumbent - tol;
}

void check_atlas(const ConicProgram& program, const BinaryAtlas& atlas) {
  std::vector<char> in_atlas(program.num_variables(), 0);
  for (const auto& e : atlas.entries) {
    if (e.u.index < 0 || e.u.index >= program.num_variables()) {
      throw std::invalid_argument("atlas references an unknown variable");
    }
    in_atlas[e.u.index] = 1;
  }
  for (VarId b : program.binaries()) {
    if (!in_atlas[b.index]) {
      throw std::invalid_argument("binary '" + program.variable(b).name + "' is not in the atlas");
    }
  }
}

// Applies a full or partial pattern (-1 = free). Returns false when an
// off-site forces a variable whose bounds exclude zero.
bool apply_pattern(ConicProgram& prog, const BinaryAtlas& atlas, const std::vector<int>& pattern) {
  for (int i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries[i];
    if (pattern[i] < 0) {
      prog.relax_binary(e.u);
      continue;
    }
    prog.fix(e.u, pattern[i]);
    if (pattern[i] == 0) {
      for (VarId z : e.zero_when_off) {
        const auto& var = prog.variable(z);
        if (var.lb > 0.0 || var.ub < 0.0) return false;
        prog.fix(z, 0.0);
      }
    }
  }
  return true;
}

std::vector<std::vector<int>> allowed_values(const ConicProgram& program, const BinaryAtlas& atlas) {
  std::vector<std::vector<int>> out;
  for (const auto& e : atlas.entries) {
    const auto& var = program.variable(e.u);
    std::vector<int> vals;
    for (int v : {0, 1}) {
      if (v >= var.lb - 1e-12 && v <= var.ub + 1e-12) vals.push_back(v);
    }
    out.push_back(vals);
  }
  return out;
}

SolveResult enumerate(const ConicProgram& program, const BinaryAtlas& atlas,
                      const SolverOptions& options, BinarySolveStats& stats) {
  const int n = atlas.size();
  if (n > kMaxEnumerate) {
    throw std::invalid_argument("enumerate mode limited to " + std::to_string(kMaxEnumerate) +
                                " binaries");
  }
  const auto vals = allowed_values(program, atlas);
  SolveResult best;
  best.status = SolveStatus::kInfeasible;
  bool have = false;
  SolveResult last_failure;
  bool saw_failure = false;
  for (const auto& v : vals) {
    if (v.empty()) {
      best.x.assign(program.num_variables(), 0.0);
      return best;
    }
  }

  std::vector<int> idx(n, 0);
  std::vector<int> pattern(n);
  while (true) {
    for (int i = 0; i < n; ++i) pattern[i] = vals[i][idx[i]];
    ConicProgram prog = program;
    if (!apply_pattern(prog, atlas, pattern)) {
      ++stats.pruned_patterns;
    } else {
      SolveResult res = solve_continuous(prog, options);
      ++stats.continuous_solves;
      if (res.optimal()) {
        if (!have || better(res.objective, best.objective)) {
          best = std::move(res);
          stats.pattern = pattern;
          have = true;
        }
      } else if (res.status != SolveStatus::kInfeasible) {
        last_failure = std::move(res);
        saw_failure = true;
      }
    }
    // odometer, last entry fastest -> lexicographic order
    int k = n - 1;
    while (k >= 0 && ++idx[k] == static_cast<int>(vals[k].size())) {
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  if (!have && saw_failure) return last_failure;
  if (!have) best.x.assign(program.num_variables(), 0.0);
  return best;
}

SolveResult branch_bound(const ConicProgram& program, const BinaryAtlas& atlas,
                         const SolverOptions& options, BinarySolveStats& stats) {
  const int n = atlas.size();
  const auto vals = allowed_values(program, atlas);
  SolveResult best;
  best.status = SolveStatus::kInfeasible;
  best.x.assign(program.num_variables(), 0.0);
  bool have = false;
  bool saw_failure = false;
  SolveResult last_failure;

  std::vector<int> root(n, -1);
  for (int i = 0; i < n; ++i) {
    if (vals[i].empty()) return best;
    if (vals[i].size() == 1) root[i] = vals[i][0];
  }
  std::vector<std::vector<int>> stack{root};
  while (!stack.empty()) {
    std::vector<int> node = std::move(stack.back());
    stack.pop_back();
    ConicProgram prog = program;
    if (!apply_pattern(prog, atlas, node)) {
      ++stats.pruned_patterns;
      continue;
    }
    SolveResult res = solve_continuous(prog, options);
    ++stats.continuous_solves;
    const bool leaf = std::none_of(node.begin(), node.end(), [](int v) { return v < 0; });
    if (!res.optimal()) {
      if (res.status == SolveStatus::kInfeasible) continue;
      if (leaf) {
        last_failure = std::move(res);
        saw_failure = true;
        continue;
      }
    } else if (have && !better(res.objective, best.objective)) {
      if (leaf && !better(best.objective, res.objective) && node < stats.pattern) {
        best = std::move(res);
        stats.pattern = node;
      }
      continue;
    }
    if (leaf) {
      best = std::move(res);
      stats.pattern = node;
      have = true;
      continue;
    }
    // branch on the most fractional free binary
    int pick = -1;
    double frac = -1.0;
    for (int i = 0; i < n; ++i) {
      if (node[i] >= 0) continue;
      const double xv = res.optimal() ? res.value(atlas.entries[i].u) : 0.5;
      const double fr = std::min(xv, 1.0 - xv);
      if (fr > frac) {
        frac = fr;
        pick = i;
      }
    }
    if (res.optimal() && frac <= 1e-7) {
      // relaxation already integral: close the node with one exact solve
      std::vector<int> leaf_node = node;
      for (int i = 0; i < n; ++i) {
        if (leaf_node[i] < 0) leaf_node[i] = res.value(atlas.entries[i].u) > 0.5 ? 1 : 0;
      }
      stack.push_back(std::move(leaf_node));
      continue;
    }
    const double xv = res.optimal() ? res.value(atlas.entries[pick].u) : 0.0;
    const int first = xv > 0.5 ? 1 : 0;
    std::vector<int> a = node, b = node;
    a[pick] = 1 - first;
    b[pick] = first;
    stack.push_back(std::move(a));
    stack.push_back(std::move(b));  // explored first
  }
  if (!have && saw_failure) return last_failure;
  return best;
}

}  // namespace

SolveResult solve_with_binaries(const ConicProgram& program, const BinaryAtlas& atlas,
                                BinaryMode mode, const SolverOptions& options,
                                BinarySolveStats* stats) {
  check_atlas(program, atlas);
  BinarySolveStats local;
  BinarySolveStats& st = stats ? *stats : local;
  st = {};
  if (mode == BinaryMode::kEnumerate) return enumerate(program, atlas, options, st);
  return branch_bound(program, atlas, options, st);
}

}  // namespace esplan
