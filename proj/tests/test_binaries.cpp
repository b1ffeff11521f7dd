#include <random>
#include <stdexcept>

#include "doctest.h"
#include "esplan/binaries.hpp"

using namespace esplan;

namespace {

// Five sites; y_i lives only where u_i = 1. Rows force sites 2 and 4 on and
// the rest off, so 01010 is the only feasible pattern.
struct Planted {
  ConicProgram prog;
  BinaryAtlas atlas;
};

Planted planted() {
  Planted p;
  LinExpr off_sum, obj;
  for (int i = 0; i < 5; ++i) {
    auto u = p.prog.add_binary("u" + std::to_string(i));
    auto y = p.prog.add_variable("y" + std::to_string(i), 0.0, 1.0);
    p.prog.add_le(LinExpr(y) - LinExpr(u), 0.0);
    p.atlas.add(u, i + 1, {y});
    if (i == 1 || i == 3) {
      p.prog.add_ge(y, 0.5);
    } else {
      off_sum += u;
    }
    obj += LinExpr(y) + 2.0 * LinExpr(u);
  }
  p.prog.add_le(off_sum, 0.2);
  p.prog.set_objective(obj);
  return p;
}

}  // namespace

TEST_CASE("planted instance: only 01010 is feasible") {
  auto p = planted();
  BinarySolveStats st;
  auto res = solve_with_binaries(p.prog, p.atlas, BinaryMode::kEnumerate, {}, &st);
  REQUIRE(res.optimal());
  CHECK(st.pattern == std::vector<int>{0, 1, 0, 1, 0});
  CHECK(st.continuous_solves <= 32);
  CHECK(res.objective == doctest::Approx(5.0).epsilon(1e-9));

  BinarySolveStats bb;
  auto res2 = solve_with_binaries(p.prog, p.atlas, BinaryMode::kBranchBound, {}, &bb);
  REQUIRE(res2.optimal());
  CHECK(bb.pattern == std::vector<int>{0, 1, 0, 1, 0});
}

TEST_CASE("five candidates never need more than 32 solves, off-forced bounds prune") {
  auto p = planted();
  // y1 >= 0.5 by bound: every pattern with u1 = 0 is dropped without a solve
  p.prog.set_bounds(p.atlas.entries[1].zero_when_off[0], 0.5, 1.0);
  BinarySolveStats st;
  auto res = solve_with_binaries(p.prog, p.atlas, BinaryMode::kEnumerate, {}, &st);
  REQUIRE(res.optimal());
  CHECK(st.pruned_patterns == 16);
  CHECK(st.continuous_solves == 16);
}

TEST_CASE("binaries forced to zero by bounds need one solve") {
  auto p = planted();
  for (auto& e : p.atlas.entries) p.prog.set_bounds(e.u, 0.0, 0.0);
  BinarySolveStats st;
  auto res = solve_with_binaries(p.prog, p.atlas, BinaryMode::kEnumerate, {}, &st);
  CHECK(st.continuous_solves == 1);
  CHECK(res.status == SolveStatus::kInfeasible);
}

TEST_CASE("binary outside the atlas is rejected, oversized enumerate throws") {
  auto p = planted();
  BinaryAtlas partial;
  partial.entries.assign(p.atlas.entries.begin(), p.atlas.entries.begin() + 2);
  CHECK_THROWS_AS(solve_with_binaries(p.prog, partial, BinaryMode::kEnumerate),
                  std::invalid_argument);

  ConicProgram big;
  BinaryAtlas atlas;
  for (int i = 0; i < kMaxEnumerate + 1; ++i) atlas.add(big.add_binary("u"), i);
  CHECK_THROWS_AS(solve_with_binaries(big, atlas, BinaryMode::kEnumerate), std::invalid_argument);
}

TEST_CASE("enumerate and branch-and-bound agree on random siting SOCPs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 3 + trial % 6;
    ConicProgram prog;
    BinaryAtlas atlas;
    std::vector<LinExpr> caps;
    LinExpr total, obj;
    for (int i = 0; i < n; ++i) {
      auto u = prog.add_binary("u" + std::to_string(i));
      auto r = prog.add_variable("r" + std::to_string(i), 0.0);
      const double cap = 0.5 + U(rng);
      prog.add_le(LinExpr(r) - cap * LinExpr(u), 0.0);
      atlas.add(u, i, {r});
      caps.push_back(r);
      total += r;
      obj += (1.0 + 3.0 * U(rng)) * LinExpr(u) + (0.2 + U(rng)) * LinExpr(r);
    }
    prog.add_ge(total, 1.0 + n * 0.2 * U(rng));
    auto t = prog.add_variable("t", 0.0);
    prog.add_rotated_cone(caps, t, LinExpr(1.0));
    obj += 0.5 * LinExpr(t);
    prog.set_objective(obj);

    BinarySolveStats se, sb;
    auto a = solve_with_binaries(prog, atlas, BinaryMode::kEnumerate, {}, &se);
    auto b = solve_with_binaries(prog, atlas, BinaryMode::kBranchBound, {}, &sb);
    REQUIRE(a.optimal());
    REQUIRE(b.optimal());
    CHECK(std::abs(a.objective - b.objective) <= 1e-8 * std::max(1.0, std::abs(a.objective)));
    CHECK(a.relative_gap() < 1e-6);
    CHECK(b.relative_gap() < 1e-6);
  }
}
