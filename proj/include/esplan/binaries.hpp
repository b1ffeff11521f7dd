#pragma once

// Exact handling of the small binary siting decision on top of the
// continuous conic backend.

#include <string>
#include <vector>

#include "esplan/conic.hpp"

namespace esplan {

/// Binary siting handles and the variables that collapse to zero when a
/// site is switched off (rating, reservoir, dispatch of that unit).
struct BinaryAtlas {
  struct Entry {
    VarId u;
    int bus = -1;
    std::vector<VarId> zero_when_off;
  };
  std::vector<Entry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  void add(VarId u, int bus, std::vector<VarId> zero_when_off = {}) {
    entries.push_back({u, bus, std::move(zero_when_off)});
  }
};

enum class BinaryMode { kEnumerate, kBranchBound };

struct BinarySolveStats {
  int continuous_solves = 0;
  int pruned_patterns = 0;
  std::vector<int> pattern;  // chosen value per atlas entry
};

/// Largest atlas the enumerate mode accepts.
inline constexpr int kMaxEnumerate = 24;

/// Exact optimum over all binary patterns. Enumerate visits patterns in
/// lexicographic order (first atlas entry most significant) and keeps the
/// first of equal objectives; branch-and-bound uses the continuous relaxation.
/// Throws std::invalid_argument if the program holds a binary missing from
/// the atlas, or if enumerate mode gets more than kMaxEnumerate entries.
SolveResult solve_with_binaries(const ConicProgram& program, const BinaryAtlas& atlas,
                                BinaryMode mode, const SolverOptions& options = {},
                                BinarySolveStats* stats = nullptr);

}  // namespace esplan
