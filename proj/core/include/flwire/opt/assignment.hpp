#pragma once

#include <cstdint>
#include <vector>

#include "flwire/grid.hpp"

namespace flwire::opt {

struct AssignmentSolution {
  // Column matched to each row, or -1 when the row is left out (only
  // possible when rows > cols).
  std::vector<int> row_to_col;
  double total_cost = 0.0;
  // Reduced-cost relaxations performed; the unit of work behind the
  // O(n^2 m) bound for an n x m problem with n <= m.
  std::uint64_t iterations = 0;
};

// Minimum-cost rectangular assignment (shortest augmenting path Hungarian
// method with row/column potentials). Every vertex of the smaller side is
// matched. Rows are inserted in index order and ties resolve toward the
// lowest column index, so results are reproducible.
AssignmentSolution solve_assignment(const Grid<double>& cost);

// Exhaustive search over all injective partial assignments (rows may stay
// unmatched). Returns the first minimum in lexicographic enumeration order.
// Throws std::invalid_argument when rows or cols exceed 8.
AssignmentSolution brute_force_assignment(const Grid<double>& cost);

}  // namespace flwire::opt
