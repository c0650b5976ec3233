#pragma once

#include <vector>

namespace bidplan {

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

// Minimum-cost perfect matching of a rows x cols matrix (row-major, rows <= cols)
// by shortest augmenting paths with dual potentials, O(rows^2 * cols).
Assignment solve_assignment(const std::vector<double>& cost, int rows, int cols);

}  // namespace bidplan
