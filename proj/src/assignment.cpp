#include "bidplan/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bidplan {

Assignment solve_assignment(const std::vector<double>& cost, int rows, int cols) {
  if (rows < 0 || cols < rows) throw std::domain_error("assignment: need 0 <= rows <= cols");
  if (cost.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw std::domain_error("assignment: cost matrix size mismatch");
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw std::domain_error("assignment: non-finite cost");
  }
  const double inf = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::size_t>(rows);
  const auto m = static_cast<std::size_t>(cols);
  auto a = [&](std::size_t i, std::size_t j) { return cost[(i - 1) * m + (j - 1)]; };

  // 1-based; column 0 is a virtual start for each augmentation.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0);  // column -> row
  std::vector<std::size_t> way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.row_to_col.assign(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (match[j] != 0) out.row_to_col[match[j] - 1] = static_cast<int>(j - 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.cost += cost[i * m + static_cast<std::size_t>(out.row_to_col[i])];
  }
  return out;
}

}  // namespace bidplan
