#include <algorithm>
#include <limits>
#include <stdexcept>

#include "flwire/opt/assignment.hpp"

namespace flwire::opt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// rows <= cols. 1-based potentials; column 0 is the virtual source.
AssignmentSolution solve_wide(const Grid<double>& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<double> minv(m + 1);
  std::vector<char> used(m + 1);
  std::uint64_t iterations = 0;

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        ++iterations;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentSolution out;
  out.row_to_col.assign(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) out.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.total_cost += cost(i, static_cast<std::size_t>(out.row_to_col[i]));
  }
  out.iterations = iterations;
  return out;
}

struct Enumerator {
  const Grid<double>& cost;
  std::vector<int> current;
  std::vector<char> col_used;
  std::vector<int> best;
  double best_cost = kInf;

  void visit(std::size_t row, double partial) {
    if (row == cost.rows()) {
      if (partial < best_cost) {
        best_cost = partial;
        best = current;
      }
      return;
    }
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      if (col_used[c]) continue;
      col_used[c] = 1;
      current[row] = static_cast<int>(c);
      visit(row + 1, partial + cost(row, c));
      col_used[c] = 0;
    }
    current[row] = -1;
    visit(row + 1, partial);
  }
};

}  // namespace

AssignmentSolution solve_assignment(const Grid<double>& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    return {std::vector<int>(cost.rows(), -1), 0.0, 0};
  }
  if (cost.rows() <= cost.cols()) return solve_wide(cost);

  AssignmentSolution t = solve_wide(cost.transposed());
  AssignmentSolution out;
  out.row_to_col.assign(cost.rows(), -1);
  for (std::size_t c = 0; c < t.row_to_col.size(); ++c) {
    out.row_to_col[static_cast<std::size_t>(t.row_to_col[c])] =
        static_cast<int>(c);
  }
  out.total_cost = t.total_cost;
  out.iterations = t.iterations;
  return out;
}

AssignmentSolution brute_force_assignment(const Grid<double>& cost) {
  if (cost.rows() > 8 || cost.cols() > 8) {
    throw std::invalid_argument(
        "brute_force_assignment: refusing instance larger than 8 x 8");
  }
  Enumerator e{cost, std::vector<int>(cost.rows(), -1),
               std::vector<char>(cost.cols(), 0), {}, kInf};
  e.visit(0, 0.0);
  AssignmentSolution out;
  out.row_to_col = e.best;
  out.total_cost = e.best_cost;
  return out;
}

}  // namespace flwire::opt
