#include <limits>

#include "lgmd/metrics.hpp"

namespace lgmd {

// Shortest augmenting path form with row/column potentials, O(n^3).
std::vector<Index> hungarian(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw Error(ErrorCode::DimensionMismatch, "assignment cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based

  for (Index row = 1; row <= n; ++row) {
    match[0] = row;
    Index col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const Index r = match[col0];
      double delta = inf;
      Index col1 = 0;
      for (Index c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost(r - 1, c - 1) - u[r] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (Index c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const Index col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<Index> out(n);
  for (Index c = 1; c <= n; ++c) out[match[c] - 1] = c - 1;
  return out;
}

}  // namespace lgmd
