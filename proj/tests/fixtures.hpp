#pragma once

#include <vector>

#include "loopexp/graphs.hpp"
#include "loopexp/model.hpp"

namespace loopexp::testing {

inline CheckGraph triangle() { return CheckGraph::regular(3, 2, {{0, 1}, {0, 2}, {1, 2}}); }

inline CheckGraph k4() { return CheckGraph::regular(4, 3, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }

// triangular prism: two triangles joined by a perfect matching
inline CheckGraph prism() {
  return CheckGraph::regular(6, 3, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {0, 3}, {1, 4}, {2, 5}});
}

inline CheckGraph two_k4() {
  std::vector<Edge> edges;
  for (int base : {0, 4})
    for (int u = 0; u < 4; ++u)
      for (int v = u + 1; v < 4; ++v) edges.emplace_back(base + u, base + v);
  return CheckGraph::regular(8, 3, edges);
}

inline CheckGraph two_triangles() {
  return CheckGraph::regular(6, 2, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}});
}

inline CheckGraph path(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return CheckGraph::general(n, edges);
}

inline FactorSpec uniform_cycle_code(const CheckGraph& g, double h) {
  return FactorSpec::cycle_code(std::vector<double>(g.num_edges(), h));
}

}  // namespace loopexp::testing
