#pragma once

// Dense reference for the tree recursions: assemble the (weighted, shifted)
// adjacency matrix of a materialized truncation and read the root entry of
// its resolvent off a direct linear solve. O(n^3), intended for small trees.

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "conetree/tree.hpp"

namespace testsupport {

// Root entry of (H - z)^{-1}, where H has potential[v] on the diagonal and
// weight[v] on the edge {v, parent(v)} (1 and 0 for undecorated trees).
// Gaussian elimination with partial pivoting.
inline std::complex<double> dense_root_resolvent(const conetree::TruncatedTree& t,
                                                 std::complex<double> z) {
  using C = std::complex<double>;
  const std::size_t n = t.size();
  std::vector<C> a(n * n, C{0.0, 0.0});
  auto at = [&](std::size_t r, std::size_t c) -> C& { return a[r * n + c]; };
  for (std::size_t v = 0; v < n; ++v) {
    const double pot = t.decorated() ? t.potential[v] : 0.0;
    at(v, v) = C{pot, 0.0} - z;
    if (t.parent[v] != conetree::TruncatedTree::kNoParent) {
      const double w = t.decorated() ? t.weight[v] : 1.0;
      at(v, t.parent[v]) = C{w, 0.0};
      at(t.parent[v], v) = C{w, 0.0};
    }
  }
  std::vector<C> x(n, C{0.0, 0.0});
  x[0] = C{1.0, 0.0};
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(at(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double mag = std::abs(at(r, col));
      if (mag > best) {
        best = mag;
        piv = r;
      }
    }
    if (piv != col) {
      for (std::size_t c = col; c < n; ++c) std::swap(at(col, c), at(piv, c));
      std::swap(x[col], x[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const C f = at(r, col) / at(col, col);
      if (f == C{0.0, 0.0}) continue;
      at(r, col) = C{0.0, 0.0};
      for (std::size_t c = col + 1; c < n; ++c) at(r, c) -= f * at(col, c);
      x[r] -= f * x[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    C s = x[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= at(i, c) * x[c];
    x[i] = s / at(i, i);
  }
  return x[0];
}

}  // namespace testsupport
