#include "conetree/truncation.hpp"

namespace conetree {

Complex exact_forward_green(const TruncatedTree& t, Complex z) {
  require_halfplane(z, "exact_forward_green");
  if (t.size() == 0) throw MalformedInputError("exact_forward_green: empty tree");
  const bool decorated = t.decorated();
  std::vector<Complex> g(t.size());
  for (std::size_t i = t.size(); i-- > 0;) {
    const auto [lo, hi] = t.children(static_cast<std::uint32_t>(i));
    Complex sum{0.0, 0.0};
    for (std::uint32_t c = lo; c < hi; ++c) {
      if (decorated) {
        sum += (t.weight[c] * t.weight[c]) * g[c];
      } else {
        sum += g[c];
      }
    }
    const double v = decorated ? t.potential[i] : 0.0;
    g[i] = phi_from_sum(z, v, sum);
  }
  return g[0];
}

Complex truncated_green(const SubstitutionMatrix& m, int root_label, int depth,
                        Complex z) {
  require_valid(m);
  require_halfplane(z, "truncated_green");
  const int a = m.label_count();
  if (root_label < 0 || root_label >= a) {
    throw MalformedInputError("truncated_green: root label out of range");
  }
  if (depth < 0) throw MalformedInputError("truncated_green: negative depth");
  // One value per label at the current level, starting below the cut.
  std::vector<Complex> level(a), next(a);
  for (int j = 0; j < a; ++j) level[j] = phi_from_sum(z, 0.0, Complex{0.0, 0.0});
  for (int d = 0; d < depth; ++d) {
    for (int j = 0; j < a; ++j) {
      Complex sum{0.0, 0.0};
      for (int l = 0; l < a; ++l) {
        for (std::int64_t c = 0; c < m.entry(l, j); ++c) sum += level[l];
      }
      next[j] = phi_from_sum(z, 0.0, sum);
    }
    level.swap(next);
  }
  return level[root_label];
}

std::vector<double> convergence_study(const SubstitutionMatrix& m, int root_label,
                                      Complex z, const std::vector<int>& depths,
                                      const SolverSettings& s) {
  const GreenVector fix = solve_green(m, z, s);
  std::vector<double> out;
  out.reserve(depths.size());
  for (int depth : depths) {
    out.push_back(gamma_dist(truncated_green(m, root_label, depth, z),
                             fix.values[root_label]));
  }
  return out;
}

}  // namespace conetree
