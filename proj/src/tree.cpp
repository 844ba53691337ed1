#include "conetree/tree.hpp"

#include <algorithm>
#include <string>

namespace conetree {

std::vector<std::uint64_t> TruncatedTree::census(int n) const {
  if (n < 0 || n > depth_cap) {
    throw MalformedInputError("census: sphere index outside the truncation");
  }
  std::vector<std::uint64_t> counts(label_count, 0);
  for (std::uint64_t v = level_offset[n]; v < level_offset[n + 1]; ++v) {
    ++counts[label[v]];
  }
  return counts;
}

TruncatedTree build_tree(const SubstitutionMatrix& m, int root_label, int depth,
                         std::uint64_t vertex_cap) {
  require_valid(m);
  const int a = m.label_count();
  if (root_label < 0 || root_label >= a) {
    throw MalformedInputError("build_tree: root label out of range");
  }
  if (depth < 0) throw MalformedInputError("build_tree: negative depth");
  if (depth > 0xffff) throw MalformedInputError("build_tree: depth exceeds 65535");

  const std::uint64_t projected = projected_vertex_count(m, root_label, depth);
  const std::uint64_t cap = std::min<std::uint64_t>(vertex_cap, 0xfffffffeull);
  if (projected > cap) {
    throw ResourceLimitError("build_tree: truncation needs " + std::to_string(projected) +
                                 " vertices, cap is " + std::to_string(cap),
                             projected, cap);
  }

  TruncatedTree t;
  t.depth_cap = depth;
  t.label_count = a;
  t.label.reserve(projected);
  t.parent.reserve(projected);
  t.depth.reserve(projected);
  t.child_begin.reserve(projected + 1);
  t.level_offset.assign(std::size_t(depth) + 2, 0);

  t.label.push_back(static_cast<std::uint16_t>(root_label));
  t.parent.push_back(TruncatedTree::kNoParent);
  t.depth.push_back(0);
  t.level_offset[1] = 1;

  std::uint64_t level_begin = 0, level_end = 1;
  for (int d = 0; d < depth; ++d) {
    for (std::uint64_t v = level_begin; v < level_end; ++v) {
      t.child_begin.push_back(static_cast<std::uint32_t>(t.label.size()));
      const int k = t.label[v];
      for (int l = 0; l < a; ++l) {
        for (std::int64_t c = 0; c < m.entry(l, k); ++c) {
          t.label.push_back(static_cast<std::uint16_t>(l));
          t.parent.push_back(static_cast<std::uint32_t>(v));
          t.depth.push_back(static_cast<std::uint16_t>(d + 1));
        }
      }
    }
    level_begin = level_end;
    level_end = t.label.size();
    t.level_offset[std::size_t(d) + 2] = level_end;
  }
  // Vertices at the cut have no children.
  while (t.child_begin.size() <= t.label.size()) {
    t.child_begin.push_back(static_cast<std::uint32_t>(t.label.size()));
  }
  return t;
}

}  // namespace conetree
