#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "conetree/substitution.hpp"

namespace conetree {

inline constexpr std::uint64_t kDefaultVertexCap = 10'000'000;

// Rooted truncation of a labelled tree in breadth-first layout. Children of
// any vertex are contiguous and appear grouped by ascending label, so a
// vertex's offspring configuration can be read off as a label census.
// `potential` and `weight` are optional decorations; when present, weight[v]
// belongs to the edge between v and its parent (weight[0] is fixed at 1).
struct TruncatedTree {
  static constexpr std::uint32_t kNoParent = 0xffffffffu;

  std::vector<std::uint16_t> label;
  std::vector<std::uint32_t> parent;
  std::vector<std::uint16_t> depth;
  std::vector<std::uint32_t> child_begin;   // size() + 1 offsets
  std::vector<std::uint64_t> level_offset;  // first vertex of each level, depth_cap + 2 entries
  int depth_cap = 0;
  int label_count = 0;

  std::vector<double> potential;  // empty or size()
  std::vector<double> weight;     // empty or size()

  std::size_t size() const { return label.size(); }
  bool decorated() const { return !potential.empty(); }
  std::pair<std::uint32_t, std::uint32_t> children(std::uint32_t v) const {
    return {child_begin[v], child_begin[v + 1]};
  }

  // Per-label vertex count on sphere n.
  std::vector<std::uint64_t> census(int n) const;
};

// Materializes the depth-`depth` truncation with root of the given label:
// each label-k vertex above the cut receives entry(l, k) children of label l.
// Throws ResourceLimitError (with the projected size) when the truncation
// would exceed `vertex_cap` vertices.
TruncatedTree build_tree(const SubstitutionMatrix& m, int root_label, int depth,
                         std::uint64_t vertex_cap = kDefaultVertexCap);

}  // namespace conetree
