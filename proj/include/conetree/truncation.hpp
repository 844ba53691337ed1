#pragma once

#include <vector>

#include "conetree/green.hpp"
#include "conetree/tree.hpp"

namespace conetree {

// Root value of the resolvent recursion on a materialized truncation,
// evaluated leaf-to-root in one reverse pass. Decorations (potentials,
// edge weights) are honoured when present.
Complex exact_forward_green(const TruncatedTree& t, Complex z);

// Same recursion for an undecorated truncation, collapsed to one value per
// (label, level). Agrees with exact_forward_green on build_tree output bit
// for bit at a fraction of the cost.
Complex truncated_green(const SubstitutionMatrix& m, int root_label, int depth,
                        Complex z);

// gamma between the depth-R truncation value and the fixed point at z,
// for each requested depth.
std::vector<double> convergence_study(const SubstitutionMatrix& m, int root_label,
                                      Complex z, const std::vector<int>& depths,
                                      const SolverSettings& s = {});

}  // namespace conetree
