#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "conetree/green.hpp"
#include "conetree/tree.hpp"

namespace conetree {

// One offspring configuration: counts[l] children of label l, drawn with
// probability prob.
struct OffspringConfig {
  std::vector<std::uint32_t> counts;
  double prob = 0.0;
};

// Multi-type branching process with finitely supported offspring laws,
// one law per label.
struct BranchingProcess {
  int label_count = 0;
  std::vector<std::vector<OffspringConfig>> laws;  // laws[k] for label k
};

// (B1) every law is a probability distribution over well-formed
// configurations; (B2) no law puts mass on the empty configuration, so
// realizations never die out before the cut.
struct BranchingReport {
  bool b1 = false;
  bool b2 = false;
  std::optional<int> b1_witness;  // offending label
  std::optional<int> b2_witness;

  bool pass() const { return b1 && b2; }
};

BranchingReport validate_process(const BranchingProcess& b);
void require_valid(const BranchingProcess& b);

// The deterministic process whose label-k law is a point mass on column k of
// the matrix; its realizations are exactly the substitution truncations.
BranchingProcess embed_substitution(const SubstitutionMatrix& m);

// max over labels of sum over configurations |p1(s) - p2(s)| * ||s||_1^p,
// with configurations matched across the two supports.
double d_p_distance(const BranchingProcess& a, const BranchingProcess& b, double p);

// One realization truncated at `depth`, in the same breadth-first layout as
// build_tree. Draws are keyed by (seed, sample_index, vertex index), so the
// realization is independent of traversal details. Throws ResourceLimitError
// when the expected size or the actual size exceeds the cap.
TruncatedTree sample_realization(const BranchingProcess& b, int root_label, int depth,
                                 std::uint64_t seed, std::uint64_t sample_index,
                                 std::uint64_t vertex_cap = kDefaultVertexCap);

struct FitReport {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  std::int64_t n = 0;
  std::int64_t unexpected = 0;  // draws outside the model's support
};

// Chi-square fit of n root offspring draws against the model law. Draws come
// from `sampling` when given (else from the model itself). Every model cell
// must expect at least 50 draws; a draw outside the model support makes the
// fit fail outright (p = 0).
FitReport goodness_of_fit(const BranchingProcess& model, int root_label,
                          std::int64_t n, std::uint64_t seed,
                          const BranchingProcess* sampling = nullptr);

struct GwMomentEntry {
  double eta = 0.0;
  double energy = 0.0;
  std::int64_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double p = 0.0;
  int depth = 0;
  std::uint64_t seed = 0;
  double baseline = 0.0;       // clean-truncation gamma^p for the reference matrix
  double good_fraction = 0.0;  // realizations matching the reference to good_depth
  double d_p = 0.0;            // distance between the process and the embedded matrix
};

// Monte Carlo mean of gamma(realization value, reference fixed point)^p over
// n realizations of the process, with the fixed point taken from `m_ref`.
// A realization counts as "good" when every vertex above `good_depth` draws
// exactly the reference offspring configuration.
GwMomentEntry gw_moment_statistic(const BranchingProcess& b,
                                  const SubstitutionMatrix& m_ref, int root_label,
                                  Complex z, double p, std::int64_t n_samples,
                                  int depth, std::uint64_t seed,
                                  const SolverSettings& s = {}, int good_depth = 2,
                                  int workers = 1,
                                  std::uint64_t vertex_cap = kDefaultVertexCap);

}  // namespace conetree
