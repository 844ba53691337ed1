#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conetree/errors.hpp"

namespace conetree {

// Nonnegative integer substitution matrix over a finite label alphabet.
// entry(l, k) is the number of label-l forward neighbours granted to a
// label-k vertex, i.e. column k lists the offspring of label k.
class SubstitutionMatrix {
 public:
  SubstitutionMatrix(std::vector<std::vector<std::int64_t>> rows,
                     std::vector<std::string> labels = {});
  SubstitutionMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows,
                     std::vector<std::string> labels = {});

  int label_count() const { return n_; }
  std::int64_t entry(int l, int k) const { return entries_[std::size_t(l) * n_ + k]; }
  std::int64_t column_sum(int k) const;  // forward degree of a label-k vertex
  const std::vector<std::string>& labels() const { return labels_; }
  int label_index(const std::string& name) const;  // throws MalformedInputError

  // True when every label has the same forward degree (the offspring tree is
  // regular and its root-label choice cannot matter spectrally).
  bool is_regular() const;

  bool operator==(const SubstitutionMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<std::int64_t> entries_;  // row-major
  std::vector<std::string> labels_;
};

// Axioms: (M0) a one-letter alphabet needs its single entry >= 2,
// (M1) positive diagonal, (M2) primitivity. Witnesses identify a failing
// label (M1) or a pair that stays unreachable (M2).
struct ValidationReport {
  bool m0 = false;
  bool m1 = false;
  bool m2 = false;
  std::optional<int> m1_witness;
  std::optional<std::pair<int, int>> m2_witness;

  bool pass() const { return m0 && m1 && m2; }
};

ValidationReport validate_matrix(const SubstitutionMatrix& m);

// Throws DomainError naming the first failing axiom.
void require_valid(const SubstitutionMatrix& m);

// Least n with (M^n) entrywise positive. With a positive diagonal the search
// horizon label_count() is exhaustive; throws DomainError when the diagonal
// has a zero or no exponent within the horizon works.
int primitivity_exponent(const SubstitutionMatrix& m);

// Per-label vertex counts on sphere n around a root of the given label,
// following c_{n+1} = M c_n with c_0 = e_{root}. Throws ResourceLimitError
// on uint64 overflow.
std::vector<std::uint64_t> sphere_count(const SubstitutionMatrix& m, int root_label,
                                        int n);

// Total vertices in the depth-`depth` truncation; saturates at UINT64_MAX.
std::uint64_t projected_vertex_count(const SubstitutionMatrix& m, int root_label,
                                     int depth);

}  // namespace conetree
