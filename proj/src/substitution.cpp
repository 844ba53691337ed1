#include "conetree/substitution.hpp"

#include <algorithm>
#include <limits>

namespace conetree {

namespace {

std::string default_label(int i) {
  std::string name;
  int v = i;
  do {
    name.insert(name.begin(), char('a' + v % 26));
    v = v / 26 - 1;
  } while (v >= 0);
  return name;
}

}  // namespace

SubstitutionMatrix::SubstitutionMatrix(std::vector<std::vector<std::int64_t>> rows,
                                       std::vector<std::string> labels) {
  if (rows.empty()) throw MalformedInputError("substitution matrix: no rows");
  n_ = static_cast<int>(rows.size());
  entries_.reserve(std::size_t(n_) * n_);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n_) {
      throw MalformedInputError("substitution matrix: rows must form a square matrix");
    }
    for (std::int64_t e : row) {
      if (e < 0) throw MalformedInputError("substitution matrix: negative entry");
      entries_.push_back(e);
    }
  }
  if (labels.empty()) {
    for (int i = 0; i < n_; ++i) labels.push_back(default_label(i));
  }
  if (static_cast<int>(labels.size()) != n_) {
    throw MalformedInputError("substitution matrix: label count does not match size");
  }
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      if (labels[i] == labels[j]) {
        throw MalformedInputError("substitution matrix: duplicate label '" + labels[i] + "'");
      }
    }
  }
  labels_ = std::move(labels);
}

SubstitutionMatrix::SubstitutionMatrix(
    std::initializer_list<std::initializer_list<std::int64_t>> rows,
    std::vector<std::string> labels)
    : SubstitutionMatrix(
          std::vector<std::vector<std::int64_t>>(rows.begin(), rows.end()),
          std::move(labels)) {}

std::int64_t SubstitutionMatrix::column_sum(int k) const {
  std::int64_t s = 0;
  for (int l = 0; l < n_; ++l) s += entry(l, k);
  return s;
}

int SubstitutionMatrix::label_index(const std::string& name) const {
  for (int i = 0; i < n_; ++i) {
    if (labels_[i] == name) return i;
  }
  throw MalformedInputError("unknown label '" + name + "'");
}

bool SubstitutionMatrix::is_regular() const {
  const std::int64_t d = column_sum(0);
  for (int k = 1; k < n_; ++k) {
    if (column_sum(k) != d) return false;
  }
  return true;
}

namespace {

// Boolean reachability products; enough for primitivity questions.
std::vector<char> bool_mul(const std::vector<char>& a, const std::vector<char>& b, int n) {
  std::vector<char> out(std::size_t(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (!a[std::size_t(i) * n + k]) continue;
      for (int j = 0; j < n; ++j) {
        out[std::size_t(i) * n + j] |= b[std::size_t(k) * n + j];
      }
    }
  }
  return out;
}

std::vector<char> bool_pattern(const SubstitutionMatrix& m) {
  const int n = m.label_count();
  std::vector<char> p(std::size_t(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) p[std::size_t(i) * n + j] = m.entry(i, j) > 0;
  }
  return p;
}

std::optional<std::pair<int, int>> first_zero(const std::vector<char>& p, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!p[std::size_t(i) * n + j]) return std::make_pair(i, j);
    }
  }
  return std::nullopt;
}

}  // namespace

ValidationReport validate_matrix(const SubstitutionMatrix& m) {
  const int n = m.label_count();
  ValidationReport r;
  r.m0 = n > 1 || m.entry(0, 0) >= 2;
  r.m1 = true;
  for (int i = 0; i < n; ++i) {
    if (m.entry(i, i) < 1) {
      r.m1 = false;
      r.m1_witness = i;
      break;
    }
  }
  // With a positive diagonal the entry pattern of M^k is monotone in k and
  // stabilizes by k = n, so checking M^n settles primitivity.
  std::vector<char> p = bool_pattern(m);
  for (int k = 1; k < n; ++k) p = bool_mul(p, bool_pattern(m), n);
  const auto zero = first_zero(p, n);
  r.m2 = !zero.has_value();
  r.m2_witness = zero;
  return r;
}

void require_valid(const SubstitutionMatrix& m) {
  const ValidationReport r = validate_matrix(m);
  if (!r.m0) {
    throw DomainError("substitution matrix rejected: single-label entry must be >= 2");
  }
  if (!r.m1) {
    throw DomainError("substitution matrix rejected: zero diagonal at label '" +
                      m.labels()[*r.m1_witness] + "'");
  }
  if (!r.m2) {
    throw DomainError("substitution matrix rejected: not primitive (label pair '" +
                      m.labels()[r.m2_witness->first] + "', '" +
                      m.labels()[r.m2_witness->second] + "' stays unreachable)");
  }
}

int primitivity_exponent(const SubstitutionMatrix& m) {
  const int n = m.label_count();
  for (int i = 0; i < n; ++i) {
    if (m.entry(i, i) < 1) {
      throw DomainError("primitivity_exponent requires a positive diagonal");
    }
  }
  std::vector<char> p = bool_pattern(m);
  for (int k = 1; k <= n; ++k) {
    if (!first_zero(p, n).has_value()) return k;
    p = bool_mul(p, bool_pattern(m), n);
  }
  throw DomainError("matrix is not primitive within the exhaustive horizon");
}

std::vector<std::uint64_t> sphere_count(const SubstitutionMatrix& m, int root_label,
                                        int n) {
  const int a = m.label_count();
  if (root_label < 0 || root_label >= a) {
    throw MalformedInputError("sphere_count: root label out of range");
  }
  if (n < 0) throw MalformedInputError("sphere_count: negative sphere index");
  std::vector<std::uint64_t> c(a, 0);
  c[root_label] = 1;
  for (int step = 0; step < n; ++step) {
    std::vector<std::uint64_t> next(a, 0);
    for (int l = 0; l < a; ++l) {
      for (int k = 0; k < a; ++k) {
        const std::uint64_t e = static_cast<std::uint64_t>(m.entry(l, k));
        if (e == 0 || c[k] == 0) continue;
        std::uint64_t term = 0, sum = 0;
        if (__builtin_mul_overflow(e, c[k], &term) ||
            __builtin_add_overflow(next[l], term, &sum)) {
          throw ResourceLimitError("sphere_count: counts exceed 64-bit range",
                                   std::numeric_limits<std::uint64_t>::max(),
                                   std::numeric_limits<std::uint64_t>::max());
        }
        next[l] = sum;
      }
    }
    c = std::move(next);
  }
  return c;
}

std::uint64_t projected_vertex_count(const SubstitutionMatrix& m, int root_label,
                                     int depth) {
  const int a = m.label_count();
  if (root_label < 0 || root_label >= a) {
    throw MalformedInputError("projected_vertex_count: root label out of range");
  }
  if (depth < 0) throw MalformedInputError("projected_vertex_count: negative depth");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> c(a, 0);
  c[root_label] = 1;
  std::uint64_t total = 1;
  for (int step = 0; step < depth; ++step) {
    std::vector<std::uint64_t> next(a, 0);
    bool saturated = false;
    for (int l = 0; l < a && !saturated; ++l) {
      for (int k = 0; k < a; ++k) {
        const std::uint64_t e = static_cast<std::uint64_t>(m.entry(l, k));
        if (e == 0 || c[k] == 0) continue;
        std::uint64_t term = 0, sum = 0;
        if (__builtin_mul_overflow(e, c[k], &term) ||
            __builtin_add_overflow(next[l], term, &sum)) {
          saturated = true;
          break;
        }
        next[l] = sum;
      }
    }
    if (saturated) return kMax;
    std::uint64_t level = 0;
    for (std::uint64_t v : next) {
      if (__builtin_add_overflow(level, v, &level)) return kMax;
    }
    if (__builtin_add_overflow(total, level, &total)) return kMax;
    c = std::move(next);
  }
  return total;
}

}  // namespace conetree
