#include "conetree/galton_watson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>

#include "conetree/detail/parallel.hpp"
#include "conetree/rng.hpp"
#include "conetree/truncation.hpp"

namespace conetree {

BranchingReport validate_process(const BranchingProcess& b) {
  BranchingReport r;
  r.b1 = true;
  r.b2 = true;
  if (b.label_count <= 0 ||
      static_cast<int>(b.laws.size()) != b.label_count) {
    r.b1 = false;
    return r;
  }
  for (int k = 0; k < b.label_count && (r.b1 && r.b2); ++k) {
    const auto& law = b.laws[k];
    if (law.empty()) {
      r.b1 = false;
      r.b1_witness = k;
      break;
    }
    double total = 0.0;
    for (const OffspringConfig& cfg : law) {
      if (static_cast<int>(cfg.counts.size()) != b.label_count ||
          !(cfg.prob >= 0.0) || !std::isfinite(cfg.prob)) {
        r.b1 = false;
        r.b1_witness = k;
        break;
      }
      total += cfg.prob;
      std::uint64_t size = 0;
      for (std::uint32_t c : cfg.counts) size += c;
      if (size == 0 && cfg.prob > 0.0) {
        r.b2 = false;
        r.b2_witness = k;
      }
    }
    if (r.b1 && std::abs(total - 1.0) > 1e-12) {
      r.b1 = false;
      r.b1_witness = k;
    }
  }
  return r;
}

void require_valid(const BranchingProcess& b) {
  const BranchingReport r = validate_process(b);
  if (!r.b1) {
    throw DomainError("branching process rejected: law " +
                      (r.b1_witness ? std::to_string(*r.b1_witness) : std::string("?")) +
                      " is not a probability distribution over well-formed configurations");
  }
  if (!r.b2) {
    throw DomainError("branching process rejected: law " +
                      std::to_string(*r.b2_witness) +
                      " puts mass on the empty configuration");
  }
}

BranchingProcess embed_substitution(const SubstitutionMatrix& m) {
  const int a = m.label_count();
  BranchingProcess b;
  b.label_count = a;
  b.laws.resize(a);
  for (int k = 0; k < a; ++k) {
    OffspringConfig cfg;
    cfg.counts.resize(a);
    for (int l = 0; l < a; ++l) cfg.counts[l] = static_cast<std::uint32_t>(m.entry(l, k));
    cfg.prob = 1.0;
    b.laws[k].push_back(std::move(cfg));
  }
  return b;
}

namespace {

std::vector<OffspringConfig> canonical_law(const std::vector<OffspringConfig>& law) {
  std::vector<OffspringConfig> out = law;
  std::sort(out.begin(), out.end(), [](const OffspringConfig& x, const OffspringConfig& y) {
    return x.counts < y.counts;
  });
  // Merge duplicate configurations.
  std::vector<OffspringConfig> merged;
  for (OffspringConfig& cfg : out) {
    if (!merged.empty() && merged.back().counts == cfg.counts) {
      merged.back().prob += cfg.prob;
    } else {
      merged.push_back(std::move(cfg));
    }
  }
  return merged;
}

double config_norm_pow(const std::vector<std::uint32_t>& counts, double p) {
  double size = 0.0;
  for (std::uint32_t c : counts) size += c;
  return std::pow(size, p);
}

}  // namespace

double d_p_distance(const BranchingProcess& a, const BranchingProcess& b, double p) {
  if (a.label_count != b.label_count) {
    throw MalformedInputError("d_p_distance: processes have different alphabets");
  }
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw MalformedInputError("d_p_distance: p must be nonnegative");
  }
  require_valid(a);
  require_valid(b);
  double worst = 0.0;
  for (int k = 0; k < a.label_count; ++k) {
    const auto la = canonical_law(a.laws[k]);
    const auto lb = canonical_law(b.laws[k]);
    double total = 0.0;
    std::size_t i = 0, j = 0;
    while (i < la.size() || j < lb.size()) {
      if (j == lb.size() || (i < la.size() && la[i].counts < lb[j].counts)) {
        total += la[i].prob * config_norm_pow(la[i].counts, p);
        ++i;
      } else if (i == la.size() || lb[j].counts < la[i].counts) {
        total += lb[j].prob * config_norm_pow(lb[j].counts, p);
        ++j;
      } else {
        total += std::abs(la[i].prob - lb[j].prob) * config_norm_pow(la[i].counts, p);
        ++i;
        ++j;
      }
    }
    worst = std::max(worst, total);
  }
  return worst;
}

namespace {

std::size_t draw_config(const std::vector<OffspringConfig>& law, std::uint64_t bits) {
  const double u = uniform_open01(bits);
  double cum = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    cum += law[i].prob;
    if (u <= cum) return i;
  }
  return law.size() - 1;
}

// Expected total size of a truncated realization, computed on the mean
// offspring matrix; saturates well past any sensible cap.
double expected_vertex_count(const BranchingProcess& b, int root_label, int depth) {
  const int a = b.label_count;
  std::vector<double> mean(std::size_t(a) * a, 0.0);
  for (int k = 0; k < a; ++k) {
    for (const OffspringConfig& cfg : b.laws[k]) {
      for (int l = 0; l < a; ++l) {
        mean[std::size_t(l) * a + k] += cfg.prob * cfg.counts[l];
      }
    }
  }
  std::vector<double> level(a, 0.0);
  level[root_label] = 1.0;
  double total = 1.0;
  for (int d = 0; d < depth; ++d) {
    std::vector<double> next(a, 0.0);
    for (int l = 0; l < a; ++l) {
      for (int k = 0; k < a; ++k) next[l] += mean[std::size_t(l) * a + k] * level[k];
    }
    level = next;
    for (double v : level) total += v;
    if (total > 1e18) return 1e18;
  }
  return total;
}

}  // namespace

TruncatedTree sample_realization(const BranchingProcess& b, int root_label, int depth,
                                 std::uint64_t seed, std::uint64_t sample_index,
                                 std::uint64_t vertex_cap) {
  require_valid(b);
  const int a = b.label_count;
  if (root_label < 0 || root_label >= a) {
    throw MalformedInputError("sample_realization: root label out of range");
  }
  if (depth < 0 || depth > 0xffff) {
    throw MalformedInputError("sample_realization: depth out of range");
  }
  const std::uint64_t cap = std::min<std::uint64_t>(vertex_cap, 0xfffffffeull);
  const double expected = expected_vertex_count(b, root_label, depth);
  if (expected > static_cast<double>(cap)) {
    throw ResourceLimitError("sample_realization: expected size " +
                                 std::to_string(expected) + " exceeds cap " +
                                 std::to_string(cap),
                             static_cast<std::uint64_t>(std::min(expected, 1e18)), cap);
  }

  const std::uint64_t key = sample_key(seed, sample_index);
  TruncatedTree t;
  t.depth_cap = depth;
  t.label_count = a;
  t.level_offset.assign(std::size_t(depth) + 2, 0);
  t.label.push_back(static_cast<std::uint16_t>(root_label));
  t.parent.push_back(TruncatedTree::kNoParent);
  t.depth.push_back(0);
  t.level_offset[1] = 1;

  std::uint64_t level_begin = 0, level_end = 1;
  for (int d = 0; d < depth; ++d) {
    for (std::uint64_t v = level_begin; v < level_end; ++v) {
      t.child_begin.push_back(static_cast<std::uint32_t>(t.label.size()));
      const auto& law = b.laws[t.label[v]];
      const OffspringConfig& cfg = law[draw_config(law, counter_draw(key, v, 2))];
      for (int l = 0; l < a; ++l) {
        for (std::uint32_t c = 0; c < cfg.counts[l]; ++c) {
          t.label.push_back(static_cast<std::uint16_t>(l));
          t.parent.push_back(static_cast<std::uint32_t>(v));
          t.depth.push_back(static_cast<std::uint16_t>(d + 1));
        }
      }
      if (t.label.size() > cap) {
        throw ResourceLimitError("sample_realization: realization exceeded the vertex cap",
                                 t.label.size(), cap);
      }
    }
    level_begin = level_end;
    level_end = t.label.size();
    t.level_offset[std::size_t(d) + 2] = level_end;
  }
  while (t.child_begin.size() <= t.label.size()) {
    t.child_begin.push_back(static_cast<std::uint32_t>(t.label.size()));
  }
  return t;
}

FitReport goodness_of_fit(const BranchingProcess& model, int root_label,
                          std::int64_t n, std::uint64_t seed,
                          const BranchingProcess* sampling) {
  require_valid(model);
  if (sampling != nullptr) require_valid(*sampling);
  if (root_label < 0 || root_label >= model.label_count) {
    throw MalformedInputError("goodness_of_fit: root label out of range");
  }
  if (sampling != nullptr && sampling->label_count != model.label_count) {
    throw MalformedInputError("goodness_of_fit: sampling process alphabet mismatch");
  }
  const std::vector<OffspringConfig> cells = canonical_law(model.laws[root_label]);
  for (const OffspringConfig& cell : cells) {
    if (static_cast<double>(n) * cell.prob < 50.0) {
      throw PreconditionError(
          "goodness_of_fit: a model cell expects fewer than 50 draws; increase n");
    }
  }
  const auto& draw_law = (sampling != nullptr) ? sampling->laws[root_label]
                                               : model.laws[root_label];

  std::vector<std::int64_t> observed(cells.size(), 0);
  std::int64_t unexpected = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::uint64_t key = sample_key(seed, static_cast<std::uint64_t>(i));
    const OffspringConfig& cfg = draw_law[draw_config(draw_law, counter_draw(key, 0, 2))];
    bool matched = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].counts == cfg.counts) {
        ++observed[c];
        matched = true;
        break;
      }
    }
    if (!matched) ++unexpected;
  }

  FitReport report;
  report.n = n;
  report.unexpected = unexpected;
  if (unexpected > 0) {
    // Mass outside the support is impossible under the model.
    report.statistic = std::numeric_limits<double>::infinity();
    report.dof = static_cast<int>(cells.size());
    report.p_value = 0.0;
    return report;
  }
  double stat = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double expect = static_cast<double>(n) * cells[c].prob;
    const double diff = static_cast<double>(observed[c]) - expect;
    stat += diff * diff / expect;
  }
  report.statistic = stat;
  report.dof = static_cast<int>(cells.size()) - 1;
  if (report.dof == 0) {
    report.p_value = 1.0;
  } else {
    const boost::math::chi_squared dist(report.dof);
    report.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  }
  return report;
}

namespace {

bool matches_reference(const TruncatedTree& t, const SubstitutionMatrix& m,
                       int good_depth) {
  const int a = m.label_count();
  std::vector<std::int64_t> counts(a);
  for (std::size_t v = 0; v < t.size(); ++v) {
    if (t.depth[v] >= good_depth || t.depth[v] >= t.depth_cap) break;
    std::fill(counts.begin(), counts.end(), 0);
    const auto [lo, hi] = t.children(static_cast<std::uint32_t>(v));
    for (std::uint32_t c = lo; c < hi; ++c) ++counts[t.label[c]];
    for (int l = 0; l < a; ++l) {
      if (counts[l] != m.entry(l, t.label[v])) return false;
    }
  }
  return true;
}

}  // namespace

GwMomentEntry gw_moment_statistic(const BranchingProcess& b,
                                  const SubstitutionMatrix& m_ref, int root_label,
                                  Complex z, double p, std::int64_t n_samples,
                                  int depth, std::uint64_t seed,
                                  const SolverSettings& s, int good_depth, int workers,
                                  std::uint64_t vertex_cap) {
  require_valid(b);
  require_valid(m_ref);
  if (b.label_count != m_ref.label_count()) {
    throw MalformedInputError("gw_moment_statistic: alphabet mismatch");
  }
  if (root_label < 0 || root_label >= b.label_count) {
    throw MalformedInputError("gw_moment_statistic: root label out of range");
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw MalformedInputError("gw_moment_statistic: p must be positive");
  }
  if (n_samples < 2) {
    throw PreconditionError("gw_moment_statistic: need at least 2 samples");
  }
  if (good_depth < 0) {
    throw MalformedInputError("gw_moment_statistic: good_depth must be nonnegative");
  }
  require_halfplane(z, "gw_moment_statistic");

  const GreenVector fix = solve_green(m_ref, z, s);
  const Complex ref_value = fix.values[root_label];
  const double baseline =
      std::pow(gamma_dist(truncated_green(m_ref, root_label, depth, z), ref_value), p);

  const std::size_t n = static_cast<std::size_t>(n_samples);
  std::vector<double> vals(n, 0.0);
  std::vector<char> good(n, 0);
  constexpr std::size_t kChunk = 4;
  const std::size_t jobs = (n + kChunk - 1) / kChunk;
  detail::run_on_workers(workers, jobs, [&](std::size_t job) {
    const std::size_t lo = job * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      const TruncatedTree t = sample_realization(b, root_label, depth, seed, i, vertex_cap);
      vals[i] = std::pow(gamma_dist(exact_forward_green(t, z), ref_value), p);
      good[i] = matches_reference(t, m_ref, good_depth) ? 1 : 0;
    }
  });

  GwMomentEntry e;
  e.eta = z.imag();
  e.energy = z.real();
  e.n = n_samples;
  long double sum = 0.0L;
  for (double v : vals) sum += v;
  e.mean = static_cast<double>(sum / static_cast<long double>(n));
  long double sq = 0.0L;
  for (double v : vals) {
    const long double d = static_cast<long double>(v) - e.mean;
    sq += d * d;
  }
  e.std_error = (n > 1) ? std::sqrt(static_cast<double>(sq / (n - 1) / n)) : 0.0;
  e.p = p;
  e.depth = depth;
  e.seed = seed;
  e.baseline = baseline;
  std::int64_t good_total = 0;
  for (char flag : good) good_total += flag;
  e.good_fraction = static_cast<double>(good_total) / static_cast<double>(n);
  e.d_p = d_p_distance(b, embed_substitution(m_ref), p);
  return e;
}

}  // namespace conetree
