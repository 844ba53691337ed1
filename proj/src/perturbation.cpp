#include "conetree/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "conetree/detail/parallel.hpp"
#include "conetree/rng.hpp"
#include "conetree/truncation.hpp"

namespace conetree {

void validate_distribution(const Distribution& d) {
  if (const auto* u = std::get_if<UniformDist>(&d)) {
    if (!std::isfinite(u->lo) || !std::isfinite(u->hi) || u->lo > u->hi ||
        u->lo < -1.0 || u->hi > 1.0) {
      throw MalformedInputError("uniform distribution: bounds must satisfy -1 <= lo <= hi <= 1");
    }
    return;
  }
  const auto& pts = std::get<DiscreteDist>(d).points;
  if (pts.empty()) throw MalformedInputError("discrete distribution: no support points");
  double total = 0.0;
  for (const auto& [value, prob] : pts) {
    if (!std::isfinite(value) || value <= -1.0 || value >= 1.0) {
      throw MalformedInputError("discrete distribution: values must lie strictly inside (-1, 1)");
    }
    if (!(prob >= 0.0) || !std::isfinite(prob)) {
      throw MalformedInputError("discrete distribution: negative probability");
    }
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw MalformedInputError("discrete distribution: probabilities must sum to 1");
  }
}

double sample_distribution(const Distribution& d, std::uint64_t bits) {
  const double u = uniform_open01(bits);
  if (const auto* uni = std::get_if<UniformDist>(&d)) {
    return uni->lo + (uni->hi - uni->lo) * u;
  }
  const auto& pts = std::get<DiscreteDist>(d).points;
  double cum = 0.0;
  for (const auto& [value, prob] : pts) {
    cum += prob;
    if (u <= cum) return value;
  }
  return pts.back().first;
}

namespace {

const Distribution& dist_for(const std::vector<Distribution>& dists, int label) {
  return dists.size() == 1 ? dists[0] : dists[label];
}

}  // namespace

void validate_model(const PerturbationModel& pm, int label_count) {
  if (!(pm.lambda >= 0.0) || pm.lambda > 1.0) {
    throw MalformedInputError("perturbation model: lambda must lie in [0, 1]");
  }
  for (const auto* dists : {&pm.potential, &pm.edge}) {
    if (dists->size() != 1 && static_cast<int>(dists->size()) != label_count) {
      throw MalformedInputError(
          "perturbation model: need one distribution or one per label");
    }
    for (const Distribution& d : *dists) validate_distribution(d);
  }
}

TruncatedTree sample_decorations(const TruncatedTree& base, const PerturbationModel& pm,
                                 std::uint64_t seed, std::uint64_t sample_index) {
  validate_model(pm, base.label_count);
  TruncatedTree out = base;
  const std::size_t n = base.size();
  out.potential.resize(n);
  out.weight.resize(n);
  const std::uint64_t key = sample_key(seed, sample_index);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = out.label[i];
    out.potential[i] =
        pm.lambda * sample_distribution(dist_for(pm.potential, label),
                                        counter_draw(key, i, 0));
    out.weight[i] =
        (i == 0) ? 1.0
                 : 1.0 + pm.lambda * sample_distribution(dist_for(pm.edge, label),
                                                         counter_draw(key, i, 1));
  }
  return out;
}

namespace {

struct StreamContext {
  const SubstitutionMatrix& m;
  const PerturbationModel& pm;
  Complex z;
  std::uint64_t key;
  int depth;
  std::vector<std::uint64_t> level_offset;  // BFS index of each level's first vertex
  std::vector<std::uint64_t> next_in_level;
  // Per-label child sums past the cut (clean fixed-point tail); null means a
  // hard truncation with childless leaves.
  const std::vector<Complex>* cut = nullptr;
};

// Depth-first evaluation of one realization. Pre-order traversal visits the
// vertices of each level in breadth-first order, so the per-level counters
// recover exactly the BFS vertex index that sample_decorations would use for
// the same draw. Returns the vertex value and its parent edge's squared weight.
std::pair<Complex, double> stream_eval(StreamContext& ctx, int label, int level) {
  const std::uint64_t vertex = ctx.level_offset[level] + ctx.next_in_level[level]++;
  const double v = ctx.pm.lambda *
                   sample_distribution(dist_for(ctx.pm.potential, label),
                                       counter_draw(ctx.key, vertex, 0));
  Complex sum{0.0, 0.0};
  if (level < ctx.depth) {
    const int a = ctx.m.label_count();
    for (int l = 0; l < a; ++l) {
      for (std::int64_t c = 0; c < ctx.m.entry(l, label); ++c) {
        const auto [g, w2] = stream_eval(ctx, l, level + 1);
        sum += w2 * g;
      }
    }
  } else if (ctx.cut != nullptr) {
    sum = (*ctx.cut)[label];
  }
  const Complex g = phi_from_sum(ctx.z, v, sum);
  double w2 = 1.0;
  if (level > 0) {
    const double t = 1.0 + ctx.pm.lambda *
                               sample_distribution(dist_for(ctx.pm.edge, label),
                                                   counter_draw(ctx.key, vertex, 1));
    w2 = t * t;
  }
  return {g, w2};
}

// Per-label sums of fixed-point children, accumulated in the same
// ascending-label, one-copy-at-a-time order as every other child sum so the
// zero-coupling recursion stays bit-identical to the clean one.
std::vector<Complex> boundary_child_sums(const SubstitutionMatrix& m,
                                         const std::vector<Complex>& fix) {
  const int a = m.label_count();
  std::vector<Complex> cut(a);
  for (int j = 0; j < a; ++j) {
    Complex sum{0.0, 0.0};
    for (int l = 0; l < a; ++l) {
      for (std::int64_t c = 0; c < m.entry(l, j); ++c) sum += fix[l];
    }
    cut[j] = sum;
  }
  return cut;
}

// The coupling-off instance of the decorated recursion from the same cut:
// the reference the realizations are measured against. Pinning the tail at
// the fixed point keeps the reference free of truncation resonances, so the
// gamma distance picks up the disorder alone, uniformly as Im z -> 0.
Complex clean_reference(const SubstitutionMatrix& m, int root_label, int depth,
                        Complex z, const std::vector<Complex>& cut) {
  const int a = m.label_count();
  std::vector<Complex> level(a), next(a);
  for (int j = 0; j < a; ++j) level[j] = phi_from_sum(z, 0.0, cut[j]);
  for (int lev = depth - 1; lev >= 0; --lev) {
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

std::vector<std::uint64_t> level_offsets(const SubstitutionMatrix& m, int root_label,
                                         int depth) {
  std::vector<std::uint64_t> offsets(std::size_t(depth) + 2, 0);
  std::uint64_t running = 0;
  for (int d = 0; d <= depth; ++d) {
    std::uint64_t level_total = 0;
    for (std::uint64_t c : sphere_count(m, root_label, d)) level_total += c;
    offsets[d] = running;
    running += level_total;
  }
  offsets[std::size_t(depth) + 1] = running;
  return offsets;
}

void check_cap(const SubstitutionMatrix& m, int root_label, int depth,
               std::uint64_t vertex_cap, const char* what) {
  const std::uint64_t projected = projected_vertex_count(m, root_label, depth);
  if (projected > vertex_cap) {
    throw ResourceLimitError(std::string(what) + ": realization needs " +
                                 std::to_string(projected) + " vertices, cap is " +
                                 std::to_string(vertex_cap),
                             projected, vertex_cap);
  }
}

}  // namespace

Complex perturbed_green(const SubstitutionMatrix& m, int root_label, int depth,
                        const PerturbationModel& pm, Complex z, std::uint64_t seed,
                        std::uint64_t sample_index, std::uint64_t vertex_cap) {
  require_valid(m);
  validate_model(pm, m.label_count());
  require_halfplane(z, "perturbed_green");
  if (root_label < 0 || root_label >= m.label_count()) {
    throw MalformedInputError("perturbed_green: root label out of range");
  }
  if (depth < 0 || depth > 0xffff) {
    throw MalformedInputError("perturbed_green: depth out of range");
  }
  if (pm.lambda == 0.0) {
    // Zero coupling zeroes every decoration, and the decorated recursion with
    // potential 0 and weight 1 reproduces the clean one bit for bit.
    return truncated_green(m, root_label, depth, z);
  }
  check_cap(m, root_label, depth, vertex_cap, "perturbed_green");
  StreamContext ctx{m,
                    pm,
                    z,
                    sample_key(seed, sample_index),
                    depth,
                    level_offsets(m, root_label, depth),
                    std::vector<std::uint64_t>(std::size_t(depth) + 1, 0)};
  return stream_eval(ctx, root_label, 0).first;
}

namespace {

// Mean and standard error in sample-index order; extended precision keeps
// sums of up to ~2k equal addends exact.
std::pair<double, double> mean_and_se(const std::vector<double>& vals) {
  const std::size_t n = vals.size();
  if (n == 0) return {0.0, 0.0};
  long double sum = 0.0L;
  for (double v : vals) sum += v;
  const double mean = static_cast<double>(sum / n);
  if (n < 2) return {mean, 0.0};
  long double sq = 0.0L;
  for (double v : vals) {
    const long double d = static_cast<long double>(v) - mean;
    sq += d * d;
  }
  const double se = std::sqrt(static_cast<double>(sq / (n - 1) / n));
  return {mean, se};
}

MomentEntry make_entry(Complex z, double p, const PerturbationModel& pm, int depth,
                       std::uint64_t seed, double baseline,
                       const std::vector<double>& vals) {
  MomentEntry e;
  e.eta = z.imag();
  e.energy = z.real();
  e.n = static_cast<std::int64_t>(vals.size());
  std::tie(e.mean, e.std_error) = mean_and_se(vals);
  e.p = p;
  e.lambda = pm.lambda;
  e.depth = depth;
  e.seed = seed;
  e.baseline = baseline;
  return e;
}

}  // namespace

MomentEntry moment_statistic(const SubstitutionMatrix& m, int root_label, Complex z,
                             const PerturbationModel& pm, double p,
                             std::int64_t n_samples, int depth, std::uint64_t seed,
                             const SolverSettings& s, int workers,
                             std::uint64_t vertex_cap) {
  require_valid(m);
  validate_model(pm, m.label_count());
  validate_settings(s);
  require_halfplane(z, "moment_statistic");
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw MalformedInputError("moment_statistic: p must be positive");
  }
  if (n_samples < 2) {
    throw PreconditionError("moment_statistic: need at least 2 samples");
  }
  if (depth < 0 || depth > 0xffff) {
    throw MalformedInputError("moment_statistic: depth out of range");
  }
  if (root_label < 0 || root_label >= m.label_count()) {
    throw MalformedInputError("moment_statistic: root label out of range");
  }
  if (pm.lambda != 0.0) check_cap(m, root_label, depth, vertex_cap, "moment_statistic");

  const GreenVector fix = solve_green(m, z, s);
  const double baseline = std::pow(
      gamma_dist(truncated_green(m, root_label, depth, z), fix.values[root_label]), p);
  const std::vector<Complex> cut = boundary_child_sums(m, fix.values);
  const Complex ref = clean_reference(m, root_label, depth, z, cut);

  const std::size_t n = static_cast<std::size_t>(n_samples);
  std::vector<double> vals(n, 0.0);
  if (pm.lambda != 0.0) {
    const std::vector<std::uint64_t> offsets = level_offsets(m, root_label, depth);
    std::vector<char> done(n, 0);
    constexpr std::size_t kChunk = 8;
    const std::size_t jobs = (n + kChunk - 1) / kChunk;
    try {
      detail::run_on_workers(workers, jobs, [&](std::size_t job) {
        const std::size_t lo = job * kChunk;
        const std::size_t hi = std::min(n, lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) {
          StreamContext ctx{m,
                            pm,
                            z,
                            sample_key(seed, i),
                            depth,
                            offsets,
                            std::vector<std::uint64_t>(std::size_t(depth) + 1, 0),
                            &cut};
          const Complex g = stream_eval(ctx, root_label, 0).first;
          vals[i] = std::pow(gamma_unchecked(g, ref), p);
          done[i] = 1;
        }
      });
    } catch (const std::exception& err) {
      std::vector<double> partial;
      for (std::size_t i = 0; i < n; ++i) {
        if (done[i]) partial.push_back(vals[i]);
      }
      throw BatchAbortedError(
          std::string("moment_statistic: batch aborted: ") + err.what(),
          make_entry(z, p, pm, depth, seed, baseline, partial));
    }
  }
  return make_entry(z, p, pm, depth, seed, baseline, vals);
}

int depth_heuristic(const SubstitutionMatrix& m, int root_label, double eta,
                    std::uint64_t vertex_cap) {
  require_valid(m);
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw MalformedInputError("depth_heuristic: eta must be positive");
  }
  int depth = static_cast<int>(std::min(60.0, std::ceil(5.0 / eta)));
  depth = std::max(depth, 1);
  while (depth > 1 && projected_vertex_count(m, root_label, depth) > vertex_cap) {
    --depth;
  }
  return depth;
}

namespace {

void band_warnings(double energy, const BandList& bands, double margin, bool regular,
                   std::vector<std::string>& warnings) {
  bool inside = false;
  for (const Band& b : bands) {
    if (energy >= b.lo && energy <= b.hi) inside = true;
  }
  if (!inside) {
    warnings.push_back("energy " + std::to_string(energy) +
                       " lies outside every detected band");
    return;
  }
  double dist = std::numeric_limits<double>::infinity();
  for (const Band& b : bands) {
    dist = std::min({dist, std::abs(energy - b.lo), std::abs(energy - b.hi)});
  }
  if (!regular) dist = std::min(dist, std::abs(energy));
  if (dist < margin) {
    warnings.push_back("energy " + std::to_string(energy) +
                       " is within " + std::to_string(margin) +
                       " of a band edge or critical point");
  }
}

bool bounded_flag(const std::vector<MomentEntry>& entries) {
  if (entries.size() < 2) return true;
  const double m1 = entries[entries.size() - 2].mean;
  const double m2 = entries[entries.size() - 1].mean;
  if (m1 == 0.0 && m2 == 0.0) return true;
  const double lo = std::min(m1, m2), hi = std::max(m1, m2);
  if (!(lo > 0.0)) return false;
  return hi / lo < 2.0;
}

}  // namespace

MomentReport eta_sweep(const SubstitutionMatrix& m, int root_label, double energy,
                       const PerturbationModel& pm, double p,
                       const std::vector<double>& etas, std::int64_t n_samples,
                       std::uint64_t seed, const SolverSettings& s,
                       std::optional<int> fixed_depth, const BandList* bands,
                       double band_margin, std::uint64_t vertex_cap, int workers) {
  if (etas.empty()) throw MalformedInputError("eta_sweep: no etas");
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : etas) {
    if (!(eta > 0.0) || !(eta < prev)) {
      throw MalformedInputError("eta_sweep: etas must be positive and strictly decreasing");
    }
    prev = eta;
  }
  MomentReport report;
  if (bands != nullptr) {
    band_warnings(energy, *bands, band_margin, m.is_regular(), report.warnings);
  }
  for (double eta : etas) {
    const int depth =
        fixed_depth.has_value() ? *fixed_depth
                                : depth_heuristic(m, root_label, eta, vertex_cap);
    report.entries.push_back(moment_statistic(m, root_label, Complex{energy, eta}, pm,
                                              p, n_samples, depth, seed, s, workers,
                                              vertex_cap));
  }
  report.bounded = bounded_flag(report.entries);
  return report;
}

int RadialPotential::cutoff() const {
  std::size_t longest = 0;
  for (const auto& row : values) longest = std::max(longest, row.size());
  return static_cast<int>(longest);
}

double RadialPotential::at(int label, int generation) const {
  const auto& row = values[label];
  return (generation < static_cast<int>(row.size())) ? row[generation] : 0.0;
}

void validate_radial(const RadialPotential& v, int label_count) {
  if (static_cast<int>(v.values.size()) != label_count) {
    throw MalformedInputError("radial potential: need one value row per label");
  }
  for (const auto& row : v.values) {
    for (double x : row) {
      if (!std::isfinite(x) || std::abs(x) > 1.0) {
        throw MalformedInputError("radial potential: values must lie in [-1, 1]");
      }
    }
  }
}

namespace {

Complex radial_from_boundary(const SubstitutionMatrix& m, int root_label,
                             const RadialPotential& v, double lambda, Complex z,
                             const std::vector<Complex>& boundary) {
  const int a = m.label_count();
  std::vector<Complex> level = boundary, next(a);
  for (int gen = v.cutoff() - 1; gen >= 0; --gen) {
    for (int j = 0; j < a; ++j) {
      Complex sum{0.0, 0.0};
      for (int l = 0; l < a; ++l) {
        for (std::int64_t c = 0; c < m.entry(l, j); ++c) sum += level[l];
      }
      next[j] = phi_from_sum(z, lambda * v.at(j, gen), sum);
    }
    level = next;
  }
  return level[root_label];
}

}  // namespace

Complex radial_green(const SubstitutionMatrix& m, int root_label,
                     const RadialPotential& v, double lambda, Complex z,
                     const SolverSettings& s) {
  require_valid(m);
  validate_radial(v, m.label_count());
  if (!(lambda >= 0.0) || lambda > 1.0) {
    throw MalformedInputError("radial_green: lambda must lie in [0, 1]");
  }
  if (root_label < 0 || root_label >= m.label_count()) {
    throw MalformedInputError("radial_green: root label out of range");
  }
  const GreenVector fix = solve_green(m, z, s);
  return radial_from_boundary(m, root_label, v, lambda, z, fix.values);
}

MomentReport radial_sweep(const SubstitutionMatrix& m, int root_label,
                          const RadialPotential& v, double lambda, double energy,
                          const std::vector<double>& etas, double p,
                          const SolverSettings& s) {
  require_valid(m);
  validate_radial(v, m.label_count());
  if (etas.empty()) throw MalformedInputError("radial_sweep: no etas");
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw MalformedInputError("radial_sweep: p must be positive");
  }
  MomentReport report;
  for (double eta : etas) {
    const Complex z{energy, eta};
    const GreenVector fix = solve_green(m, z, s);
    const Complex g = radial_from_boundary(m, root_label, v, lambda, z, fix.values);
    MomentEntry e;
    e.eta = eta;
    e.energy = energy;
    e.n = 1;
    e.mean = std::pow(gamma_dist(g, fix.values[root_label]), p);
    e.std_error = 0.0;
    e.p = p;
    e.lambda = lambda;
    e.depth = v.cutoff();
    e.seed = 0;
    e.baseline = 0.0;
    e.im_green = g.imag();
    report.entries.push_back(e);
  }
  report.bounded = bounded_flag(report.entries);
  return report;
}

}  // namespace conetree
