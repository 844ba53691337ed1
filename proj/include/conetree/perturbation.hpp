#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "conetree/green.hpp"
#include "conetree/tree.hpp"

namespace conetree {

// Distributions for decoration draws. Values must stay strictly inside
// (-1, 1): uniform sampling maps the open unit interval affinely, so the
// closed bounds themselves are never attained.
struct UniformDist {
  double lo = -1.0;
  double hi = 1.0;
};

struct DiscreteDist {
  std::vector<std::pair<double, double>> points;  // (value, probability)
};

using Distribution = std::variant<UniformDist, DiscreteDist>;

void validate_distribution(const Distribution& d);
double sample_distribution(const Distribution& d, std::uint64_t bits);

// Vertex potentials v and edge variables theta, scaled by a common coupling:
// a vertex gets potential lambda*v, the edge to its parent gets weight
// 1 + lambda*theta. One distribution broadcasts to every label; otherwise
// one entry per label.
struct PerturbationModel {
  double lambda = 0.0;
  std::vector<Distribution> potential{UniformDist{}};
  std::vector<Distribution> edge{UniformDist{}};
};

void validate_model(const PerturbationModel& pm, int label_count);

// Decorates a copy of `base` with draws keyed by (seed, sample_index, vertex
// index); the base tree's layout is untouched.
TruncatedTree sample_decorations(const TruncatedTree& base, const PerturbationModel& pm,
                                 std::uint64_t seed, std::uint64_t sample_index);

// Root value of one random realization at depth `depth`, streamed without
// materializing the tree. Bit-identical to exact_forward_green over
// sample_decorations(build_tree(...)); with lambda == 0 it equals the
// undecorated truncation value exactly.
Complex perturbed_green(const SubstitutionMatrix& m, int root_label, int depth,
                        const PerturbationModel& pm, Complex z, std::uint64_t seed,
                        std::uint64_t sample_index,
                        std::uint64_t vertex_cap = kDefaultVertexCap);

struct MomentEntry {
  double eta = 0.0;
  double energy = 0.0;
  std::int64_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double p = 0.0;
  double lambda = 0.0;
  int depth = 0;
  std::uint64_t seed = 0;
  double baseline = 0.0;   // gamma^p between the clean truncation and the fixed point
  double im_green = 0.0;   // radial rows only
};

// A batch failed part-way; carries the statistic over the samples that
// completed before the failure.
class BatchAbortedError : public std::runtime_error {
 public:
  BatchAbortedError(std::string msg, MomentEntry partial)
      : std::runtime_error(std::move(msg)), partial(partial) {}

  MomentEntry partial;
};

// Monte Carlo mean of gamma(realization, clean reference)^p at z over
// n_samples realizations. Realizations carry disorder on the first `depth`
// levels and keep the unperturbed fixed point beyond the cut (same scheme as
// radial_green's boundary), so the reference -- the identical recursion with
// the coupling off -- stays at the fixed point and the distance measures the
// disorder alone, uniformly as Im z -> 0. Sample values are independent of
// worker count.
MomentEntry moment_statistic(const SubstitutionMatrix& m, int root_label, Complex z,
                             const PerturbationModel& pm, double p,
                             std::int64_t n_samples, int depth, std::uint64_t seed,
                             const SolverSettings& s = {}, int workers = 1,
                             std::uint64_t vertex_cap = kDefaultVertexCap);

// Deepest truncation reaching toward ceil(5/eta) levels (at most 60) that
// stays under the vertex cap.
int depth_heuristic(const SubstitutionMatrix& m, int root_label, double eta,
                    std::uint64_t vertex_cap = kDefaultVertexCap);

struct MomentReport {
  std::vector<MomentEntry> entries;
  bool bounded = false;  // last two means within a factor of 2
  std::vector<std::string> warnings;
};

// moment_statistic per eta at fixed energy. Depth follows the heuristic
// unless `fixed_depth` pins it. When `bands` is given, energies outside the
// bands or within `band_margin` of a band edge (or of 0 for a non-regular
// matrix) produce warnings.
MomentReport eta_sweep(const SubstitutionMatrix& m, int root_label, double energy,
                       const PerturbationModel& pm, double p,
                       const std::vector<double>& etas, std::int64_t n_samples,
                       std::uint64_t seed, const SolverSettings& s = {},
                       std::optional<int> fixed_depth = std::nullopt,
                       const BandList* bands = nullptr, double band_margin = 0.1,
                       std::uint64_t vertex_cap = kDefaultVertexCap, int workers = 1);

// Deterministic radially symmetric potential: values[label][generation],
// zero from `cutoff()` outward.
struct RadialPotential {
  std::vector<std::vector<double>> values;

  int cutoff() const;
  double at(int label, int generation) const;
};

void validate_radial(const RadialPotential& v, int label_count);

// Forward value at the root under potential lambda*v. Beyond the cutoff the
// forward values equal the unperturbed fixed point, so the recursion starts
// there and runs inward over finitely many levels.
Complex radial_green(const SubstitutionMatrix& m, int root_label,
                     const RadialPotential& v, double lambda, Complex z,
                     const SolverSettings& s = {});

// gamma(radial value, fixed point)^p per eta; rows carry Im of the radial
// value in `im_green`.
MomentReport radial_sweep(const SubstitutionMatrix& m, int root_label,
                          const RadialPotential& v, double lambda, double energy,
                          const std::vector<double>& etas, double p,
                          const SolverSettings& s = {});

}  // namespace conetree
