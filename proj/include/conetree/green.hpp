#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "conetree/halfplane.hpp"
#include "conetree/substitution.hpp"

namespace conetree {

std::vector<double> default_eta_schedule(double eta_floor);

struct SolverSettings {
  double tolerance = 1e-12;           // step size in the gamma metric
  std::int64_t max_iterations = 100000;
  double damping = 1.0;               // initial mixing weight, halved on oscillation
  double eta_floor = 1e-6;
  std::vector<double> eta_schedule = default_eta_schedule(1e-6);
};

// Throws MalformedInputError on out-of-range fields or a schedule that is not
// strictly decreasing toward the floor.
void validate_settings(const SolverSettings& s);

struct GreenVector {
  Complex z;
  std::vector<Complex> values;  // one entry per label
  double residual = 0.0;        // max-label gamma between the result and one more map step
  std::int64_t iterations = 0;
};

// Solves the forward fixed-point system at z (componentwise
// g_j = -1/(z + sum_l entry(l, j) g_l)) by damped iteration from i*ones,
// or from `warm_start` when given. Throws ConvergenceError with the last
// iterate attached if the budget runs out.
GreenVector solve_green(const SubstitutionMatrix& m, Complex z,
                        const SolverSettings& s = {},
                        const std::vector<Complex>* warm_start = nullptr);

// Continuation in Im z down the schedule at fixed Re z = energy; returns the
// solution at energy + i*eta_floor.
GreenVector solve_at_energy(const SubstitutionMatrix& m, double energy,
                            const SolverSettings& s = {});

// solve_at_energy over a grid. Points are processed in fixed blocks of 32
// with warm starts chained inside each block only, so results are identical
// for every worker count.
std::vector<GreenVector> green_on_grid(const SubstitutionMatrix& m,
                                       const std::vector<double>& energies,
                                       const SolverSettings& s = {}, int workers = 1);

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};
using BandList = std::vector<Band>;

struct DetectSettings {
  std::optional<std::pair<double, double>> window;  // default: rigorous spectral bound
  double coarse_step = 0.01;
  std::optional<double> indicator_threshold;        // default 10*sqrt(eta_floor)
  double endpoint_tol = 1e-4;
};

// [-(2 + max forward degree), +(2 + max forward degree)] always contains the
// spectrum: operator norm <= 2*sqrt(max degree) <= 2 + max degree.
std::pair<double, double> default_window(const SubstitutionMatrix& m);

// Scans Im g_root on the coarse grid at the eta floor and bisects each
// indicator flank down to endpoint_tol. Returns disjoint closed bands in
// increasing order.
BandList detect_bands(const SubstitutionMatrix& m, int root_label,
                      const SolverSettings& s = {}, const DetectSettings& d = {},
                      int workers = 1);

struct DosCurve {
  std::vector<double> energy;
  std::vector<double> rho;  // Im g_root / pi at the eta floor
  int root_label = 0;
  double eta = 0.0;

  double integral() const;  // trapezoid rule over the grid
};

DosCurve dos_curve(const SubstitutionMatrix& m, int root_label,
                   const std::vector<double>& energies, const SolverSettings& s = {},
                   int workers = 1);

struct BoundReport {
  double max_product = 0.0;  // max over z and labels of |g_j| * sqrt(entry(j, j))
  Complex worst_z;
  int worst_label = 0;
};

// |g_j(z)| <= entry(j, j)^{-1/2} holds on the whole half-plane; this measures
// how close a batch of points comes to the bound.
BoundReport verify_green_bound(const SubstitutionMatrix& m,
                               const std::vector<Complex>& points,
                               const SolverSettings& s = {});

}  // namespace conetree
