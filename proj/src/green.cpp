#include "conetree/green.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "conetree/detail/parallel.hpp"

namespace conetree {

namespace {

std::string format_z(Complex z) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g%+.6gi", z.real(), z.imag());
  return buf;
}

// One application of the forward map. The children of a label-j vertex are
// entry(l, j) copies of label l; the sum runs over them one by one in
// ascending label order so the value matches a vertex-by-vertex evaluation
// on a materialized tree bit for bit.
void apply_phi(const SubstitutionMatrix& m, Complex z, const std::vector<Complex>& g,
               std::vector<Complex>& out) {
  const int a = m.label_count();
  for (int j = 0; j < a; ++j) {
    Complex sum{0.0, 0.0};
    for (int l = 0; l < a; ++l) {
      const std::int64_t count = m.entry(l, j);
      for (std::int64_t c = 0; c < count; ++c) sum += g[l];
    }
    out[j] = phi_from_sum(z, 0.0, sum);
  }
}

double max_gamma(const std::vector<Complex>& g, const std::vector<Complex>& h) {
  double worst = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    worst = std::max(worst, gamma_unchecked(g[j], h[j]));
  }
  return worst;
}

}  // namespace

std::vector<double> default_eta_schedule(double eta_floor) {
  if (!(eta_floor > 0.0) || !std::isfinite(eta_floor) || eta_floor > 1.0) {
    throw MalformedInputError("eta floor must lie in (0, 1]");
  }
  std::vector<double> schedule;
  double eta = 1.0;
  while (eta > eta_floor * (1.0 + 1e-9)) {
    schedule.push_back(eta);
    eta /= 10.0;
  }
  schedule.push_back(eta_floor);
  return schedule;
}

void validate_settings(const SolverSettings& s) {
  if (!(s.tolerance > 0.0) || !std::isfinite(s.tolerance)) {
    throw MalformedInputError("solver settings: tolerance must be positive");
  }
  if (s.max_iterations < 1) {
    throw MalformedInputError("solver settings: max_iterations must be at least 1");
  }
  if (!(s.damping > 0.0) || s.damping > 1.0) {
    throw MalformedInputError("solver settings: damping must lie in (0, 1]");
  }
  if (!(s.eta_floor > 0.0) || !std::isfinite(s.eta_floor)) {
    throw MalformedInputError("solver settings: eta_floor must be positive");
  }
  if (s.eta_schedule.empty()) {
    throw MalformedInputError("solver settings: eta schedule is empty");
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : s.eta_schedule) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw MalformedInputError("solver settings: schedule etas must be positive");
    }
    if (!(eta < prev)) {
      throw MalformedInputError("solver settings: eta schedule must strictly decrease");
    }
    prev = eta;
  }
  if (s.eta_schedule.back() != s.eta_floor) {
    throw MalformedInputError("solver settings: eta schedule must end at eta_floor");
  }
}

GreenVector solve_green(const SubstitutionMatrix& m, Complex z, const SolverSettings& s,
                        const std::vector<Complex>* warm_start) {
  validate_settings(s);
  require_valid(m);
  require_halfplane(z, "solve_green");
  const int a = m.label_count();

  std::vector<Complex> g;
  if (warm_start != nullptr) {
    if (static_cast<int>(warm_start->size()) != a) {
      throw MalformedInputError("solve_green: warm start has wrong length");
    }
    g = *warm_start;
    for (Complex v : g) require_halfplane(v, "solve_green warm start");
  } else {
    g.assign(a, Complex{0.0, 1.0});
  }

  std::vector<Complex> phi(a), next(a), step(a), prev_step(a), acc(a), acc_next(a);
  double alpha = s.damping;
  constexpr double kAlphaFloor = 1.0 / 64.0;
  bool have_prev_step = false;
  bool have_mu = false;
  Complex mu_est{0.0, 0.0};
  double err_scale = 1.0;
  int oscillating = 0;
  int cooldown = 0;
  int accel_wait = 0;
  double d = 0.0;
  std::int64_t it = 0;
  bool converged = false;
  int starved = 0;

  for (it = 1; it <= s.max_iterations; ++it) {
    apply_phi(m, z, g, phi);
    for (int j = 0; j < a; ++j) {
      next[j] = (1.0 - alpha) * g[j] + alpha * phi[j];
      step[j] = next[j] - g[j];
    }
    d = max_gamma(g, next);
    if (!std::isfinite(d)) {
      throw NumericalDomainError("solve_green: iteration left the half-plane at z=" +
                                 format_z(z));
    }

    bool halved = false;
    if (have_prev_step) {
      // Rayleigh-quotient estimate of the damped map's dominant multiplier.
      Complex num{0.0, 0.0};
      double den = 0.0;
      for (int j = 0; j < a; ++j) {
        num += step[j] * std::conj(prev_step[j]);
        den += std::norm(prev_step[j]);
      }
      if (den > 0.0) {
        const Complex mu = num / den;
        mu_est = mu;
        have_mu = true;
        // Near a neutral multiplier the step underestimates the remaining
        // error by |1 - mu|; scale the stopping test accordingly.
        err_scale = std::clamp(std::norm(1.0 - mu) / 16.0, 1e-6, 1.0);
        if (std::abs(std::arg(mu)) > std::numbers::pi / 4.0) {
          ++oscillating;
        } else {
          oscillating = 0;
        }
        if (cooldown > 0) --cooldown;
        if (oscillating >= 3 && cooldown == 0 && alpha > kAlphaFloor) {
          alpha *= 0.5;
          cooldown = 8;
          oscillating = 0;
          halved = true;
        }
      }
    }
    if (halved) {
      // Steps taken under different damping are not comparable.
      have_prev_step = false;
      have_mu = false;
    } else {
      prev_step = step;
      have_prev_step = true;
    }
    g.swap(next);

    // Geometric-series extrapolation.  When the step multiplier is stable the
    // remaining tail is step * (mu + mu^2 + ...); jumping over it turns the
    // slow 1 - O(eta) crawl near band edges into a few iterations.  The jump
    // is only kept if an extra map application confirms it contracts.
    if (accel_wait > 0) --accel_wait;
    if (!halved && have_mu && accel_wait == 0 && d > 0.0 && std::abs(mu_est) < 1.0) {
      const Complex gap = 1.0 - mu_est;
      if (std::abs(gap) > 1e-9) {
        const Complex jump = mu_est / gap;
        bool inside = true;
        for (int j = 0; j < a; ++j) {
          acc[j] = g[j] + step[j] * jump;
          if (!(std::isfinite(acc[j].real()) && std::isfinite(acc[j].imag()) &&
                acc[j].imag() > 0.0)) {
            inside = false;
            break;
          }
        }
        if (inside) {
          apply_phi(m, z, acc, phi);
          for (int j = 0; j < a; ++j) {
            acc_next[j] = (1.0 - alpha) * acc[j] + alpha * phi[j];
          }
          const double d_acc = max_gamma(acc, acc_next);
          if (std::isfinite(d_acc) && d_acc < 0.25 * d) {
            g = acc_next;
            d = d_acc;
            for (int j = 0; j < a; ++j) prev_step[j] = acc_next[j] - acc[j];
            have_prev_step = true;
            have_mu = false;
          }
        }
        accel_wait = 4;
      }
    }

    if (d == 0.0 || d < s.tolerance * 1e-6) {
      converged = true;
      break;
    }
    if (it >= 3 && have_mu && d < s.tolerance * err_scale) {
      converged = true;
      break;
    }
    // Steps pinned at the rounding floor: no further progress is possible.
    starved = (d < 1e-24) ? starved + 1 : 0;
    if (starved >= 3) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    throw ConvergenceError("solve_green: no convergence within " +
                               std::to_string(s.max_iterations) + " iterations at z=" +
                               format_z(z),
                           z, g, d, s.max_iterations);
  }

  apply_phi(m, z, g, phi);
  GreenVector out;
  out.z = z;
  out.values = g;
  out.residual = max_gamma(g, phi);
  out.iterations = std::min(it, s.max_iterations);
  for (Complex v : out.values) require_halfplane(v, "solve_green result");
  return out;
}

GreenVector solve_at_energy(const SubstitutionMatrix& m, double energy,
                            const SolverSettings& s) {
  validate_settings(s);
  if (!std::isfinite(energy)) throw MalformedInputError("solve_at_energy: bad energy");
  GreenVector gv;
  const std::vector<Complex>* warm = nullptr;
  for (double eta : s.eta_schedule) {
    gv = solve_green(m, Complex{energy, eta}, s, warm);
    warm = &gv.values;
  }
  return gv;
}

std::vector<GreenVector> green_on_grid(const SubstitutionMatrix& m,
                                       const std::vector<double>& energies,
                                       const SolverSettings& s, int workers) {
  validate_settings(s);
  require_valid(m);
  constexpr std::size_t kBlock = 32;
  std::vector<GreenVector> out(energies.size());
  const std::size_t blocks = (energies.size() + kBlock - 1) / kBlock;
  detail::run_on_workers(workers, blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(energies.size(), lo + kBlock);
    // Warm starts chain across the block at the top of the schedule only;
    // each point still descends its own schedule.
    std::vector<Complex> top_carry;
    bool have_carry = false;
    for (std::size_t i = lo; i < hi; ++i) {
      GreenVector gv;
      const std::vector<Complex>* warm = have_carry ? &top_carry : nullptr;
      for (std::size_t level = 0; level < s.eta_schedule.size(); ++level) {
        gv = solve_green(m, Complex{energies[i], s.eta_schedule[level]}, s, warm);
        if (level == 0) {
          top_carry = gv.values;
          have_carry = true;
        }
        warm = &gv.values;
      }
      out[i] = std::move(gv);
    }
  });
  return out;
}

std::pair<double, double> default_window(const SubstitutionMatrix& m) {
  std::int64_t deg = 0;
  for (int k = 0; k < m.label_count(); ++k) deg = std::max(deg, m.column_sum(k));
  const double w = 2.0 + static_cast<double>(deg);
  return {-w, w};
}

BandList detect_bands(const SubstitutionMatrix& m, int root_label,
                      const SolverSettings& s, const DetectSettings& d, int workers) {
  validate_settings(s);
  require_valid(m);
  if (root_label < 0 || root_label >= m.label_count()) {
    throw MalformedInputError("detect_bands: root label out of range");
  }
  if (!(d.coarse_step > 0.0) || !std::isfinite(d.coarse_step)) {
    throw MalformedInputError("detect_bands: coarse_step must be positive");
  }
  if (!(d.endpoint_tol > 0.0) || !std::isfinite(d.endpoint_tol)) {
    throw MalformedInputError("detect_bands: endpoint_tol must be positive");
  }
  const auto [lo, hi] = d.window.has_value() ? *d.window : default_window(m);
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw MalformedInputError("detect_bands: bad window");
  }
  const double threshold =
      d.indicator_threshold.has_value() ? *d.indicator_threshold
                                        : 10.0 * std::sqrt(s.eta_floor);
  if (!(threshold > 0.0)) {
    throw MalformedInputError("detect_bands: indicator threshold must be positive");
  }

  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double e = lo + static_cast<double>(k) * d.coarse_step;
    if (e >= hi) break;
    grid.push_back(e);
  }
  grid.push_back(hi);

  const std::vector<GreenVector> vals = green_on_grid(m, grid, s, workers);
  std::vector<char> inside(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    inside[i] = vals[i].values[root_label].imag() > threshold;
  }

  auto probe = [&](double e) {
    return solve_at_energy(m, e, s).values[root_label].imag() > threshold;
  };
  // Shrinks a bracket with the indicator false at `out` and true at `in`.
  auto refine = [&](double out_e, double in_e) {
    while (std::abs(in_e - out_e) > d.endpoint_tol) {
      const double mid = 0.5 * (out_e + in_e);
      if (probe(mid)) {
        in_e = mid;
      } else {
        out_e = mid;
      }
    }
    return 0.5 * (out_e + in_e);
  };

  BandList bands;
  std::size_t i = 0;
  while (i < grid.size()) {
    if (!inside[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size() && inside[j + 1]) ++j;
    Band band;
    band.lo = (i == 0) ? grid.front() : refine(grid[i - 1], grid[i]);
    band.hi = (j + 1 == grid.size()) ? grid.back() : refine(grid[j + 1], grid[j]);
    bands.push_back(band);
    i = j + 1;
  }
  return bands;
}

double DosCurve::integral() const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < energy.size(); ++i) {
    total += 0.5 * (rho[i] + rho[i + 1]) * (energy[i + 1] - energy[i]);
  }
  return total;
}

DosCurve dos_curve(const SubstitutionMatrix& m, int root_label,
                   const std::vector<double>& energies, const SolverSettings& s,
                   int workers) {
  if (root_label < 0 || root_label >= m.label_count()) {
    throw MalformedInputError("dos_curve: root label out of range");
  }
  const std::vector<GreenVector> vals = green_on_grid(m, energies, s, workers);
  DosCurve curve;
  curve.energy = energies;
  curve.rho.reserve(energies.size());
  curve.root_label = root_label;
  curve.eta = s.eta_floor;
  for (const GreenVector& gv : vals) {
    curve.rho.push_back(gv.values[root_label].imag() / std::numbers::pi);
  }
  return curve;
}

BoundReport verify_green_bound(const SubstitutionMatrix& m,
                               const std::vector<Complex>& points,
                               const SolverSettings& s) {
  require_valid(m);
  BoundReport report;
  for (Complex z : points) {
    const GreenVector gv = solve_green(m, z, s);
    for (int j = 0; j < m.label_count(); ++j) {
      const double product =
          std::abs(gv.values[j]) * std::sqrt(static_cast<double>(m.entry(j, j)));
      if (product > report.max_product) {
        report.max_product = product;
        report.worst_z = z;
        report.worst_label = j;
      }
    }
  }
  return report;
}

}  // namespace conetree
