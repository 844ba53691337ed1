#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>

#include "conetree/errors.hpp"

namespace conetree {

using Complex = std::complex<double>;

// Points this close to (or below) the real axis are rejected outright;
// clamping would silently corrupt every quantity derived from them.
inline constexpr double kMinImag = 1e-300;

inline bool in_halfplane(Complex g) {
  return std::isfinite(g.real()) && std::isfinite(g.imag()) && g.imag() > kMinImag;
}

inline void require_halfplane(Complex g, const char* what) {
  if (!in_halfplane(g)) {
    throw NumericalDomainError(std::string(what) +
                               ": value is not in the open upper half-plane");
  }
}

// A checked upper half-plane point.
struct HalfPlanePoint {
  explicit HalfPlanePoint(Complex v) : value(v) {
    require_halfplane(v, "HalfPlanePoint");
  }
  Complex value;
};

inline double gamma_unchecked(Complex g, Complex h) {
  return std::norm(g - h) / (g.imag() * h.imag());
}

// gamma(g, h) = |g - h|^2 / (Im g * Im h); cosh d = gamma/2 + 1.
inline double gamma_dist(Complex g, Complex h) {
  require_halfplane(g, "gamma_dist");
  require_halfplane(h, "gamma_dist");
  return gamma_unchecked(g, h);
}

inline double hyperbolic_distance(Complex g, Complex h) {
  return std::acosh(0.5 * gamma_dist(g, h) + 1.0);
}

// -1/d computed componentwise. For Im d > 0 the result has Im = Im d / |d|^2,
// so the half-plane is preserved exactly in floating point.
inline Complex negative_reciprocal(Complex d) {
  const double s = d.real() * d.real() + d.imag() * d.imag();
  return Complex{-d.real() / s, d.imag() / s};
}

// One decorated recursion step given the already-accumulated child sum:
// -1/((z - v) + sum). Every code path that evaluates the recursion funnels
// through here so results agree bit for bit across implementations.
inline Complex phi_from_sum(Complex z, double v, Complex sum) {
  return negative_reciprocal((z - v) + sum);
}

// Checked single vertex step: children are (squared edge weight, value) pairs.
inline Complex phi_step(Complex z, double v,
                        std::span<const std::pair<double, Complex>> children) {
  require_halfplane(z, "phi_step");
  if (!std::isfinite(v)) throw NumericalDomainError("phi_step: potential is not finite");
  Complex sum{0.0, 0.0};
  for (const auto& [w2, g] : children) {
    if (!(w2 > 0.0) || !std::isfinite(w2)) {
      throw NumericalDomainError("phi_step: edge weight must be positive and finite");
    }
    require_halfplane(g, "phi_step");
    sum += w2 * g;
  }
  return phi_from_sum(z, v, sum);
}

}  // namespace conetree
