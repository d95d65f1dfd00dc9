#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "nlmd/errors.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/tensor3.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Transform conventions (single source of truth; every module defers here).
//
// Spatial (k-space is the native representation):
//   E(r,t)   = (2pi)^(-3/2) Int d^3k  E~(k,t) e^{+i k.r}
// Temporal, fields:
//   E(k,t)   = (2pi)^(-3/2) Int domega E~(k,omega) e^{+i omega t}
//   E~(k,omega) = (2pi)^(+1/2) Int dt E(k,t) e^{-i omega t}
// Temporal, response kernels (one factor per time axis):
//   chi~(w1..wn) = (2pi)^(-3n/2) Int d^n t chi(t1..tn) e^{-i(w1 t1+..+wn tn)}
// With these choices the frequency-domain constitutive relation carries the
// explicit prefactor (2pi)^{3/2} per susceptibility order exactly as the wave
// equation is assembled in the solver, and the time-domain convolution
// agrees with the frequency-domain product without further factors.
//
// Reality closure for half-grid storage (k_z >= 0, omega > 0):
//   E~(-k, omega) = conj(E~(k, omega))        [mirror extension]
//   E~(k, -omega) = conj(E~(-k, omega))       [frequency reflection]
// Together these determine every quadrant from the stored one and force the
// reconstructed position-space field to be real. They also restrict the
// representable spectra to ones even in omega per stored node (standing-wave
// representation); all solver quadratures use the same closure so the
// discrete system stays self-consistent.
// ---------------------------------------------------------------------------

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
// (2pi)^(1/2) and (2pi)^(3/2)
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
inline constexpr double kTwoPi32 = 15.749609945722419027118729418098;

// sin(w t)/w with the small-argument series t (1 - (w t)^2 / 6) below
// |w t| < 1e-4; exact at w = 0.
inline double sinc_kernel(double omega, double t) {
  const double x = omega * t;
  if (std::abs(x) < 1e-4) return t * (1.0 - x * x / 6.0);
  return std::sin(x) / omega;
}

// Uniform time grid t_j = j dt, j = 0..n-1.
struct TimeGrid {
  std::size_t n = 0;
  double dt = 0;

  double node(std::size_t j) const { return static_cast<double>(j) * dt; }
  double t_max() const { return n ? node(n - 1) : 0.0; }

  static TimeGrid make(std::size_t n, double t_max) {
    if (n < 2) throw config_error("time grid: need at least two nodes");
    if (!(t_max > 0)) throw config_error("time grid: t_max must be positive");
    return TimeGrid{n, t_max / static_cast<double>(n - 1)};
  }
};

// trapezoid weight of node j on a uniform grid
inline double trapezoid_weight(const TimeGrid& g, std::size_t j) {
  return (j == 0 || j + 1 == g.n) ? 0.5 * g.dt : g.dt;
}

// The time grid conjugate to a uniform-midpoint frequency grid: dt =
// pi/omega_max and n_t = 2 n_omega, i.e. one full period of the node comb.
// On this pair the discrete transforms below are mutually inverse to
// round-off. Requires a uniform-midpoint grid.
TimeGrid conjugate_time_grid(const FrequencyGrid& grid);

// Two-sided frequency axis: 2n nodes, ascending,
//   s < n  -> -nodes[n-1-s],   s >= n -> +nodes[s-n].
std::vector<double> two_sided_axis(const FrequencyGrid& grid);

// quadrature weight attached to two-sided slot s (the |omega| node's weight)
inline double two_sided_weight(const FrequencyGrid& grid, std::size_t s) {
  const std::size_t n = grid.size();
  return grid.weights[s < n ? n - 1 - s : s - n];
}

// E(t_j) = (2pi)^(-3/2) sum_s w_s V_s e^{+i omega_s t_j}
std::vector<Eigen::Vector3cd> spectrum_to_time(
    std::span<const Eigen::Vector3cd> two_sided, const FrequencyGrid& grid,
    const TimeGrid& tgrid);

// V_s = (2pi)^(+1/2) sum_j dt E(t_j) e^{-i omega_s t_j}
std::vector<Eigen::Vector3cd> time_to_spectrum(
    std::span<const Eigen::Vector3cd> series, const FrequencyGrid& grid,
    const TimeGrid& tgrid);

// scalar-series variant of time_to_spectrum at a single frequency
cplx time_to_spectrum_at(std::span<const cplx> series, const TimeGrid& tgrid,
                         double omega);

// Linear interpolation of a two-sided spectrum at an arbitrary frequency;
// zero outside the covered node span.
Eigen::Vector3cd interp_two_sided(std::span<const Eigen::Vector3cd> values,
                                  std::span<const double> axis, double omega);
cplx interp_two_sided_scalar(std::span<const cplx> values,
                             std::span<const double> axis, double omega);

}  // namespace nlmd
