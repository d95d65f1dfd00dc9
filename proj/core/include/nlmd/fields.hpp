#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "nlmd/grids.hpp"
#include "nlmd/susceptibility.hpp"
#include "nlmd/transforms.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Time-domain reconstruction and constitutive diagnostics.
//
// Spectra live on (half node m, positive bin q), row-major; time series on
// (half node m, time node j). The negative-frequency side is implied by the
// representation: combining the mirror rule E~(-k,w) = conj(E~(k,w)) with
// position-space reality makes E~ even in w, while anything built as
// (k x E~)/(-w) is odd. In the time domain every physical field obeys the
// plain mirror rule E(-k,t) = conj(E(k,t)), so conjugated lattice nodes read
// the stored half-node value conjugated — for either parity.
// ---------------------------------------------------------------------------

enum class SpectralParity { Even, Odd };

// inverse temporal transform of a half-grid spectrum; the negative side of
// the axis is materialized per `parity` before the quadrature
std::vector<Eigen::Vector3cd> to_time_domain(
    std::span<const Eigen::Vector3cd> spectrum, const KGrid& kgrid,
    const FrequencyGrid& grid, const TimeGrid& tgrid,
    SpectralParity parity = SpectralParity::Even, unsigned threads = 1);

// forward temporal transform of a (half, time) series at the stored bins
std::vector<Eigen::Vector3cd> series_spectrum(
    std::span<const Eigen::Vector3cd> series, const KGrid& kgrid,
    const FrequencyGrid& grid, const TimeGrid& tgrid, unsigned threads = 1);

// induction spectrum B~ = (k x E~)/(-w), elementwise over stored bins
std::vector<Eigen::Vector3cd> magnetic_from_electric(
    std::span<const Eigen::Vector3cd> e_spectrum, const KGrid& kgrid,
    const FrequencyGrid& grid);

// Constitutive evaluation on the time grid:
//   P = P_N + chi1 * E (running convolution, lattice quadrature for
//   tabulated kernels) + chi2 * [E, E] (double convolution; the
//   momentum-conserving lattice sum pairs k1 with k - k1).
// noise_density may be empty (treated as zero). Tabulated rank-2 kernels
// must be stored at stride 1 (exact node lookups); the homogeneous form
// interpolates between stored nodes. Shapes must match (shape_error).
std::vector<Eigen::Vector3cd> polarization_eval(
    std::span<const Eigen::Vector3cd> field_time, const Kernel1Time& k1,
    const Kernel2Time* k2, std::span<const Eigen::Vector3cd> noise_density,
    const KGrid& kgrid, const TimeGrid& tgrid, unsigned threads = 1);

// mirror of polarization_eval: magnetization from B and the zeta kernels
std::vector<Eigen::Vector3cd> magnetization_eval(
    std::span<const Eigen::Vector3cd> field_time, const Kernel1Time& k1,
    const Kernel2Time* k2, std::span<const Eigen::Vector3cd> noise_density,
    const KGrid& kgrid, const TimeGrid& tgrid, unsigned threads = 1);

// longitudinal potential in the transverse gauge, phi~ = -i k.P / (eps0 k^2),
// per (half node, inner slot); a zero wavevector node is rejected (the
// potential is undefined there in this gauge)
std::vector<cplx> scalar_potential(std::span<const Eigen::Vector3cd> p,
                                   const KGrid& kgrid, double eps0);

// D = eps0 E + P, elementwise over any common layout
std::vector<Eigen::Vector3cd> displacement(
    std::span<const Eigen::Vector3cd> e, std::span<const Eigen::Vector3cd> p,
    double eps0);

// Largest relative mismatch of the longitudinal (Gauss-law) balance
//   eps0 k.E~ = -(w^2 / (w + i eta)^2) k.P~_total
// over stored bins with |k| > 0; P~_total is the full polarization spectrum
// (induced plus noise). Tends to k.D~ = 0 as eta -> 0.
double gauge_residual(std::span<const Eigen::Vector3cd> e_spectrum,
                      std::span<const Eigen::Vector3cd> p_total_spectrum,
                      const KGrid& kgrid, const FrequencyGrid& grid,
                      double eta, double eps0);

}  // namespace nlmd
