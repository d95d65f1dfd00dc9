#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "nlmd/coupling.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/transforms.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Stochastic sampling of the free bath solutions and assembly of the noise
// polarization / magnetization that drive the field equation.
//
// Classical-amplitude limit: the ladder operators are realized as complex
// circular Gaussians with the adjoint as plain conjugation; second moments
// reproduce the discrete commutator normalization, variance 1/(w_omega *
// w_k) per (bin, half-node, polarization) cell. Electric and magnetic baths
// draw from disjoint substreams of one seed, so the whole pipeline is
// bytewise reproducible per (grids, seed) and independent of thread count.
//
// Every bath displacement is real-valued by construction (amplitude plus its
// conjugate), which is what makes the half-grid storage self-consistent:
// the value at -k is the conjugate of the value at +k, and on the k_z = 0
// plane (where -k is the same stored node) the two requirements coincide.
// ---------------------------------------------------------------------------

class NoiseRealization {
 public:
  // draws 3 + 3 complex amplitudes per (frequency bin, half node); every
  // frequency node must be positive (the displacement scale is 1/sqrt(omega))
  static NoiseRealization sample(FrequencyGrid grid, KGrid kgrid,
                                 std::uint64_t seed, double hbar = 1.0,
                                 unsigned threads = 1);

  std::uint64_t seed() const { return seed_; }
  double hbar() const { return hbar_; }
  const FrequencyGrid& grid() const { return grid_; }
  const KGrid& kgrid() const { return kgrid_; }

  // polarization-basis amplitude triples (lambda components)
  const Eigen::Vector3cd& mode_electric(std::size_t q, std::size_t m) const {
    return b_[q * kgrid_.n_half() + m];
  }
  const Eigen::Vector3cd& mode_magnetic(std::size_t q, std::size_t m) const {
    return d_[q * kgrid_.n_half() + m];
  }

  // assembled complex amplitudes sum_lambda b_lambda e_lambda
  const Eigen::Vector3cd& amplitude_electric(std::size_t q,
                                             std::size_t m) const {
    return a_electric_[q * kgrid_.n_half() + m];
  }
  const Eigen::Vector3cd& amplitude_magnetic(std::size_t q,
                                             std::size_t m) const {
    return a_magnetic_[q * kgrid_.n_half() + m];
  }

  // real bath displacements sqrt(hbar/2w)(a e^{-iwt} + conj) at a half node
  Eigen::Vector3d displacement_electric(std::size_t q, std::size_t m,
                                        double t) const;
  Eigen::Vector3d displacement_magnetic(std::size_t q, std::size_t m,
                                        double t) const;

 private:
  NoiseRealization() = default;

  std::uint64_t seed_ = 0;
  double hbar_ = 1.0;
  FrequencyGrid grid_;
  KGrid kgrid_;
  std::vector<Eigen::Vector3cd> b_, d_;                    // lambda triples
  std::vector<Eigen::Vector3cd> a_electric_, a_magnetic_;  // assembled
};

// Noise polarization on (half node, time node), row-major m * n_t + j.
// Three contributions: the linear bath term, the bilinear bath-bath term
// (momentum-conserving lattice sum), and the memory term folding the
// previous-order field through the retarded oscillator response; the two
// operator orderings of the memory term collapse to a factor 2 for
// commuting classical amplitudes. field_prev may be empty (zero order:
// no memory term); otherwise it must match the (half, time) layout.
// Rank-3 couplings must be homogeneous-separable here.
std::vector<Eigen::Vector3cd> noise_polarization(
    const NoiseRealization& noise, const Coupling1& c1, const Coupling2* c2,
    std::span<const Eigen::Vector3cd> field_prev, const TimeGrid& tgrid,
    unsigned threads = 1);

// mirror of noise_polarization for the magnetic bath (couplings g, drive B)
std::vector<Eigen::Vector3cd> noise_magnetization(
    const NoiseRealization& noise, const Coupling1& c1, const Coupling2* c2,
    std::span<const Eigen::Vector3cd> field_prev, const TimeGrid& tgrid,
    unsigned threads = 1);

// Source spectrum at the stored bins, row-major (half node m, positive bin
// q): J~ = -mu0 w^2 P~_N - mu0 w k x M~_N, with the temporal transform of
// the (half, time) series taken per transforms.hpp.
std::vector<Eigen::Vector3cd> source_term(
    std::span<const Eigen::Vector3cd> pn, std::span<const Eigen::Vector3cd> mn,
    const KGrid& kgrid, const FrequencyGrid& field_grid, const TimeGrid& tgrid,
    double mu0, unsigned threads = 1);

}  // namespace nlmd
