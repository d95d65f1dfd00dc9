#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "nlmd/errors.hpp"

namespace nlmd {

enum class FrequencyRule { UniformMidpoint, GaussLegendre };

// Positive-frequency quadrature grid on (0, omega_max]. Nodes are strictly
// increasing and nonnegative; both built-in rules keep them strictly positive
// so omega = 0 never enters bath or solver loops.
struct FrequencyGrid {
  double omega_max = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  // raw constructor for externally supplied quadratures (validated)
  static FrequencyGrid from_nodes(std::vector<double> nodes,
                                  std::vector<double> weights);
};

FrequencyGrid build_frequency_grid(double omega_max, std::size_t n,
                                   FrequencyRule rule);

// Orthonormal right-handed triad attached to a wavevector: e3 = k/|k|,
// e1 = normalize(z x k) unless k is parallel to z (then e1 = x), e2 = e3 x e1
// so that e1 x e2 = e3.
struct Triad {
  Eigen::Vector3d e1, e2, e3;
};

Triad build_triad(const Eigen::Vector3d& k);  // throws config_error at k = 0

// Fallback basis for the excluded k = 0 point: the Cartesian axes.
Triad axis_triad();

// Reciprocal-space half-grid: stored nodes have k_z >= 0 and carry cell-volume
// weights; the mirrored set {k} u {-k} tiles a symmetric box exactly once.
//
// Built-grid node convention (spacing d_a = extent_a / count_a):
//   x, y axes: centered cell midpoints (i - (n-1)/2) d, i = 0..n-1
//              (even n: half-integer stagger, no zero; odd n: includes zero)
//   z axis, even n: centered stagger +-(i+1/2) d; the positive half is kept,
//              so the grid covers extent_z symmetrically
//   z axis, odd n: one-sided midpoints (i+1/2) d covering (0, extent_z]; the
//              mirrored set then spans [-extent_z, extent_z]
// k_z > 0 strictly in both cases, so k = 0 and k_z = 0 plane nodes never
// appear in built grids. Grids assembled from explicit node lists may carry
// k_z = 0 nodes; those are flagged and treated as self-conjugate (their field
// values are constrained real by mirror_extend). In-plane (k_x,k_y) ->
// (-k_x,-k_y) pairing is NOT imposed on such nodes; callers that need strict
// position-space reality on plane-bearing grids must supply plane-symmetric
// data themselves.
class KGrid {
 public:
  static KGrid build(const Eigen::Vector3d& extents,
                     const std::array<std::size_t, 3>& counts);
  static KGrid from_nodes(std::vector<Eigen::Vector3d> nodes,
                          std::vector<double> weights);

  std::size_t n_half() const { return half_nodes_.size(); }
  std::size_t n_full() const { return n_half() + mirror_src_.size(); }

  const Eigen::Vector3d& half_node(std::size_t m) const {
    return half_nodes_[m];
  }
  double half_weight(std::size_t m) const { return half_weights_[m]; }
  bool plane(std::size_t m) const { return plane_[m]; }
  std::size_t n_plane() const { return n_plane_; }

  // full-lattice (mirrored set) indexing: [0, n_half) are the stored nodes,
  // [n_half, n_full) are the mirrors of the non-plane stored nodes
  Eigen::Vector3d full_node(std::size_t f) const;
  double full_weight(std::size_t f) const;
  std::size_t half_of_full(std::size_t f) const;
  bool conjugated(std::size_t f) const { return f >= n_half(); }
  std::size_t mirror_of(std::size_t f) const;  // index of -k (self for plane)

  // exact node lookup on the full lattice; -1 when absent. Tolerance is
  // absolute per component.
  std::ptrdiff_t find_full(const Eigen::Vector3d& k, double tol) const;

  double half_volume() const;  // sum of stored weights

  const Eigen::Vector3d& spacing() const { return spacing_; }  // 0: irregular
  const Eigen::Vector3d& extents() const { return extents_; }
  const std::array<std::size_t, 3>& counts() const { return counts_; }

 private:
  std::vector<Eigen::Vector3d> half_nodes_;
  std::vector<double> half_weights_;
  std::vector<bool> plane_;
  std::vector<std::size_t> mirror_src_;   // half index per mirrored slot
  std::vector<std::size_t> mirror_slot_;  // full index of -k per half index
  std::size_t n_plane_ = 0;
  Eigen::Vector3d spacing_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d extents_ = Eigen::Vector3d::Zero();
  std::array<std::size_t, 3> counts_{0, 0, 0};

  void finalize();  // builds mirror maps, validates
};

// Extends a half-grid field to the full mirrored lattice using the conjugate
// pairing value(-k) = conj(value(k)). Self-conjugate plane nodes are forced
// real: an imaginary part below tol is discarded, above it is an error.
std::vector<Eigen::Vector3cd> mirror_extend(
    const KGrid& grid, std::span<const Eigen::Vector3cd> half_field,
    double tol = 1e-10);

}  // namespace nlmd
