#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "nlmd/coupling.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/noise.hpp"
#include "nlmd/transforms.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Independent time-domain integration of the oscillator equations of motion,
//
//   x''(q, k) + w_q^2 x(q, k) = D(q, k, t) + quadratic terms,
//
// where D is the adjoint rank-2 coupling contracted with the drive field and
// the quadratic terms couple the drive to the conjugated displacements of
// every other bin. This route never touches the convolution kernels, which
// is the point: it cross-checks them.
//
// The integrator is a fixed-step 4th-order symplectic composition (three
// velocity-Verlet substeps with the classic w1, w0, w1 weights); fixed step
// keeps runs bitwise reproducible. Drives are sampled on a uniform grid and
// interpolated linearly at substep times; trajectories are recorded at the
// drive nodes.
// ---------------------------------------------------------------------------

struct BathState {
  FrequencyGrid grid;  // bath bins
  KGrid kgrid;
  TimeGrid tgrid;
  // (bin q, half node m, time node j), row-major
  std::vector<Eigen::Vector3cd> x;  // displacements
  std::vector<Eigen::Vector3cd> v;  // velocities (the conjugate-pair partner)

  const Eigen::Vector3cd& x_at(std::size_t q, std::size_t m,
                               std::size_t j) const {
    return x[(q * kgrid.n_half() + m) * tgrid.n + j];
  }
  const Eigen::Vector3cd& v_at(std::size_t q, std::size_t m,
                               std::size_t j) const {
    return v[(q * kgrid.n_half() + m) * tgrid.n + j];
  }
};

// Linear bath: every (q, m) bin is an independent driven oscillator.
// x0 / v0 are optional (q, m) snapshots of the initial state (empty = rest).
// dt is the requested integrator step; it must satisfy dt <= 0.1 / w_max
// (stability_error otherwise) and is rounded down to divide the drive
// spacing evenly.
BathState integrate_bath_linear(const Coupling1& c1,
                                std::span<const Eigen::Vector3cd> drive,
                                const KGrid& kgrid, const TimeGrid& tgrid,
                                double dt,
                                std::span<const Eigen::Vector3cd> x0 = {},
                                std::span<const Eigen::Vector3cd> v0 = {},
                                unsigned threads = 1);

// Closed-form first-order solution: the retarded oscillator convolution of
// the drive plus, when a noise realization is given, the free homogeneous
// solution for this coupling's field kind. Trapezoid quadrature on the
// drive grid; prefix sums keep it linear in the node count.
BathState first_order_solution(const Coupling1& c1,
                               std::span<const Eigen::Vector3cd> drive,
                               const KGrid& kgrid, const TimeGrid& tgrid,
                               const NoiseRealization* noise = nullptr,
                               unsigned threads = 1);

// Nonlinear bath: adds the rank-3 terms driving each bin with
// drive x conj(displacement) summed over partner bins and lattice nodes
// (momentum-conserving, homogeneous couplings only). Starts from rest.
// Throws stability_error when the state blows up or the step is too large.
BathState integrate_bath_nonlinear(const Coupling1& c1, const Coupling2& c2,
                                   std::span<const Eigen::Vector3cd> drive,
                                   const KGrid& kgrid, const TimeGrid& tgrid,
                                   double dt, unsigned threads = 1);

}  // namespace nlmd
