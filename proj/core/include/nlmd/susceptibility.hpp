#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "nlmd/coupling.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/tensor3.hpp"
#include "nlmd/transforms.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Response kernels built from the couplings by quadrature over the bath
// continuum:
//
//   rank 1:  K(t) = Theta(t) sum_q w_q s(omega_q, t) C_q C_q^H
//   rank 2:  K(t1,t2) = Theta(t1) Theta(t2)
//              sum_{q1,q2} w_q1 w_q2 s(omega_q1,t1) s(omega_q2,t2) D(q1,q2)
//   with s(w,t) = sin(wt)/w and D the rank-3 coupling block contracted with
//   one adjoint rank-2 factor per trailing index.
//
// Time kernels are stored for t >= 0 only; by construction they vanish for
// negative arguments (the step factors), which is what the causality checks
// assert. Frequency kernels carry an e^(-eta t) convergence factor per time
// axis (the undamped kernels do not decay), i.e. they are the retarded
// boundary values evaluated just below the real axis. All transforms follow
// the conventions in transforms.hpp.
// ---------------------------------------------------------------------------

// Rank-1 time-domain kernel. Homogeneous data is one matrix per time node
// (momentum-conserving); tabulated data is (time, k, k1) over the full
// lattice, row-major.
struct Kernel1Time {
  FieldKind kind = FieldKind::Electric;
  TimeGrid tgrid;
  bool homogeneous = true;
  std::optional<KGrid> kgrid;  // tabulated only
  std::vector<Eigen::Matrix3cd> data;

  const Eigen::Matrix3cd& at(std::size_t m) const { return data[m]; }
  const Eigen::Matrix3cd& at(std::size_t m, std::size_t f,
                             std::size_t f1) const {
    if (homogeneous) return data[m];
    const std::size_t nf = kgrid->n_full();
    return data[(m * nf + f) * nf + f1];
  }
};

// Rank-1 frequency-domain kernel, sampled on the two-sided axis of `grid`
// (slot order per transforms.hpp). Same layout split as Kernel1Time.
struct Kernel1Freq {
  FieldKind kind = FieldKind::Electric;
  FrequencyGrid grid;
  double eta = 0;
  bool homogeneous = true;
  std::optional<KGrid> kgrid;
  std::vector<Eigen::Matrix3cd> data;

  const Eigen::Matrix3cd& at(std::size_t s) const { return data[s]; }
  const Eigen::Matrix3cd& at(std::size_t s, std::size_t f,
                             std::size_t f1) const {
    if (homogeneous) return data[s];
    const std::size_t nf = kgrid->n_full();
    return data[(s * nf + f) * nf + f1];
  }
};

// Rank-2 time-domain kernel over two time axes, stored on a coarsened node
// set (every `stride`-th node, endpoints included) with bilinear evaluation
// in between; memory scales quadratically in the stored count. Tabulated
// data appends (k, k1, k2) full-lattice indices.
struct Kernel2Time {
  FieldKind kind = FieldKind::Electric;
  TimeGrid tgrid;
  std::size_t stride = 1;
  std::size_t stored = 0;  // nodes per axis: (tgrid.n - 1) / stride + 1
  bool homogeneous = true;
  std::optional<KGrid> kgrid;
  std::vector<Tensor3> data;

  double stored_dt() const { return tgrid.dt * static_cast<double>(stride); }
  const Tensor3& at(std::size_t m1, std::size_t m2) const {
    return data[m1 * stored + m2];
  }
  const Tensor3& at(std::size_t m1, std::size_t m2, std::size_t f,
                    std::size_t f1, std::size_t f2) const;
  // bilinear interpolation between stored nodes; zero for t < 0 or beyond
  // the grid (homogeneous form)
  Tensor3 eval(double t1, double t2) const;
};

// Rank-2 frequency-domain kernel in factored form, exact for homogeneous
// (separable) couplings:
//   K~(w1, w2) = sum_{q1,q2} g(q1, w1) g(q2, w2) D(q1, q2)
// where g(q, w) already carries the bath quadrature weight:
//   g(q, w) = w_q (2pi)^(-3/2) sum_m tau_m e^(-eta t_m) s(omega_q, t_m)
//             e^(-i w t_m).
// The factorization evaluates exactly at arbitrary (w1, w2) — no frequency
// interpolation; the solver's internal convolution relies on this.
struct Kernel2Factored {
  FieldKind kind = FieldKind::Electric;
  FrequencyGrid bath_grid;
  TimeGrid tgrid;
  double eta = 0;
  std::vector<Tensor3> d;  // D(q1,q2), row-major

  const Tensor3& d_at(std::size_t q1, std::size_t q2) const {
    return d[q1 * bath_grid.size() + q2];
  }
  // weighted transform column over bath bins at one frequency
  Eigen::VectorXcd g_column(double omega) const;
  Tensor3 eval(double w1, double w2) const;
  Tensor3 eval_columns(const Eigen::VectorXcd& g1,
                       const Eigen::VectorXcd& g2) const;
  double max_abs() const;
};

// Rank-2 frequency kernel sampled densely on the two-sided axis pair;
// produced by the direct double transform of a stored time kernel (any
// form). Used for validation against the factored route and for tabulated
// media.
struct Kernel2Freq {
  FieldKind kind = FieldKind::Electric;
  FrequencyGrid grid;
  double eta = 0;
  bool homogeneous = true;
  std::optional<KGrid> kgrid;
  std::vector<Tensor3> data;  // (s1, s2[, f, f1, f2]) row-major

  const Tensor3& at(std::size_t s1, std::size_t s2) const {
    return data[s1 * 2 * grid.size() + s2];
  }
  const Tensor3& at(std::size_t s1, std::size_t s2, std::size_t f,
                    std::size_t f1, std::size_t f2) const;
};

// --- builders --------------------------------------------------------------

// Rank-1 kernel by bath quadrature; requires the rank-2 coupling only.
Kernel1Time build_kernel1_time(const Coupling1& c, const TimeGrid& tgrid,
                               unsigned threads = 1);

// Rank-2 kernel; requires the rank-3 coupling plus the matching rank-2
// coupling for the adjoint factors. stride must divide tgrid.n - 1.
Kernel2Time build_kernel2_time(const Coupling2& c2, const Coupling1& c1,
                               const TimeGrid& tgrid, std::size_t stride = 1,
                               unsigned threads = 1);

// Damped temporal transform onto the two-sided axis of out_grid.
Kernel1Freq kernel1_to_frequency(const Kernel1Time& kernel,
                                 const FrequencyGrid& out_grid, double eta,
                                 unsigned threads = 1);
Kernel2Freq kernel2_to_frequency(const Kernel2Time& kernel,
                                 const FrequencyGrid& out_grid, double eta,
                                 unsigned threads = 1);

// Factored frequency kernel straight from the couplings (homogeneous only).
Kernel2Factored build_kernel2_factored(const Coupling2& c2,
                                       const Coupling1& c1,
                                       const TimeGrid& tgrid, double eta);

// --- validation ------------------------------------------------------------

// max violation of the simultaneous swap (t1,k1,i1) <-> (t2,k2,i2)
ValidationReport check_kernel_symmetry(const Kernel2Time& kernel,
                                       double tol = 1e-10);

// Discrete Kramers-Kronig consistency on the two-sided axis: the real part
// against the principal-value Hilbert transform of the imaginary part, as a
// relative L2 mismatch (pass below `rel_tol`). A kernel built from step-
// gated time data satisfies this; sign conventions follow transforms.hpp
// (poles pushed to the upper half plane by the damping).
ValidationReport check_causality_kk(const Kernel1Freq& kernel,
                                    double rel_tol = 0.05);

// --- solver-facing bundle ---------------------------------------------------

struct MediumKernels {
  Kernel1Freq electric1;
  Kernel1Freq magnetic1;
  std::optional<Kernel2Factored> electric2;
  std::optional<Kernel2Factored> magnetic2;
};

// Build every frequency kernel the iteration needs: rank-1 kernels sampled
// on the two-sided axis of freq_grid, rank-2 kernels in factored form when
// the medium has quadratic couplings (homogeneous required).
MediumKernels build_medium_kernels(const Medium& medium,
                                   const TimeGrid& tgrid,
                                   const FrequencyGrid& freq_grid, double eta,
                                   unsigned threads = 1);

}  // namespace nlmd
