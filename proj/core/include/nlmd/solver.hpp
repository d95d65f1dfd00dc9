#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlmd/coupling.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/lambda.hpp"
#include "nlmd/noise.hpp"
#include "nlmd/susceptibility.hpp"
#include "nlmd/transforms.hpp"
#include "nlmd/units.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Fixed-point solution of the spectral field equation
//
//   Lambda E~ + S(E~) = J~,
//
// where S collects the medium terms,
//
//   S(E~) = (2pi)^{3/2} mu0 w^2 [ chi1~ E~ + chi2~ conv(E~, E~) ]
//         + (2pi)^{3/2} mu0 w   [ k x (zeta1~ B~) + k x (zeta2~ conv(B~, B~)) ],
//
// with B~ = (k x E~)/(-w), and J~ is the noise source rebuilt from the
// previous order's fields. Orders advance as E~(n) = Lambda^{-1} (J~(n-1) -
// S(E~(n-1))), optionally blended with the previous iterate.
//
// The frequency convolution integrates w1 over the stored positive bins
// with w2 = w - w1 off-grid: the kernel's factored form evaluates there
// exactly, and the field is interpolated linearly on the positive axis
// using its evenness in w (zero inside the spectral gap |w| < w_min and
// beyond w_max). Rank-2 convolution terms require homogeneous-separable
// kernels; rank-1 terms accept tabulated kernels via the lattice sum.
// ---------------------------------------------------------------------------

struct SolverConfig {
  std::size_t max_order = 16;
  double tolerance = 1e-8;  // relative sup-norm change
  double eta = 0.0;         // retarded shift, must be > 0
  double damping = 1.0;     // relaxation factor in (0, 1]
  std::size_t window = 2;   // orders of quiet needed / divergence span
  unsigned threads = 1;

  void validate() const;  // config_error on violation
};

struct FieldState {
  std::size_t order = 0;
  // (half node m, positive bin q), row-major
  std::vector<Eigen::Vector3cd> data;
  std::vector<double> residual_history;  // one entry per completed order

  const Eigen::Vector3cd& at(std::size_t m, std::size_t q,
                             std::size_t n_omega) const {
    return data[m * n_omega + q];
  }
};

struct ConvergenceRow {
  std::size_t order = 0;
  double sup_change = 0;  // relative sup-norm step, NaN for order 0
  double residual_norm = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool converged = false;

  std::string to_text() const;  // columnar: order  sup-change  residual
};

struct SolveResult {
  FieldState state;
  ConvergenceReport report;
};

// E~ = Lambda^{-1} J~ pointwise over stored bins
FieldState zero_order(const KGrid& kgrid, const FrequencyGrid& grid,
                      std::span<const Eigen::Vector3cd> source, double eta,
                      const Units& units = {}, unsigned threads = 1);

// the medium terms S(E~) at the stored bins, with the same quadratures the
// iteration and the residual use
std::vector<Eigen::Vector3cd> apply_susceptibility(
    const MediumKernels& kernels, const KGrid& kgrid,
    const FrequencyGrid& grid, std::span<const Eigen::Vector3cd> field,
    const Units& units = {}, unsigned threads = 1);

// one order step from prev, blending with cfg.damping
FieldState iterate_order(const FieldState& prev, const MediumKernels& kernels,
                         const KGrid& kgrid, const FrequencyGrid& grid,
                         std::span<const Eigen::Vector3cd> source,
                         const SolverConfig& cfg, const Units& units = {});

// quadrature-weighted L2 norm over stored bins
double weighted_l2(std::span<const Eigen::Vector3cd> v, const KGrid& kgrid,
                   const FrequencyGrid& grid);

// weighted L2 norm of Lambda E~ + S(E~) - J~ over stored bins
double residual(const FieldState& state, const MediumKernels& kernels,
                const KGrid& kgrid, const FrequencyGrid& grid,
                std::span<const Eigen::Vector3cd> source, double eta,
                const Units& units = {}, unsigned threads = 1);

// Independent route for homogeneous linear media: per-bin dense 3x3 solve of
// (Lambda + linear medium terms) E~ = J~. Tabulated kernels are rejected
// (the bins couple); rank-2 kernels must be absent.
std::vector<Eigen::Vector3cd> linear_direct_solve(
    const MediumKernels& kernels, const KGrid& kgrid,
    const FrequencyGrid& grid, std::span<const Eigen::Vector3cd> source,
    double eta, const Units& units = {}, unsigned threads = 1);

// Noise source at the stored bins for the order following `prev_field`
// (pass nullptr for the zero-order source: field-dependent terms dropped).
// The time grid must be the conjugate pair of `grid`.
std::vector<Eigen::Vector3cd> build_source(
    const Medium& medium, const NoiseRealization& noise,
    const FieldState* prev_field, const KGrid& kgrid,
    const FrequencyGrid& grid, const TimeGrid& tgrid, const Units& units = {},
    unsigned threads = 1);

// Full pipeline: kernels, zero order, then order-by-order iteration until
// the relative sup-norm change stays below tolerance for `window`
// consecutive orders or max_order is reached (non-convergence is reported,
// not thrown). Norm growth by more than 10x across the window throws
// divergence_error carrying the norm history.
SolveResult solve(const SolverConfig& cfg, const Medium& medium,
                  const NoiseRealization& noise, const FrequencyGrid& grid,
                  const Units& units = {});

}  // namespace nlmd
