#include "nlmd/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace nlmd {

TimeGrid conjugate_time_grid(const FrequencyGrid& grid) {
  const std::size_t n = grid.size();
  if (n == 0) throw config_error("conjugate_time_grid: empty frequency grid");
  // verify uniform-midpoint layout: node q at (q+1/2) d with d = w_max/n
  const double d = grid.omega_max / static_cast<double>(n);
  for (std::size_t q = 0; q < n; ++q) {
    const double want = (static_cast<double>(q) + 0.5) * d;
    if (std::abs(grid.nodes[q] - want) > 1e-12 * grid.omega_max ||
        std::abs(grid.weights[q] - d) > 1e-12 * grid.omega_max) {
      throw config_error(
          "conjugate_time_grid: frequency grid is not uniform-midpoint");
    }
  }
  // dt = pi / omega_max, 2n samples: exactly one period of the node comb,
  // on which the midpoint exponentials are orthogonal.
  return TimeGrid{2 * n, kTwoPi / 2.0 / grid.omega_max};
}

std::vector<double> two_sided_axis(const FrequencyGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> axis(2 * n);
  for (std::size_t s = 0; s < n; ++s) axis[s] = -grid.nodes[n - 1 - s];
  for (std::size_t s = 0; s < n; ++s) axis[n + s] = grid.nodes[s];
  return axis;
}

std::vector<Eigen::Vector3cd> spectrum_to_time(
    std::span<const Eigen::Vector3cd> two_sided, const FrequencyGrid& grid,
    const TimeGrid& tgrid) {
  const std::size_t n = grid.size();
  if (two_sided.size() != 2 * n) {
    throw shape_error("spectrum_to_time: expected a two-sided spectrum");
  }
  const auto axis = two_sided_axis(grid);
  std::vector<Eigen::Vector3cd> out(tgrid.n, Eigen::Vector3cd::Zero());
  const double norm = 1.0 / kTwoPi32;
  for (std::size_t j = 0; j < tgrid.n; ++j) {
    const double t = tgrid.node(j);
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (std::size_t s = 0; s < 2 * n; ++s) {
      const cplx phase = std::polar(two_sided_weight(grid, s), axis[s] * t);
      acc += phase * two_sided[s];
    }
    out[j] = norm * acc;
  }
  return out;
}

std::vector<Eigen::Vector3cd> time_to_spectrum(
    std::span<const Eigen::Vector3cd> series, const FrequencyGrid& grid,
    const TimeGrid& tgrid) {
  if (series.size() != tgrid.n) {
    throw shape_error("time_to_spectrum: series/grid length mismatch");
  }
  const std::size_t n = grid.size();
  const auto axis = two_sided_axis(grid);
  std::vector<Eigen::Vector3cd> out(2 * n, Eigen::Vector3cd::Zero());
  for (std::size_t s = 0; s < 2 * n; ++s) {
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (std::size_t j = 0; j < tgrid.n; ++j) {
      acc += std::polar(1.0, -axis[s] * tgrid.node(j)) * series[j];
    }
    out[s] = kSqrt2Pi * tgrid.dt * acc;
  }
  return out;
}

cplx time_to_spectrum_at(std::span<const cplx> series, const TimeGrid& tgrid,
                         double omega) {
  if (series.size() != tgrid.n) {
    throw shape_error("time_to_spectrum_at: series/grid length mismatch");
  }
  cplx acc = 0;
  for (std::size_t j = 0; j < tgrid.n; ++j) {
    acc += std::polar(1.0, -omega * tgrid.node(j)) * series[j];
  }
  return kSqrt2Pi * tgrid.dt * acc;
}

namespace {

// shared bracket search: returns false when omega lies outside the axis
bool bracket(std::span<const double> axis, double omega, std::size_t& lo,
             double& frac) {
  if (axis.size() < 2 || omega < axis.front() || omega > axis.back()) {
    return false;
  }
  // axis is ascending and short (O(100) nodes); binary search via std
  const auto it = std::upper_bound(axis.begin(), axis.end(), omega);
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  if (hi == 0) hi = 1;
  if (hi == axis.size()) hi = axis.size() - 1;
  lo = hi - 1;
  const double span = axis[hi] - axis[lo];
  frac = span > 0 ? (omega - axis[lo]) / span : 0.0;
  return true;
}

}  // namespace

Eigen::Vector3cd interp_two_sided(std::span<const Eigen::Vector3cd> values,
                                  std::span<const double> axis, double omega) {
  if (values.size() != axis.size()) {
    throw shape_error("interp_two_sided: values/axis length mismatch");
  }
  std::size_t lo = 0;
  double f = 0;
  if (!bracket(axis, omega, lo, f)) return Eigen::Vector3cd::Zero();
  return (1.0 - f) * values[lo] + f * values[lo + 1];
}

cplx interp_two_sided_scalar(std::span<const cplx> values,
                             std::span<const double> axis, double omega) {
  if (values.size() != axis.size()) {
    throw shape_error("interp_two_sided_scalar: values/axis length mismatch");
  }
  std::size_t lo = 0;
  double f = 0;
  if (!bracket(axis, omega, lo, f)) return cplx{0, 0};
  return (1.0 - f) * values[lo] + f * values[lo + 1];
}

}  // namespace nlmd
