#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "nlmd/coupling.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/rng.hpp"
#include "nlmd/tensor3.hpp"

namespace nlmd::testing {

inline FrequencyGrid one_bin(double w0, double weight) {
  return FrequencyGrid::from_nodes({w0}, {weight});
}

// scalar single-bin coupling: C(w0) = f0 * I with quadrature weight w
inline Coupling1 single_bin_coupling(FieldKind kind, double w0, double weight,
                                     double f0) {
  std::vector<Eigen::Matrix3d> blocks{f0 * Eigen::Matrix3d::Identity()};
  return Coupling1::homogeneous_dense(kind, one_bin(w0, weight),
                                      std::move(blocks));
}

inline double uniform(SplitMix64& g, double lo, double hi) {
  return lo + (hi - lo) * g.next_unit();
}

// real-wavevector cross of a complex vector, assembled from two real cross
// products so it cannot inherit a library's complex-cross convention
inline Eigen::Vector3cd crossc(const Eigen::Vector3d& k,
                               const Eigen::Vector3cd& v) {
  const Eigen::Vector3d re = v.real(), im = v.imag();
  return k.cross(re).cast<cplx>() + cplx(0, 1) * k.cross(im).cast<cplx>();
}

inline Eigen::Vector3d random_vec3(SplitMix64& g, double scale = 1.0) {
  return scale * Eigen::Vector3d(2 * g.next_unit() - 1, 2 * g.next_unit() - 1,
                                 2 * g.next_unit() - 1);
}

inline Eigen::Vector3cd random_vec3c(SplitMix64& g, double scale = 1.0) {
  Eigen::Vector3cd v;
  for (int i = 0; i < 3; ++i) {
    v(i) = scale * cplx(2 * g.next_unit() - 1, 2 * g.next_unit() - 1);
  }
  return v;
}

inline Eigen::Matrix3cd random_mat3c(SplitMix64& g, double scale = 1.0) {
  Eigen::Matrix3cd m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      m(r, c) = scale * cplx(2 * g.next_unit() - 1, 2 * g.next_unit() - 1);
    }
  }
  return m;
}

inline Tensor3 random_tensor3(SplitMix64& g, double scale = 1.0,
                              bool complex_entries = true) {
  Tensor3 t;
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double re = scale * (2 * g.next_unit() - 1);
        const double im =
            complex_entries ? scale * (2 * g.next_unit() - 1) : 0.0;
        t(i, a, b) = cplx(re, im);
      }
    }
  }
  return t;
}

inline double rel_sup(const std::vector<Eigen::Vector3cd>& a,
                      const std::vector<Eigen::Vector3cd>& b) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, (a[i] - b[i]).cwiseAbs().maxCoeff());
    scale = std::max(scale, b[i].cwiseAbs().maxCoeff());
  }
  return diff / std::max(scale, 1e-300);
}

inline double sup_abs(const std::vector<Eigen::Vector3cd>& a) {
  double s = 0;
  for (const auto& v : a) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace nlmd::testing
