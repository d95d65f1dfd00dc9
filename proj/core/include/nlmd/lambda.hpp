#pragma once

#include <Eigen/Dense>

#include "nlmd/errors.hpp"
#include "nlmd/tensor3.hpp"

namespace nlmd {

// Per-(k, omega) wave operator of the spectral field equation,
//
//   Lambda = k k^T - k^2 I + ((omega + i eta)^2 / c^2) I,
//
// the contraction of the double curl plus the d'Alembert term. The retarded
// shift omega -> omega + i eta moves the light-cone poles off the real axis;
// eta = 0 is allowed for assembly but inversion then fails on a pole.
Eigen::Matrix3cd assemble_lambda(const Eigen::Vector3d& k, double omega,
                                 double eta, double c);

// Closed-form inverse through the longitudinal/transverse projector split:
//
//   Lambda^{-1} = P_L c^2/w~^2 + P_T c^2/(w~^2 - c^2 k^2),   w~ = omega+i eta,
//
// with P_L = k^ k^^T and P_T = I - P_L (for k = 0 the whole matrix is
// c^2/w~^2 I). Throws singularity_error naming the resonant (k, omega) when
// a denominator vanishes, which can only happen at eta = 0.
Eigen::Matrix3cd invert_lambda(const Eigen::Vector3d& k, double omega,
                               double eta, double c);

}  // namespace nlmd
