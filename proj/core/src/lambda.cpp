#include "nlmd/lambda.hpp"

#include <cmath>
#include <sstream>

namespace nlmd {

namespace {

cplx shifted_sq(double omega, double eta) {
  const cplx wt(omega, eta);
  return wt * wt;
}

[[noreturn]] void pole(const Eigen::Vector3d& k, double omega,
                       const char* branch) {
  std::ostringstream msg;
  msg << "wave operator singular (" << branch << " pole) at k = (" << k.x()
      << ", " << k.y() << ", " << k.z() << "), omega = " << omega
      << "; a positive eta removes it";
  throw singularity_error(msg.str());
}

}  // namespace

Eigen::Matrix3cd assemble_lambda(const Eigen::Vector3d& k, double omega,
                                 double eta, double c) {
  const double k2 = k.squaredNorm();
  const cplx w2c2 = shifted_sq(omega, eta) / (c * c);
  Eigen::Matrix3cd lam = (k * k.transpose()).cast<cplx>();
  lam -= k2 * Eigen::Matrix3cd::Identity();
  lam += w2c2 * Eigen::Matrix3cd::Identity();
  return lam;
}

Eigen::Matrix3cd invert_lambda(const Eigen::Vector3d& k, double omega,
                               double eta, double c) {
  const double k2 = k.squaredNorm();
  const cplx w2 = shifted_sq(omega, eta);
  const double c2 = c * c;
  const double scale = std::max(omega * omega + eta * eta, c2 * k2);

  const cplx denom_l = w2;
  if (std::abs(denom_l) <= 1e-14 * std::max(scale, 1e-300)) {
    pole(k, omega, "longitudinal");
  }
  if (k2 == 0.0) return (c2 / denom_l) * Eigen::Matrix3cd::Identity();

  const cplx denom_t = w2 - c2 * k2;
  if (std::abs(denom_t) <= 1e-14 * scale) pole(k, omega, "transverse");

  const Eigen::Matrix3d pl = (k * k.transpose()) / k2;
  const Eigen::Matrix3d pt = Eigen::Matrix3d::Identity() - pl;
  return (c2 / denom_l) * pl.cast<cplx>() + (c2 / denom_t) * pt.cast<cplx>();
}

}  // namespace nlmd
