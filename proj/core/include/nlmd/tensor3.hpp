#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <complex>

namespace nlmd {

using cplx = std::complex<double>;

// Plain bilinear cross product. Eigen's cross() conjugates every component
// when the scalars are complex, which silently turns k x E~ into k x conj(E~);
// the spectral field equations need the unconjugated product.
inline Eigen::Vector3cd cross_bilinear(const Eigen::Vector3cd& a,
                                       const Eigen::Vector3cd& b) {
  return Eigen::Vector3cd(a(1) * b(2) - a(2) * b(1),
                          a(2) * b(0) - a(0) * b(2),
                          a(0) * b(1) - a(1) * b(0));
}

// Rank-3 tensor over three Cartesian indices, c_{i j k}. Small enough to live
// on the stack; row-major in (i, j, k).
struct Tensor3 {
  std::array<cplx, 27> a{};

  cplx& operator()(int i, int j, int k) { return a[(i * 3 + j) * 3 + k]; }
  const cplx& operator()(int i, int j, int k) const {
    return a[(i * 3 + j) * 3 + k];
  }

  Tensor3& operator+=(const Tensor3& o) {
    for (int n = 0; n < 27; ++n) a[n] += o.a[n];
    return *this;
  }
  Tensor3 operator+(const Tensor3& o) const {
    Tensor3 r = *this;
    r += o;
    return r;
  }
  Tensor3 operator*(cplx s) const {
    Tensor3 r;
    for (int n = 0; n < 27; ++n) r.a[n] = a[n] * s;
    return r;
  }

  // swap of the two trailing slots: r_{i j k} = c_{i k j}
  Tensor3 swapped_last() const {
    Tensor3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r(i, j, k) = (*this)(i, k, j);
    return r;
  }

  Tensor3 conjugate() const {
    Tensor3 r;
    for (int n = 0; n < 27; ++n) r.a[n] = std::conj(a[n]);
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& v : a) m = std::max(m, std::abs(v));
    return m;
  }

  // contract the two trailing slots with vectors: out_i = c_{ijk} u_j v_k
  Eigen::Vector3cd contract(const Eigen::Vector3cd& u,
                            const Eigen::Vector3cd& v) const {
    Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
    for (int i = 0; i < 3; ++i) {
      cplx s = 0;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) s += (*this)(i, j, k) * u[j] * v[k];
      out[i] = s;
    }
    return out;
  }

  // sandwich with two matrices on the trailing slots:
  // r_{i j' k'} = c_{i j k} A_{j j'} B_{k k'}
  Tensor3 sandwich(const Eigen::Matrix3cd& A, const Eigen::Matrix3cd& B) const {
    Tensor3 r;
    for (int i = 0; i < 3; ++i)
      for (int jp = 0; jp < 3; ++jp)
        for (int kp = 0; kp < 3; ++kp) {
          cplx s = 0;
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              s += (*this)(i, j, k) * A(j, jp) * B(k, kp);
          r(i, jp, kp) = s;
        }
    return r;
  }
};

}  // namespace nlmd
