#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "helpers.hpp"
#include "nlmd/coupling.hpp"
#include "nlmd/errors.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/noise.hpp"
#include "nlmd/susceptibility.hpp"
#include "nlmd/transforms.hpp"

using namespace nlmd;
using namespace nlmd::testing;

namespace {

// tabulated rank-2 table satisfying the mirror-reality constraint by
// construction: fill the stored half, mirror-conjugate the rest
Coupling1 random_real_tabulated1(FieldKind kind, const FrequencyGrid& grid,
                                 const KGrid& kg, SplitMix64& rng) {
  const std::size_t nq = grid.size();
  const std::size_t nf = kg.n_full();
  std::vector<Eigen::Matrix3cd> data(nq * nf * nf,
                                     Eigen::Matrix3cd::Zero());
  auto idx = [&](std::size_t q, std::size_t f, std::size_t f1) {
    return (q * nf + f) * nf + f1;
  };
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        const std::size_t mirror = idx(q, kg.mirror_of(f), kg.mirror_of(f1));
        const std::size_t self = idx(q, f, f1);
        if (mirror < self) continue;  // already set via its partner
        const Eigen::Matrix3cd m = random_mat3c(rng);
        data[self] = m;
        data[mirror] = m.conjugate();
        if (mirror == self) data[self] = m.real().cast<cplx>();
      }
    }
  }
  return Coupling1::tabulated(kind, grid, kg, std::move(data));
}

}  // namespace

TEST_CASE("rank-2 coupling: zero strength gives the zero tensor") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 4, FrequencyRule::UniformMidpoint);
  const Coupling1 c = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, g, LorentzianLine{0.0, 1.0, 0.1});
  for (std::size_t q = 0; q < g.size(); ++q) {
    CHECK(c.at(q).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(Coupling1::zero(FieldKind::Magnetic, g).max_abs() == 0.0);
}

TEST_CASE("rank-2 coupling: lorentzian peak value") {
  // frozen: s / sqrt(gamma * pi) at the line center for s=1, gamma=0.1
  const double expect = 1.784124116152771;
  const FrequencyGrid g = FrequencyGrid::from_nodes({1.0}, {1.0});
  const Coupling1 c = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, g, LorentzianLine{1.0, 1.0, 0.1});
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(c.at(0)(i, i).real() - expect) < 1e-12);
    CHECK(c.at(0)(i, i).imag() == 0.0);
  }
  CHECK(std::abs(c.at(0)(0, 1)) == 0.0);

  CHECK_THROWS_AS(Coupling1::isotropic_lorentzian(
                      FieldKind::Electric, g, LorentzianLine{-1.0, 1.0, 0.1}),
                  config_error);
  CHECK_THROWS_AS(Coupling1::isotropic_lorentzian(
                      FieldKind::Electric, g, LorentzianLine{1.0, 1.0, 0.0}),
                  config_error);
}

TEST_CASE("rank-2 coupling: tabulated mirror-reality violation is rejected") {
  const FrequencyGrid g = FrequencyGrid::from_nodes({1.0}, {1.0});
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 2});
  const std::size_t nf = kg.n_full();
  std::vector<Eigen::Matrix3cd> data(nf * nf, Eigen::Matrix3cd::Zero());
  data[0](0, 0) = cplx(1.0, 2.0);  // (k, k) slot; mirror left inconsistent
  CHECK_THROWS_AS(
      Coupling1::tabulated(FieldKind::Electric, g, kg, std::move(data)),
      reality_error);
}

TEST_CASE("rank-2 coupling: randomized mirrored table passes reality") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 2, FrequencyRule::UniformMidpoint);
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {2, 1, 2});
  SplitMix64 rng(23);
  const Coupling1 c = random_real_tabulated1(FieldKind::Electric, g, kg, rng);
  const ValidationReport r = c.check_reality();
  CHECK(r.pass);
  CHECK(r.max_violation < 1e-12);
}

TEST_CASE("rank-2 coupling: reality violation is located") {
  const FrequencyGrid g = FrequencyGrid::from_nodes({1.0}, {1.0});
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 2});
  const std::size_t nf = kg.n_full();
  std::vector<Eigen::Matrix3cd> data(nf * nf, Eigen::Matrix3cd::Zero());
  data[0](1, 2) = cplx(0.0, 0.5);
  const Coupling1 c = Coupling1::tabulated(FieldKind::Electric, g, kg,
                                           std::move(data), false);
  const ValidationReport r = c.check_reality();
  CHECK(!r.pass);
  CHECK(r.max_violation > 0.4);
  CHECK(!r.where.empty());
}

TEST_CASE("rank-2 coupling adjoint: hermitian case and involution") {
  const FrequencyGrid g = FrequencyGrid::from_nodes({1.5}, {0.5});
  // real diagonal: adjoint equals the original
  const Coupling1 diag = single_bin_coupling(FieldKind::Electric, 1.5, 0.5,
                                             0.7);
  CHECK(diag.adjoint_at(0).isApprox(diag.at(0), 1e-15));

  // dense real block: adjoint is the transpose
  Eigen::Matrix3d m;
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const Coupling1 dense =
      Coupling1::homogeneous_dense(FieldKind::Electric, g, {m});
  CHECK(dense.adjoint_at(0).isApprox(
      dense.at(0).transpose().conjugate(), 1e-15));
  CHECK(dense.adjoint_at(0).adjoint().isApprox(dense.at(0), 1e-15));
}

TEST_CASE("rank-3 coupling: zero and symmetrization behaviour") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 2, FrequencyRule::UniformMidpoint);
  CHECK(Coupling2::zero(FieldKind::Electric, g).max_abs() == 0.0);

  const FrequencyGrid one = FrequencyGrid::from_nodes({1.0}, {1.0});
  SplitMix64 rng(29);
  const Tensor3 t = random_tensor3(rng, 1.0, false);

  // symmetrized single-bin block is (T + last-swap(T)) / 2
  const Coupling2 cs = Coupling2::homogeneous_separable(
      FieldKind::Electric, one, {t}, true);
  const Tensor3 expect = (t + t.swapped_last()) * cplx(0.5, 0);
  CHECK((cs.at(0, 0) + expect * cplx(-1, 0)).max_abs() < 1e-15);
  CHECK(cs.check_pair_swap().pass);

  // already-symmetric input: unchanged
  const Coupling2 cs2 = Coupling2::homogeneous_separable(
      FieldKind::Electric, one, {expect}, true);
  CHECK((cs2.at(0, 0) + expect * cplx(-1, 0)).max_abs() < 1e-15);

  // antisymmetric input: projected to zero
  const Tensor3 anti = (t + t.swapped_last() * cplx(-1, 0)) * cplx(0.5, 0);
  const Coupling2 ca = Coupling2::homogeneous_separable(
      FieldKind::Electric, one, {anti}, true);
  CHECK(ca.max_abs() < 1e-15);

  // symmetrization disabled: the raw block survives and the check fails
  const Coupling2 cu = Coupling2::homogeneous_separable(
      FieldKind::Electric, one, {t}, false);
  CHECK((cu.at(0, 0) + t * cplx(-1, 0)).max_abs() < 1e-15);
  CHECK(!cu.check_pair_swap().pass);
}

TEST_CASE("rank-3 coupling: pair swap across distinct bins") {
  const FrequencyGrid g =
      build_frequency_grid(3.0, 3, FrequencyRule::UniformMidpoint);
  SplitMix64 rng(31);
  std::vector<Tensor3> blocks;
  for (std::size_t p = 0; p < 9; ++p) {
    blocks.push_back(random_tensor3(rng, 1.0, false));
  }
  const Coupling2 c = Coupling2::homogeneous_separable(FieldKind::Magnetic, g,
                                                       blocks, true);
  const ValidationReport r = c.check_pair_swap();
  CHECK(r.pass);
  // spot check the defining identity: c(q1,q2)_{ijk} = c(q2,q1)_{ikj}
  for (std::size_t q1 = 0; q1 < 3; ++q1) {
    for (std::size_t q2 = 0; q2 < 3; ++q2) {
      const Tensor3 diff =
          c.at(q1, q2) + c.at(q2, q1).swapped_last() * cplx(-1, 0);
      CHECK(diff.max_abs() < 1e-14);
    }
  }
}

TEST_CASE("separable lorentzian rank-3 coupling scales with the line") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 2, FrequencyRule::UniformMidpoint);
  SplitMix64 rng(37);
  const Tensor3 t = random_tensor3(rng, 1.0, false);
  const LorentzianLine line{0.8, 1.0, 0.3};
  const Coupling2 c =
      Coupling2::separable_lorentzian(FieldKind::Electric, g, t, line);
  const Tensor3 sym = (t + t.swapped_last()) * cplx(0.5, 0);
  for (std::size_t q1 = 0; q1 < 2; ++q1) {
    for (std::size_t q2 = 0; q2 < 2; ++q2) {
      const Tensor3 expect =
          sym * cplx(line.eval(g.nodes[q1]) * line.eval(g.nodes[q2]), 0);
      CHECK((c.at(q1, q2) + expect * cplx(-1, 0)).max_abs() < 1e-14);
    }
  }
  CHECK(c.check_reality().pass);
}

// --- response kernels --------------------------------------------------------

TEST_CASE("rank-1 kernel: zero coupling, zero kernel") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 4, FrequencyRule::UniformMidpoint);
  const TimeGrid tg = TimeGrid::make(64, 10.0);
  const Kernel1Time k =
      build_kernel1_time(Coupling1::zero(FieldKind::Electric, g), tg);
  for (const auto& m : k.data) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank-1 kernel: single-bin closed form") {
  const double w0 = 1.3, wq = 0.4, f0 = 0.9;
  const Coupling1 c = single_bin_coupling(FieldKind::Electric, w0, wq, f0);
  const TimeGrid tg = TimeGrid::make(257, 40.0);
  const Kernel1Time k = build_kernel1_time(c, tg);
  for (std::size_t j = 0; j < tg.n; ++j) {
    const double t = tg.node(j);
    const double expect = wq * f0 * f0 * std::sin(w0 * t) / w0;
    for (int r = 0; r < 3; ++r) {
      for (int cc = 0; cc < 3; ++cc) {
        const double want = r == cc ? expect : 0.0;
        CHECK(std::abs(k.at(j)(r, cc) - cplx(want, 0)) < 1e-12);
      }
    }
  }
  // the stored domain starts at the causal boundary, where the kernel is 0
  CHECK(k.at(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank-1 kernel transform matches the analytic continuation") {
  const double w0 = 1.5, wq = 0.7, f0 = 0.8, eta = 0.2;
  const Coupling1 c = single_bin_coupling(FieldKind::Electric, w0, wq, f0);
  // T >= 20 / eta with a step fine enough for the band edge
  const TimeGrid tg = TimeGrid::make(6001, 120.0);
  const Kernel1Time kt = build_kernel1_time(c, tg);
  const FrequencyGrid out =
      build_frequency_grid(2.0, 32, FrequencyRule::UniformMidpoint);
  const Kernel1Freq kf = kernel1_to_frequency(kt, out, eta);
  const auto axis = two_sided_axis(out);
  for (std::size_t s = 0; s < axis.size(); ++s) {
    const cplx denom = w0 * w0 + std::pow(cplx(eta, axis[s]), 2);
    const cplx expect = wq * f0 * f0 / (kTwoPi32 * denom);
    const cplx got = kf.at(s)(1, 1);
    CHECK(std::abs(got - expect) < 0.02 * std::abs(expect));
    CHECK(std::abs(kf.at(s)(0, 1)) == 0.0);
  }
}

TEST_CASE("rank-1 kernel transform: reality symmetry on the two-sided axis") {
  const FrequencyGrid bath =
      build_frequency_grid(3.0, 6, FrequencyRule::GaussLegendre);
  const Coupling1 c = Coupling1::isotropic_lorentzian(
      FieldKind::Magnetic, bath, LorentzianLine{0.9, 1.2, 0.25});
  const TimeGrid tg = TimeGrid::make(1501, 60.0);
  const FrequencyGrid out =
      build_frequency_grid(2.5, 24, FrequencyRule::UniformMidpoint);
  const Kernel1Freq kf = kernel1_to_frequency(build_kernel1_time(c, tg), out,
                                              0.15);
  const std::size_t n2 = 2 * out.size();
  for (std::size_t s = 0; s < n2; ++s) {
    const Eigen::Matrix3cd mirror = kf.at(n2 - 1 - s).conjugate();
    CHECK((kf.at(s) - mirror).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("rank-2 kernel: vanishes exactly for negative arguments") {
  const FrequencyGrid bath = FrequencyGrid::from_nodes({1.1, 1.9}, {0.5, 0.5});
  SplitMix64 rng(41);
  std::vector<Tensor3> blocks;
  for (int p = 0; p < 4; ++p) blocks.push_back(random_tensor3(rng, 1.0, false));
  const Coupling2 c2 = Coupling2::homogeneous_separable(FieldKind::Electric,
                                                        bath, blocks, true);
  const Coupling1 c1 = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, bath, LorentzianLine{1.0, 1.4, 0.3});
  const TimeGrid tg = TimeGrid::make(33, 8.0);
  const Kernel2Time k = build_kernel2_time(c2, c1, tg);
  CHECK(k.eval(-0.1, 3.0).max_abs() == 0.0);
  CHECK(k.eval(3.0, -1e-12).max_abs() == 0.0);
  CHECK(k.eval(-2.0, -2.0).max_abs() == 0.0);
  // interior values are generically nonzero
  CHECK(k.eval(2.0, 3.0).max_abs() > 0.0);
  // the causal boundary itself carries sin(0) = 0 factors
  CHECK(k.at(0, 5).max_abs() == 0.0);
  CHECK(k.at(5, 0).max_abs() == 0.0);
}

TEST_CASE("rank-2 kernel symmetry check: pass and located failure") {
  const FrequencyGrid bath = FrequencyGrid::from_nodes({0.9, 1.7}, {0.4, 0.4});
  const Coupling1 c1 = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, bath, LorentzianLine{1.0, 1.2, 0.2});
  SplitMix64 rng(43);
  std::vector<Tensor3> blocks;
  for (int p = 0; p < 4; ++p) blocks.push_back(random_tensor3(rng, 1.0, false));
  const TimeGrid tg = TimeGrid::make(17, 6.0);

  const Coupling2 good = Coupling2::homogeneous_separable(
      FieldKind::Electric, bath, blocks, true);
  CHECK(check_kernel_symmetry(build_kernel2_time(good, c1, tg)).pass);

  const Coupling2 bad = Coupling2::homogeneous_separable(
      FieldKind::Electric, bath, blocks, false);
  const ValidationReport r =
      check_kernel_symmetry(build_kernel2_time(bad, c1, tg));
  CHECK(!r.pass);
  CHECK(!r.where.empty());
}

TEST_CASE("rank-2 kernel symmetry: random symmetric tabulated coupling") {
  const FrequencyGrid bath = FrequencyGrid::from_nodes({1.0, 1.6}, {0.5, 0.5});
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 2});
  const std::size_t nq = 2, nf = kg.n_full();
  SplitMix64 rng(47);
  std::vector<Tensor3> table(nq * nq * nf * nf * nf);
  for (auto& t : table) t = random_tensor3(rng, 1.0, false);
  const Coupling2 c2 = Coupling2::tabulated(FieldKind::Electric, bath, kg,
                                            std::move(table), true, false);
  CHECK(c2.check_pair_swap().pass);
  const Coupling1 c1 = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, bath, LorentzianLine{0.8, 1.3, 0.3});
  const TimeGrid tg = TimeGrid::make(9, 4.0);
  CHECK(check_kernel_symmetry(build_kernel2_time(c2, c1, tg)).pass);
}

TEST_CASE("kramers-kronig: resonant kernel passes, acausal surrogate fails") {
  const double w0 = 1.5, wq = 0.7, f0 = 0.8, eta = 0.3;
  const Coupling1 c = single_bin_coupling(FieldKind::Electric, w0, wq, f0);
  const TimeGrid tg = TimeGrid::make(8001, 80.0);
  const FrequencyGrid out =
      build_frequency_grid(6.0, 128, FrequencyRule::UniformMidpoint);
  const Kernel1Freq kf = kernel1_to_frequency(build_kernel1_time(c, tg), out,
                                              eta);
  CHECK(check_causality_kk(kf).pass);

  // surrogate with the step factor removed: even in time, so its transform
  // is the retarded value plus its advanced mirror — not KK-consistent
  Kernel1Freq acausal = kf;
  const std::size_t n2 = 2 * out.size();
  for (std::size_t s = 0; s < n2; ++s) {
    acausal.data[s] = kf.at(s) + kf.at(n2 - 1 - s);
  }
  CHECK(!check_causality_kk(acausal).pass);

  // zero kernel: trivially consistent
  Kernel1Freq zero = kf;
  for (auto& m : zero.data) m.setZero();
  CHECK(check_causality_kk(zero).pass);
}

TEST_CASE("factored rank-2 kernel agrees with the dense double transform") {
  const FrequencyGrid bath = FrequencyGrid::from_nodes({1.0, 1.8}, {0.6, 0.4});
  SplitMix64 rng(53);
  std::vector<Tensor3> blocks;
  for (int p = 0; p < 4; ++p) blocks.push_back(random_tensor3(rng, 1.0, false));
  const Coupling2 c2 = Coupling2::homogeneous_separable(FieldKind::Electric,
                                                        bath, blocks, true);
  const Coupling1 c1 = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, bath, LorentzianLine{0.9, 1.3, 0.25});
  const double eta = 0.25;
  const FrequencyGrid out =
      build_frequency_grid(2.0, 8, FrequencyRule::UniformMidpoint);
  const TimeGrid tg = conjugate_time_grid(out);

  const Kernel2Factored kf = build_kernel2_factored(c2, c1, tg, eta);
  const Kernel2Freq dense =
      kernel2_to_frequency(build_kernel2_time(c2, c1, tg), out, eta);
  const auto axis = two_sided_axis(out);
  double worst = 0;
  for (std::size_t s1 = 0; s1 < axis.size(); s1 += 3) {
    for (std::size_t s2 = 0; s2 < axis.size(); s2 += 3) {
      const Tensor3 diff =
          kf.eval(axis[s1], axis[s2]) + dense.at(s1, s2) * cplx(-1, 0);
      worst = std::max(worst, diff.max_abs());
    }
  }
  CHECK(worst < 1e-12 * std::max(1.0, kf.max_abs()));
}

// --- noise ---------------------------------------------------------------------

TEST_CASE("noise realization: bytewise deterministic per seed") {
  const FrequencyGrid bath =
      build_frequency_grid(2.0, 3, FrequencyRule::UniformMidpoint);
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {2, 2, 2});
  const NoiseRealization a = NoiseRealization::sample(bath, kg, 77);
  const NoiseRealization b = NoiseRealization::sample(bath, kg, 77);
  const NoiseRealization c = NoiseRealization::sample(bath, kg, 78);
  bool identical = true, distinct = false;
  for (std::size_t q = 0; q < bath.size(); ++q) {
    for (std::size_t m = 0; m < kg.n_half(); ++m) {
      identical &=
          std::memcmp(a.mode_electric(q, m).data(),
                      b.mode_electric(q, m).data(), 3 * sizeof(cplx)) == 0;
      identical &=
          std::memcmp(a.mode_magnetic(q, m).data(),
                      b.mode_magnetic(q, m).data(), 3 * sizeof(cplx)) == 0;
      distinct |= a.mode_electric(q, m) != c.mode_electric(q, m);
    }
  }
  CHECK(identical);
  CHECK(distinct);
}

TEST_CASE("noise realization: second moments match the discrete rule") {
  const double w0 = 1.1, wq = 0.7;
  const FrequencyGrid bath = FrequencyGrid::from_nodes({w0}, {wq});
  const KGrid kg = KGrid::build(Eigen::Vector3d(2, 2, 2), {1, 1, 2});
  const double wm = kg.half_weight(0);
  const int n_seeds = 10000;
  double sum_sq = 0;
  cplx mean(0, 0), mean_sq(0, 0);
  for (int s = 0; s < n_seeds; ++s) {
    const NoiseRealization n =
        NoiseRealization::sample(bath, kg, 1000 + static_cast<std::uint64_t>(s));
    const cplx b = n.mode_electric(0, 0)(1);
    sum_sq += std::norm(b);
    mean += b;
    mean_sq += b * b;
  }
  const double expect = 1.0 / (wq * wm);
  CHECK(std::abs(sum_sq / n_seeds - expect) < 0.05 * expect);
  // circularity and zero mean at CLT precision
  const double sigma = std::sqrt(expect / 2.0);
  CHECK(std::abs(mean) / n_seeds < 3.0 * sigma * 2.0 / std::sqrt(n_seeds));
  CHECK(std::abs(mean_sq) / n_seeds < 6.0 * expect / std::sqrt(n_seeds));
}

TEST_CASE("noise displacement: phase collapse at t = 0 and oscillator law") {
  const double w0 = 1.7, wq = 0.5, hbar = 1.0;
  const FrequencyGrid bath = FrequencyGrid::from_nodes({w0}, {wq});
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 2});
  const NoiseRealization n = NoiseRealization::sample(bath, kg, 5, hbar);

  const Triad triad = build_triad(kg.half_node(0));
  const Eigen::Vector3cd b = n.mode_electric(0, 0);
  Eigen::Vector3d expect = Eigen::Vector3d::Zero();
  const Eigen::Vector3d axes[3] = {triad.e1, triad.e2, triad.e3};
  for (int lam = 0; lam < 3; ++lam) {
    expect += std::sqrt(hbar / (2 * w0)) * 2.0 * b(lam).real() * axes[lam];
  }
  CHECK((n.displacement_electric(0, 0, 0.0) - expect).norm() < 1e-12);

  // central difference reproduces x'' = -w^2 x
  const double dt = 1e-3;
  for (double t : {0.4, 1.3, 2.9}) {
    const Eigen::Vector3d x0 = n.displacement_electric(0, 0, t - dt);
    const Eigen::Vector3d x1 = n.displacement_electric(0, 0, t);
    const Eigen::Vector3d x2 = n.displacement_electric(0, 0, t + dt);
    const Eigen::Vector3d acc = (x2 - 2 * x1 + x0) / (dt * dt);
    CHECK((acc + w0 * w0 * x1).norm() < 1e-4 * std::max(1.0, x1.norm()));
  }
}

TEST_CASE("noise polarization: zero couplings give zero") {
  const FrequencyGrid bath =
      build_frequency_grid(2.0, 2, FrequencyRule::UniformMidpoint);
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 2});
  const NoiseRealization n = NoiseRealization::sample(bath, kg, 9);
  const TimeGrid tg = TimeGrid::make(16, 5.0);
  const auto p = noise_polarization(
      n, Coupling1::zero(FieldKind::Electric, bath), nullptr, {}, tg);
  for (const auto& v : p) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  const auto m = noise_magnetization(
      n, Coupling1::zero(FieldKind::Magnetic, bath), nullptr, {}, tg);
  for (const auto& v : m) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise polarization: rank-1 case matches the direct bath sum") {
  const FrequencyGrid bath =
      build_frequency_grid(2.5, 3, FrequencyRule::UniformMidpoint);
  const KGrid kg = KGrid::build(Eigen::Vector3d(1.5, 1.5, 1.5), {2, 1, 2});
  const NoiseRealization n = NoiseRealization::sample(bath, kg, 21);
  const Coupling1 c1 = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, bath, LorentzianLine{0.8, 1.1, 0.3});
  const TimeGrid tg = TimeGrid::make(12, 4.0);
  const auto p = noise_polarization(n, c1, nullptr, {}, tg);
  for (std::size_t m = 0; m < kg.n_half(); ++m) {
    for (std::size_t j = 0; j < tg.n; ++j) {
      Eigen::Vector3cd expect = Eigen::Vector3cd::Zero();
      for (std::size_t q = 0; q < bath.size(); ++q) {
        expect += bath.weights[q] *
                  (c1.at(q) *
                   n.displacement_electric(q, m, tg.node(j)).cast<cplx>());
      }
      CHECK((p[m * tg.n + j] - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("noise magnetization: rank-1 case matches the direct bath sum") {
  const FrequencyGrid bath =
      build_frequency_grid(2.0, 2, FrequencyRule::GaussLegendre);
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 2, 2});
  const NoiseRealization n = NoiseRealization::sample(bath, kg, 33);
  const Coupling1 g1 = Coupling1::isotropic_lorentzian(
      FieldKind::Magnetic, bath, LorentzianLine{0.5, 0.9, 0.2});
  const TimeGrid tg = TimeGrid::make(10, 3.0);
  const auto mn = noise_magnetization(n, g1, nullptr, {}, tg);
  for (std::size_t m = 0; m < kg.n_half(); ++m) {
    for (std::size_t j = 0; j < tg.n; ++j) {
      Eigen::Vector3cd expect = Eigen::Vector3cd::Zero();
      for (std::size_t q = 0; q < bath.size(); ++q) {
        expect += bath.weights[q] *
                  (g1.at(q) *
                   n.displacement_magnetic(q, m, tg.node(j)).cast<cplx>());
      }
      CHECK((mn[m * tg.n + j] - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("noise polarization: bilinear term matches the lattice-sum oracle") {
  const FrequencyGrid bath = FrequencyGrid::from_nodes({1.0, 1.4}, {0.5, 0.5});
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 4});
  const NoiseRealization n = NoiseRealization::sample(bath, kg, 55);
  const Coupling1 c1 = Coupling1::isotropic_lorentzian(
      FieldKind::Electric, bath, LorentzianLine{0.6, 1.2, 0.25});
  SplitMix64 rng(59);
  std::vector<Tensor3> blocks;
  for (int p = 0; p < 4; ++p) blocks.push_back(random_tensor3(rng, 1.0, false));
  const Coupling2 c2 = Coupling2::homogeneous_separable(FieldKind::Electric,
                                                        bath, blocks, true);
  const TimeGrid tg = TimeGrid::make(6, 2.0);

  // with no previous field the memory term drops; what is left beyond the
  // linear term must be exactly the double bath sum over conserving pairs
  const auto with_c2 = noise_polarization(n, c1, &c2, {}, tg);
  const auto linear = noise_polarization(n, c1, nullptr, {}, tg);
  const std::size_t nq = bath.size(), nf = kg.n_full();
  for (std::size_t m = 0; m < kg.n_half(); ++m) {
    for (std::size_t j = 0; j < tg.n; ++j) {
      Eigen::Vector3cd expect = Eigen::Vector3cd::Zero();
      const double t = tg.node(j);
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        const std::ptrdiff_t f2 =
            kg.find_full(kg.half_node(m) - kg.full_node(f1), 1e-9);
        if (f2 < 0) continue;
        for (std::size_t q1 = 0; q1 < nq; ++q1) {
          for (std::size_t q2 = 0; q2 < nq; ++q2) {
            const Eigen::Vector3cd x1 =
                n.displacement_electric(q1, kg.half_of_full(f1), t)
                    .cast<cplx>();
            const Eigen::Vector3cd x2 =
                n.displacement_electric(
                     q2, kg.half_of_full(static_cast<std::size_t>(f2)), t)
                    .cast<cplx>();
            expect += kg.full_weight(f1) * bath.weights[q1] *
                      bath.weights[q2] * c2.at(q1, q2).contract(x1, x2);
          }
        }
      }
      const Eigen::Vector3cd got =
          with_c2[m * tg.n + j] - linear[m * tg.n + j];
      CHECK((got - expect).cwiseAbs().maxCoeff() <
            1e-12 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("source term: single polarization and magnetization bins") {
  // one midpoint bin: node at 2.0
  const FrequencyGrid fg =
      build_frequency_grid(4.0, 1, FrequencyRule::UniformMidpoint);
  const KGrid kg = KGrid::from_nodes({Eigen::Vector3d(0, 0, 1)}, {1.0});
  const TimeGrid tg = conjugate_time_grid(fg);
  const double mu0 = 1.0;

  // constant-in-time P along z transforms onto the single stored bin;
  // check J~ = -mu0 w^2 P~ by computing the transform the same way
  std::vector<Eigen::Vector3cd> pn(tg.n), mn_zero(tg.n,
                                                  Eigen::Vector3cd::Zero());
  for (std::size_t j = 0; j < tg.n; ++j) {
    pn[j] = Eigen::Vector3cd(0, 0, std::cos(2.0 * tg.node(j)));
  }
  const auto j_p = source_term(pn, mn_zero, kg, fg, tg, mu0);
  std::vector<cplx> series(tg.n);
  for (std::size_t j = 0; j < tg.n; ++j) series[j] = pn[j](2);
  const cplx p_spec = time_to_spectrum_at(series, tg, 2.0);
  REQUIRE(j_p.size() == 1);
  CHECK(std::abs(j_p[0](2) - (-mu0 * 4.0 * p_spec)) < 1e-12);
  CHECK(std::abs(j_p[0](0)) == 0.0);

  // magnetization along x at k = z_hat: J~ = -mu0 w k x M~ points along -y
  std::vector<Eigen::Vector3cd> mn(tg.n);
  for (std::size_t j = 0; j < tg.n; ++j) {
    mn[j] = Eigen::Vector3cd(std::cos(2.0 * tg.node(j)), 0, 0);
  }
  std::vector<Eigen::Vector3cd> pn_zero(tg.n, Eigen::Vector3cd::Zero());
  const auto j_m = source_term(pn_zero, mn, kg, fg, tg, mu0);
  for (std::size_t j = 0; j < tg.n; ++j) series[j] = mn[j](0);
  const cplx m_spec = time_to_spectrum_at(series, tg, 2.0);
  CHECK(std::abs(j_m[0](1) - (-mu0 * 2.0 * m_spec)) < 1e-12);
  CHECK(std::abs(j_m[0](0)) == 0.0);
  CHECK(std::abs(j_m[0](2)) == 0.0);
}

TEST_CASE("source term: random series match the formula elementwise") {
  const FrequencyGrid fg =
      build_frequency_grid(2.0, 4, FrequencyRule::UniformMidpoint);
  const KGrid kg = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 2, 2});
  const TimeGrid tg = conjugate_time_grid(fg);
  SplitMix64 rng(61);
  std::vector<Eigen::Vector3cd> pn(kg.n_half() * tg.n), mn(pn.size());
  for (auto& v : pn) v = random_vec3c(rng);
  for (auto& v : mn) v = random_vec3c(rng);
  const double mu0 = 1.3;
  const auto j = source_term(pn, mn, kg, fg, tg, mu0);
  std::vector<cplx> series(tg.n);
  for (std::size_t m = 0; m < kg.n_half(); ++m) {
    const Eigen::Vector3d k = kg.half_node(m);
    for (std::size_t q = 0; q < fg.size(); ++q) {
      const double w = fg.nodes[q];
      Eigen::Vector3cd p_spec, m_spec;
      for (int comp = 0; comp < 3; ++comp) {
        for (std::size_t t = 0; t < tg.n; ++t) {
          series[t] = pn[m * tg.n + t](comp);
        }
        p_spec(comp) = time_to_spectrum_at(series, tg, w);
        for (std::size_t t = 0; t < tg.n; ++t) {
          series[t] = mn[m * tg.n + t](comp);
        }
        m_spec(comp) = time_to_spectrum_at(series, tg, w);
      }
      const Eigen::Vector3cd expect =
          -mu0 * w * w * p_spec - mu0 * w * crossc(k, m_spec);
      CHECK((j[m * fg.size() + q] - expect).cwiseAbs().maxCoeff() <
            1e-10 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
    }
  }
}
