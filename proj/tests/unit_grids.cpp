#include <doctest.h>

#include <Eigen/Dense>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "helpers.hpp"
#include "nlmd/errors.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/io.hpp"
#include "nlmd/rng.hpp"
#include "nlmd/tensor3.hpp"
#include "nlmd/transforms.hpp"

using namespace nlmd;
using namespace nlmd::testing;

TEST_CASE("midpoint frequency grid: single cell") {
  const FrequencyGrid g =
      build_frequency_grid(1.0, 1, FrequencyRule::UniformMidpoint);
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("midpoint frequency grid: uniform partition") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 4, FrequencyRule::UniformMidpoint);
  const double expect[] = {0.25, 0.75, 1.25, 1.75};
  REQUIRE(g.nodes.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(g.nodes[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    CHECK(g.weights[i] == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("gauss-legendre frequency grid integrates w^2 exactly") {
  const FrequencyGrid g =
      build_frequency_grid(1.0, 8, FrequencyRule::GaussLegendre);
  double sum = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    sum += g.weights[i] * g.nodes[i] * g.nodes[i];
  }
  CHECK(std::abs(sum - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("k grid: single cell node and spacing convention") {
  const KGrid g = KGrid::build(Eigen::Vector3d(1, 1, 1), {1, 1, 1});
  REQUIRE(g.n_half() == 1);
  CHECK(g.half_node(0).isApprox(Eigen::Vector3d(0, 0, 0.5), 1e-15));
  CHECK(g.n_plane() == 0);
}

TEST_CASE("k grid: 2x2x2 counts") {
  const KGrid g = KGrid::build(Eigen::Vector3d(1, 1, 1), {2, 2, 2});
  CHECK(g.n_half() == 4);
  CHECK(g.n_full() == 8);
  for (std::size_t m = 0; m < g.n_half(); ++m) CHECK(g.half_node(m).z() > 0);
}

TEST_CASE("k grid: half weights sum to half the box volume") {
  const Eigen::Vector3d extents(2.0, 3.0, 4.0);
  const KGrid g = KGrid::build(extents, {4, 3, 6});
  CHECK(std::abs(g.half_volume() - 0.5 * 2.0 * 3.0 * 4.0) < 1e-12);
}

TEST_CASE("k grid: mirror bookkeeping round trips") {
  const KGrid g = KGrid::build(Eigen::Vector3d(2, 2, 2), {3, 2, 4});
  for (std::size_t f = 0; f < g.n_full(); ++f) {
    const std::size_t mf = g.mirror_of(f);
    CHECK(g.full_node(mf).isApprox(-g.full_node(f), 1e-12));
    const std::ptrdiff_t found = g.find_full(-g.full_node(f), 1e-9);
    REQUIRE(found >= 0);
    CHECK(static_cast<std::size_t>(found) == mf);
  }
}

TEST_CASE("triad: axis-aligned wavevector") {
  const Triad t = build_triad(Eigen::Vector3d(0, 0, 2));
  CHECK(t.e3.isApprox(Eigen::Vector3d(0, 0, 1), 1e-15));
  CHECK(t.e1.isApprox(Eigen::Vector3d(1, 0, 0), 1e-15));
  CHECK(t.e2.isApprox(Eigen::Vector3d(0, 1, 0), 1e-15));
}

TEST_CASE("triad: completeness and orthonormality") {
  SplitMix64 g(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d k = random_vec3(g, 3.0);
    if (k.norm() < 1e-6) continue;
    const Triad t = build_triad(k);
    const Eigen::Matrix3d sum = t.e1 * t.e1.transpose() +
                                t.e2 * t.e2.transpose() +
                                t.e3 * t.e3.transpose();
    CHECK((sum - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(t.e1.cross(t.e2).dot(t.e3) - 1.0) < 1e-12);
  }
  const Triad t = build_triad(Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0));
  CHECK(std::abs(t.e1.norm() - 1) < 1e-12);
  CHECK(std::abs(t.e2.norm() - 1) < 1e-12);
  CHECK(std::abs(t.e3.norm() - 1) < 1e-12);
  CHECK(std::abs(t.e1.dot(t.e2)) < 1e-12);
  CHECK(std::abs(t.e1.dot(t.e3)) < 1e-12);
  CHECK(std::abs(t.e2.dot(t.e3)) < 1e-12);
  CHECK_THROWS_AS(build_triad(Eigen::Vector3d::Zero()), config_error);
}

TEST_CASE("mirror extension: conjugate values and plane-node reality") {
  const KGrid g = KGrid::build(Eigen::Vector3d(1, 1, 1), {2, 2, 2});
  SplitMix64 rng(7);
  std::vector<Eigen::Vector3cd> half(g.n_half());
  for (auto& v : half) v = random_vec3c(rng);
  const auto full = mirror_extend(g, half);
  for (std::size_t f = g.n_half(); f < g.n_full(); ++f) {
    CHECK(full[f].isApprox(half[g.half_of_full(f)].conjugate(), 1e-15));
  }

  // a k_z = 0 node is its own mirror: real values pass through, an
  // imaginary part is a representation violation
  const KGrid plane = KGrid::from_nodes({Eigen::Vector3d(0.1, 0, 0)}, {1.0});
  REQUIRE(plane.n_plane() == 1);
  std::vector<Eigen::Vector3cd> real_val{Eigen::Vector3cd(1.0, 2.0, -0.5)};
  CHECK(mirror_extend(plane, real_val)[0].isApprox(real_val[0], 1e-15));
  std::vector<Eigen::Vector3cd> bad{Eigen::Vector3cd(cplx(1, 0.5), 0, 0)};
  CHECK_THROWS_AS(mirror_extend(plane, bad), reality_error);
}

TEST_CASE("mirror extension: position-space field is real") {
  const KGrid g = KGrid::build(Eigen::Vector3d(2, 2, 2), {2, 3, 4});
  SplitMix64 rng(11);
  std::vector<Eigen::Vector3cd> half(g.n_half());
  for (auto& v : half) v = random_vec3c(rng);
  const auto full = mirror_extend(g, half);

  double scale = 0;
  for (const auto& v : full) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d r = random_vec3(rng, 5.0);
    Eigen::Vector3cd e = Eigen::Vector3cd::Zero();
    for (std::size_t f = 0; f < g.n_full(); ++f) {
      e += full[f] * std::polar(1.0, g.full_node(f).dot(r));
    }
    CHECK(e.imag().cwiseAbs().maxCoeff() <
          1e-10 * scale * static_cast<double>(g.n_full()));
  }
}

TEST_CASE("conjugate time grid pairs the frequency axis") {
  const FrequencyGrid g =
      build_frequency_grid(4.0, 16, FrequencyRule::UniformMidpoint);
  const TimeGrid t = conjugate_time_grid(g);
  CHECK(t.n == 32);
  CHECK(t.dt == doctest::Approx(0.5 * kTwoPi / 4.0).epsilon(1e-15));
}

TEST_CASE("two-sided axis: ascending, odd in slot reflection") {
  const FrequencyGrid g =
      build_frequency_grid(3.0, 8, FrequencyRule::UniformMidpoint);
  const auto axis = two_sided_axis(g);
  REQUIRE(axis.size() == 16);
  for (std::size_t s = 0; s + 1 < axis.size(); ++s) CHECK(axis[s] < axis[s + 1]);
  for (std::size_t s = 0; s < axis.size(); ++s) {
    CHECK(axis[s] == doctest::Approx(-axis[axis.size() - 1 - s]).epsilon(1e-15));
    CHECK(two_sided_weight(g, s) ==
          doctest::Approx(two_sided_weight(g, axis.size() - 1 - s)));
  }
}

TEST_CASE("temporal transform pair: round trip is the identity") {
  const FrequencyGrid g =
      build_frequency_grid(2.5, 12, FrequencyRule::UniformMidpoint);
  const TimeGrid t = conjugate_time_grid(g);
  SplitMix64 rng(13);
  std::vector<Eigen::Vector3cd> spec(2 * g.size());
  for (auto& v : spec) v = random_vec3c(rng);

  const auto series = spectrum_to_time(spec, g, t);
  const auto back = time_to_spectrum(series, g, t);
  REQUIRE(back.size() == spec.size());
  for (std::size_t s = 0; s < spec.size(); ++s) {
    CHECK((back[s] - spec[s]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("inverse transform: single-slot spectrum carries one phase") {
  const FrequencyGrid g =
      build_frequency_grid(2.0, 6, FrequencyRule::UniformMidpoint);
  const TimeGrid t = conjugate_time_grid(g);
  const auto axis = two_sided_axis(g);
  const std::size_t slot = 8;  // positive bin q = 2
  const Eigen::Vector3cd amp(cplx(0.8, -0.3), cplx(0, 1.1), cplx(-0.2, 0));
  std::vector<Eigen::Vector3cd> spec(2 * g.size(), Eigen::Vector3cd::Zero());
  spec[slot] = amp;
  const auto series = spectrum_to_time(spec, g, t);
  const double w = two_sided_weight(g, slot);
  for (std::size_t j = 0; j < t.n; ++j) {
    const Eigen::Vector3cd expect =
        amp * (w / kTwoPi32) * std::polar(1.0, axis[slot] * t.node(j));
    CHECK((series[j] - expect).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("sinc kernel: series matches direct evaluation") {
  CHECK(sinc_kernel(0.0, 0.7) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(sinc_kernel(1.3, 0.9) ==
        doctest::Approx(std::sin(1.3 * 0.9) / 1.3).epsilon(1e-14));
  // tiny argument: sin(wt)/w = t (1 - (wt)^2/6 + ...)
  const double w = 1e-9, tt = 0.4;
  CHECK(std::abs(sinc_kernel(w, tt) - tt) < 1e-15);
}

TEST_CASE("tensor last-index swap and conjugation") {
  SplitMix64 rng(17);
  const Tensor3 t = random_tensor3(rng);
  const Tensor3 s = t.swapped_last();
  const Tensor3 c = t.conjugate();
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        CHECK(s(i, a, b) == t(i, b, a));
        CHECK(c(i, a, b) == std::conj(t(i, a, b)));
      }
    }
  }
  // the swap is an involution
  const Tensor3 back = s.swapped_last();
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) CHECK(back(i, a, b) == t(i, a, b));
    }
  }
}

TEST_CASE("tensor contraction matches the index definition") {
  SplitMix64 rng(19);
  const Tensor3 t = random_tensor3(rng);
  const Eigen::Vector3cd u = random_vec3c(rng);
  const Eigen::Vector3cd v = random_vec3c(rng);
  const Eigen::Vector3cd got = t.contract(u, v);
  for (int i = 0; i < 3; ++i) {
    cplx sum = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) sum += t(i, a, b) * u(a) * v(b);
    }
    CHECK(std::abs(got(i) - sum) < 1e-14);
  }
}

TEST_CASE("splitmix rng: deterministic, substreams decorrelate") {
  SplitMix64 a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
  }
  CHECK(substream_seed(5, 0) != substream_seed(5, 1));
  CHECK(substream_seed(5, 0) != substream_seed(6, 0));
  (void)c;
}

TEST_CASE("gaussian stream: moments at smoke-test precision") {
  GaussianStream g(2026);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("array file: real and complex round trips") {
  const std::string dir = "io_test_tmp";
  std::filesystem::create_directories(dir);

  ArrayFile f;
  f.dtype = kDtypeReal64;
  f.axes = {ArrayAxis{"a", 2, 0.5, -0.25}, ArrayAxis{"b", 3, 0.0, 0.0}};
  f.flags = {{"eta", 0.01}, {"seed", 42.0}};
  f.real_data = {1, 2, 3, 4, 5, 6.5};
  write_array(dir + "/real.nlmd", f);
  const ArrayFile r = read_array(dir + "/real.nlmd");
  CHECK(r.dtype == kDtypeReal64);
  REQUIRE(r.axes.size() == 2);
  CHECK(r.axes[0].name == "a");
  CHECK(r.axes[0].length == 2);
  CHECK(r.axes[0].spacing == doctest::Approx(0.5));
  CHECK(r.axes[0].origin == doctest::Approx(-0.25));
  CHECK(r.flag("eta", -1) == doctest::Approx(0.01));
  CHECK(r.flag("missing", -7.0) == doctest::Approx(-7.0));
  REQUIRE(r.real_data.size() == 6);
  CHECK(r.real_data[5] == doctest::Approx(6.5));

  ArrayFile c;
  c.dtype = kDtypeComplex128;
  c.axes = {ArrayAxis{"n", 4, 1.0, 0.0}};
  c.complex_data = {cplx(1, -1), cplx(0, 2), cplx(3, 0), cplx(-4, 5)};
  write_array(dir + "/cplx.nlmd", c);
  const ArrayFile rc = read_array(dir + "/cplx.nlmd");
  REQUIRE(rc.complex_data.size() == 4);
  CHECK(std::abs(rc.complex_data[3] - cplx(-4, 5)) == 0.0);

  // identical content -> identical bytes
  write_array(dir + "/cplx2.nlmd", c);
  std::ifstream f1(dir + "/cplx.nlmd", std::ios::binary);
  std::ifstream f2(dir + "/cplx2.nlmd", std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(!s1.empty());
}

TEST_CASE("array file: shape and i/o errors") {
  ArrayFile f;
  f.dtype = kDtypeReal64;
  f.axes = {ArrayAxis{"a", 4, 1.0, 0.0}};
  f.real_data = {1, 2, 3};  // too short
  CHECK_THROWS_AS(write_array("io_test_tmp/bad.nlmd", f), shape_error);
  CHECK_THROWS_AS(read_array("io_test_tmp/does_not_exist.nlmd"), io_error);

  // truncated payload
  f.real_data = {1, 2, 3, 4};
  write_array("io_test_tmp/trunc.nlmd", f);
  std::filesystem::resize_file("io_test_tmp/trunc.nlmd", 20);
  CHECK_THROWS_AS(read_array("io_test_tmp/trunc.nlmd"), io_error);
}
