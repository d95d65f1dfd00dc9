#include "nlmd/noise.hpp"

#include <cmath>

#include "nlmd/parallel.hpp"
#include "nlmd/rng.hpp"

namespace nlmd {

namespace {

// orthonormal polarization triad; direction-free fallback at the origin
Triad triad_for(const Eigen::Vector3d& k) {
  return k.norm() < 1e-300 ? axis_triad() : build_triad(k);
}

void require_bath_grid(const FrequencyGrid& a, const FrequencyGrid& b,
                       const char* what) {
  if (a.size() != b.size()) {
    throw config_error(std::string(what) +
                       ": coupling and realization grids differ in size");
  }
  for (std::size_t q = 0; q < a.size(); ++q) {
    const double scale = std::max(1.0, std::abs(a.nodes[q]));
    if (std::abs(a.nodes[q] - b.nodes[q]) > 1e-12 * scale) {
      throw config_error(std::string(what) +
                         ": coupling and realization grids differ");
    }
  }
}

// X(q, m, j) evaluated once for every (bin, half node, time node)
std::vector<Eigen::Vector3d> tabulate_displacements(
    const NoiseRealization& noise, bool electric, const TimeGrid& tgrid,
    unsigned threads) {
  const std::size_t nq = noise.grid().size();
  const std::size_t nm = noise.kgrid().n_half();
  std::vector<Eigen::Vector3d> x(nq * nm * tgrid.n);
  parallel_for(nq * nm, threads, [&](std::size_t qm) {
    const std::size_t q = qm / nm;
    const std::size_t m = qm % nm;
    for (std::size_t j = 0; j < tgrid.n; ++j) {
      x[qm * tgrid.n + j] =
          electric
              ? noise.displacement_electric(q, m, tgrid.node(j))
              : noise.displacement_magnetic(q, m, tgrid.node(j));
    }
  });
  return x;
}

// retarded oscillator convolutions I(q2, f, j) = int_0^tj s(w_q2, tj-t') E(f, t')
// for every full-lattice node; E at a conjugated node is the stored
// conjugate. Prefix sums keep this linear in the time count per (q2, f).
std::vector<Eigen::Vector3cd> tabulate_memory(
    const FrequencyGrid& grid, const KGrid& kg,
    std::span<const Eigen::Vector3cd> field_prev, const TimeGrid& tgrid,
    unsigned threads) {
  const std::size_t nq = grid.size();
  const std::size_t nf = kg.n_full();
  const std::size_t nt = tgrid.n;
  std::vector<Eigen::Vector3cd> mem(nq * nf * nt, Eigen::Vector3cd::Zero());
  parallel_for(nq * nf, threads, [&](std::size_t qf) {
    const std::size_t q = qf / nf;
    const std::size_t f = qf % nf;
    const double w = grid.nodes[q];
    const std::size_t mh = kg.half_of_full(f);
    const bool conj = kg.conjugated(f);
    const auto field_at = [&](std::size_t j) -> Eigen::Vector3cd {
      const Eigen::Vector3cd& v = field_prev[mh * nt + j];
      return conj ? v.conjugate() : v;
    };
    if (w * tgrid.t_max() < 1e-3) {
      // oscillator barely turns over: direct quadrature avoids the 1/w split
      for (std::size_t j = 1; j < nt; ++j) {
        Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
        for (std::size_t jp = 0; jp <= j; ++jp) {
          const double tau = (jp == 0 || jp == j) ? 0.5 : 1.0;
          acc += tau * sinc_kernel(w, tgrid.node(j) - tgrid.node(jp)) *
                 field_at(jp);
        }
        mem[qf * nt + j] = tgrid.dt * acc;
      }
      return;
    }
    // sin w(t-t') = sin(wt)cos(wt') - cos(wt)sin(wt'): two running sums
    Eigen::Vector3cd sum_c = Eigen::Vector3cd::Zero();
    Eigen::Vector3cd sum_s = Eigen::Vector3cd::Zero();
    Eigen::Vector3cd g_c0 = field_at(0);  // cos(0) = 1, sin(0) = 0
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = tgrid.node(j);
      const Eigen::Vector3cd e = field_at(j);
      const Eigen::Vector3cd g_c = std::cos(w * t) * e;
      const Eigen::Vector3cd g_s = std::sin(w * t) * e;
      sum_c += g_c;
      sum_s += g_s;
      if (j == 0) continue;  // empty interval
      const Eigen::Vector3cd trap_c = sum_c - 0.5 * (g_c0 + g_c);
      const Eigen::Vector3cd trap_s = sum_s - 0.5 * g_s;  // g_s(0) = 0
      mem[qf * nt + j] = (tgrid.dt / w) * (std::sin(w * t) * trap_c -
                                           std::cos(w * t) * trap_s);
    }
  });
  return mem;
}

std::vector<Eigen::Vector3cd> assemble_noise_density(
    const NoiseRealization& noise, const Coupling1& c1, const Coupling2* c2,
    std::span<const Eigen::Vector3cd> field_prev, const TimeGrid& tgrid,
    bool electric, unsigned threads) {
  const char* what = electric ? "noise polarization" : "noise magnetization";
  const FieldKind want = electric ? FieldKind::Electric : FieldKind::Magnetic;
  if (c1.kind() != want) {
    throw config_error(std::string(what) + ": coupling kind mismatch");
  }
  require_bath_grid(c1.grid(), noise.grid(), what);
  if (c2) {
    if (c2->kind() != want) {
      throw config_error(std::string(what) + ": coupling kind mismatch");
    }
    if (!c2->homogeneous()) {
      throw config_error(std::string(what) +
                         ": rank-3 couplings must be momentum-conserving");
    }
    require_bath_grid(c2->grid(), noise.grid(), what);
  }
  const KGrid& kg = noise.kgrid();
  const FrequencyGrid& grid = noise.grid();
  const std::size_t nq = grid.size();
  const std::size_t nm = kg.n_half();
  const std::size_t nf = kg.n_full();
  const std::size_t nt = tgrid.n;
  const bool memory = c2 && !field_prev.empty();
  if (!field_prev.empty() && field_prev.size() != nm * nt) {
    throw shape_error(std::string(what) +
                      ": previous-order field has the wrong shape");
  }

  const std::vector<Eigen::Vector3d> x =
      tabulate_displacements(noise, electric, tgrid, threads);
  const auto x_at = [&](std::size_t q, std::size_t f,
                        std::size_t j) -> const Eigen::Vector3d& {
    // real displacements are mirror-invariant: -k carries the same value
    return x[(q * nm + kg.half_of_full(f)) * nt + j];
  };

  std::vector<Eigen::Vector3cd> mem;
  if (memory) mem = tabulate_memory(grid, kg, field_prev, tgrid, threads);

  // momentum-transfer lookup per (output half node, lattice node)
  std::vector<std::ptrdiff_t> pair_of;
  if (c2) {
    pair_of.assign(nm * nf, -1);
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        pair_of[m * nf + f1] =
            kg.find_full(kg.half_node(m) - kg.full_node(f1), 1e-9);
      }
    }
  }

  // adjoint rank-2 factors for the memory term
  std::vector<Eigen::Matrix3cd> adj(c2 ? nq : 0);
  for (std::size_t q = 0; q < adj.size(); ++q) adj[q] = c1.adjoint_at(q);

  std::vector<Eigen::Vector3cd> out(nm * nt, Eigen::Vector3cd::Zero());
  parallel_for(nm, threads, [&](std::size_t m) {
    for (std::size_t j = 0; j < nt; ++j) {
      Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();

      // linear bath term
      if (c1.homogeneous()) {
        for (std::size_t q = 0; q < nq; ++q) {
          acc += grid.weights[q] *
                 (c1.at(q) * x_at(q, m, j).cast<cplx>());
        }
      } else {
        for (std::size_t q = 0; q < nq; ++q) {
          Eigen::Vector3cd lattice = Eigen::Vector3cd::Zero();
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            lattice += kg.full_weight(f1) *
                       (c1.at(q, m, f1) * x_at(q, f1, j).cast<cplx>());
          }
          acc += grid.weights[q] * lattice;
        }
      }

      if (c2) {
        for (std::size_t f1 = 0; f1 < nf; ++f1) {
          const std::ptrdiff_t f2 = pair_of[m * nf + f1];
          if (f2 < 0) continue;
          const double wk = kg.full_weight(f1);
          for (std::size_t q1 = 0; q1 < nq; ++q1) {
            const Eigen::Vector3cd x1 = x_at(q1, f1, j).cast<cplx>();
            for (std::size_t q2 = 0; q2 < nq; ++q2) {
              const double ww = grid.weights[q1] * grid.weights[q2] * wk;
              const Tensor3& block = c2->at(q1, q2);
              // bilinear bath-bath term
              acc += ww * block.contract(
                              x1, x_at(q2, static_cast<std::size_t>(f2), j)
                                      .cast<cplx>());
              // memory term: both operator orderings collapse classically
              if (memory) {
                const Eigen::Vector3cd drive =
                    adj[q2] *
                    mem[(q2 * nf + static_cast<std::size_t>(f2)) * nt + j];
                acc += (2.0 * ww) * block.contract(x1, drive);
              }
            }
          }
        }
      }

      out[m * nt + j] = acc;
    }
  });
  return out;
}

}  // namespace

NoiseRealization NoiseRealization::sample(FrequencyGrid grid, KGrid kgrid,
                                          std::uint64_t seed, double hbar,
                                          unsigned threads) {
  for (double w : grid.nodes) {
    if (!(w > 0)) {
      throw config_error("noise sampling: frequency bins must be positive");
    }
  }
  if (!(hbar > 0)) throw config_error("noise sampling: hbar must be > 0");

  NoiseRealization noise;
  noise.seed_ = seed;
  noise.hbar_ = hbar;
  const std::size_t nq = grid.size();
  const std::size_t nm = kgrid.n_half();
  noise.b_.resize(nq * nm);
  noise.d_.resize(nq * nm);
  noise.a_electric_.resize(nq * nm);
  noise.a_magnetic_.resize(nq * nm);

  // amplitude scale per cell from the discrete commutator normalization
  parallel_for(nq * nm, threads, [&](std::size_t qm) {
    const std::size_t q = qm / nm;
    const std::size_t m = qm % nm;
    const double sigma =
        std::sqrt(0.5 / (grid.weights[q] * kgrid.half_weight(m)));
    const Triad tri = triad_for(kgrid.half_node(m));
    const Eigen::Vector3d axes[3] = {tri.e1, tri.e2, tri.e3};

    const auto draw = [&](std::uint64_t stream, Eigen::Vector3cd& modes,
                          Eigen::Vector3cd& amplitude) {
      GaussianStream rng(substream_seed(seed, stream));
      amplitude = Eigen::Vector3cd::Zero();
      for (int lam = 0; lam < 3; ++lam) {
        const double re = rng.next();
        const double im = rng.next();
        modes[lam] = sigma * cplx(re, im);
        amplitude += modes[lam] * axes[lam].cast<cplx>();
      }
    };
    draw(qm, noise.b_[qm], noise.a_electric_[qm]);
    draw(nq * nm + qm, noise.d_[qm], noise.a_magnetic_[qm]);
  });

  noise.grid_ = std::move(grid);
  noise.kgrid_ = std::move(kgrid);
  return noise;
}

Eigen::Vector3d NoiseRealization::displacement_electric(std::size_t q,
                                                        std::size_t m,
                                                        double t) const {
  const double w = grid_.nodes[q];
  const cplx phase = std::polar(1.0, -w * t);
  return std::sqrt(hbar_ / (2.0 * w)) * 2.0 *
         (amplitude_electric(q, m) * phase).real();
}

Eigen::Vector3d NoiseRealization::displacement_magnetic(std::size_t q,
                                                        std::size_t m,
                                                        double t) const {
  const double w = grid_.nodes[q];
  const cplx phase = std::polar(1.0, -w * t);
  return std::sqrt(hbar_ / (2.0 * w)) * 2.0 *
         (amplitude_magnetic(q, m) * phase).real();
}

std::vector<Eigen::Vector3cd> noise_polarization(
    const NoiseRealization& noise, const Coupling1& c1, const Coupling2* c2,
    std::span<const Eigen::Vector3cd> field_prev, const TimeGrid& tgrid,
    unsigned threads) {
  return assemble_noise_density(noise, c1, c2, field_prev, tgrid, true,
                                threads);
}

std::vector<Eigen::Vector3cd> noise_magnetization(
    const NoiseRealization& noise, const Coupling1& c1, const Coupling2* c2,
    std::span<const Eigen::Vector3cd> field_prev, const TimeGrid& tgrid,
    unsigned threads) {
  return assemble_noise_density(noise, c1, c2, field_prev, tgrid, false,
                                threads);
}

std::vector<Eigen::Vector3cd> source_term(
    std::span<const Eigen::Vector3cd> pn, std::span<const Eigen::Vector3cd> mn,
    const KGrid& kgrid, const FrequencyGrid& field_grid, const TimeGrid& tgrid,
    double mu0, unsigned threads) {
  const std::size_t nm = kgrid.n_half();
  const std::size_t nt = tgrid.n;
  const std::size_t nw = field_grid.size();
  if (pn.size() != nm * nt || mn.size() != nm * nt) {
    throw shape_error("source term: density arrays have the wrong shape");
  }
  std::vector<Eigen::Vector3cd> j(nm * nw, Eigen::Vector3cd::Zero());
  parallel_for(nm, threads, [&](std::size_t m) {
    const Eigen::Vector3cd k = kgrid.half_node(m).cast<cplx>();
    for (std::size_t q = 0; q < nw; ++q) {
      const double w = field_grid.nodes[q];
      Eigen::Vector3cd pt = Eigen::Vector3cd::Zero();
      Eigen::Vector3cd mt = Eigen::Vector3cd::Zero();
      for (std::size_t jt = 0; jt < nt; ++jt) {
        const cplx phase = std::polar(tgrid.dt, -w * tgrid.node(jt));
        pt += phase * pn[m * nt + jt];
        mt += phase * mn[m * nt + jt];
      }
      pt *= kSqrt2Pi;
      mt *= kSqrt2Pi;
      j[m * nw + q] = -mu0 * w * w * pt - mu0 * w * cross_bilinear(k, mt);
    }
  });
  return j;
}

}  // namespace nlmd
