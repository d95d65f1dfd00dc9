#include "nlmd/fields.hpp"

#include <algorithm>
#include <cmath>

#include "nlmd/errors.hpp"
#include "nlmd/parallel.hpp"

namespace nlmd {

namespace {

void require_spectrum_shape(std::span<const Eigen::Vector3cd> v,
                            const KGrid& kg, const FrequencyGrid& grid,
                            const char* what) {
  if (v.size() != kg.n_half() * grid.size()) {
    throw shape_error(std::string(what) + ": spectrum shape mismatch");
  }
}

void require_series_shape(std::span<const Eigen::Vector3cd> v,
                          const KGrid& kg, const TimeGrid& tgrid,
                          const char* what) {
  if (v.size() != kg.n_half() * tgrid.n) {
    throw shape_error(std::string(what) + ": time-series shape mismatch");
  }
}

std::vector<Eigen::Vector3cd> constitutive_eval(
    std::span<const Eigen::Vector3cd> field_time, const Kernel1Time& k1,
    const Kernel2Time* k2, std::span<const Eigen::Vector3cd> noise_density,
    const KGrid& kg, const TimeGrid& tgrid, FieldKind want, unsigned threads,
    const char* what) {
  if (k1.kind != want || (k2 && k2->kind != want)) {
    throw config_error(std::string(what) + ": kernel kind mismatch");
  }
  require_series_shape(field_time, kg, tgrid, what);
  if (!noise_density.empty()) {
    require_series_shape(noise_density, kg, tgrid, what);
  }
  const std::size_t nm = kg.n_half();
  const std::size_t nf = kg.n_full();
  const std::size_t nt = tgrid.n;
  if (k1.tgrid.n != nt ||
      std::abs(k1.tgrid.dt - tgrid.dt) > 1e-12 * tgrid.dt) {
    throw shape_error(std::string(what) + ": kernel time grid mismatch");
  }
  if (k2 && (k2->tgrid.n != nt ||
             std::abs(k2->tgrid.dt - tgrid.dt) > 1e-12 * tgrid.dt)) {
    throw shape_error(std::string(what) + ": rank-2 kernel time grid mismatch");
  }
  if (k2 && !k2->homogeneous && k2->stride != 1) {
    throw config_error(std::string(what) +
                       ": tabulated rank-2 kernels need stride 1");
  }
  const auto field_at = [&](std::size_t f, std::size_t j) -> Eigen::Vector3cd {
    const Eigen::Vector3cd& v = field_time[kg.half_of_full(f) * nt + j];
    return kg.conjugated(f) ? v.conjugate() : v;
  };

  // momentum-transfer partner per (output half node, lattice node)
  std::vector<std::ptrdiff_t> pair_of;
  if (k2 && k2->homogeneous) {
    pair_of.assign(nm * nf, -1);
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        pair_of[m * nf + f1] =
            kg.find_full(kg.half_node(m) - kg.full_node(f1), 1e-9);
      }
    }
  }

  std::vector<Eigen::Vector3cd> out(nm * nt);
  parallel_for(nm, threads, [&](std::size_t m) {
    for (std::size_t j = 0; j < nt; ++j) {
      Eigen::Vector3cd acc = noise_density.empty()
                                 ? Eigen::Vector3cd::Zero()
                                 : noise_density[m * nt + j];

      // linear running convolution over [0, t_j]
      if (j > 0) {
        Eigen::Vector3cd lin = Eigen::Vector3cd::Zero();
        for (std::size_t jp = 0; jp <= j; ++jp) {
          const double tau = (jp == 0 || jp == j) ? 0.5 : 1.0;
          if (k1.homogeneous) {
            lin += tau * (k1.at(j - jp) * field_time[m * nt + jp]);
          } else {
            Eigen::Vector3cd lattice = Eigen::Vector3cd::Zero();
            for (std::size_t f1 = 0; f1 < nf; ++f1) {
              lattice +=
                  kg.full_weight(f1) * (k1.at(j - jp, m, f1) * field_at(f1, jp));
            }
            lin += tau * lattice;
          }
        }
        acc += tgrid.dt * lin;
      }

      // bilinear double convolution
      if (k2 && j > 0) {
        Eigen::Vector3cd quad = Eigen::Vector3cd::Zero();
        if (k2->homogeneous) {
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            const std::ptrdiff_t f2 = pair_of[m * nf + f1];
            if (f2 < 0) continue;
            const double wk = kg.full_weight(f1);
            for (std::size_t j1 = 0; j1 <= j; ++j1) {
              const double tau1 = (j1 == 0 || j1 == j) ? 0.5 : 1.0;
              const Eigen::Vector3cd e1 = field_at(f1, j1);
              for (std::size_t j2 = 0; j2 <= j; ++j2) {
                const double tau2 = (j2 == 0 || j2 == j) ? 0.5 : 1.0;
                const Tensor3 ker = k2->eval(tgrid.dt * (j - j1),
                                             tgrid.dt * (j - j2));
                quad += (wk * tau1 * tau2) *
                        ker.contract(
                            e1, field_at(static_cast<std::size_t>(f2), j2));
              }
            }
          }
        } else {
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            for (std::size_t f2 = 0; f2 < nf; ++f2) {
              const double wk = kg.full_weight(f1) * kg.full_weight(f2);
              for (std::size_t j1 = 0; j1 <= j; ++j1) {
                const double tau1 = (j1 == 0 || j1 == j) ? 0.5 : 1.0;
                const Eigen::Vector3cd e1 = field_at(f1, j1);
                for (std::size_t j2 = 0; j2 <= j; ++j2) {
                  const double tau2 = (j2 == 0 || j2 == j) ? 0.5 : 1.0;
                  quad += (wk * tau1 * tau2) *
                          k2->at(j - j1, j - j2, m, f1, f2)
                              .contract(e1, field_at(f2, j2));
                }
              }
            }
          }
        }
        acc += tgrid.dt * tgrid.dt * quad;
      }

      out[m * nt + j] = acc;
    }
  });
  return out;
}

}  // namespace

std::vector<Eigen::Vector3cd> to_time_domain(
    std::span<const Eigen::Vector3cd> spectrum, const KGrid& kgrid,
    const FrequencyGrid& grid, const TimeGrid& tgrid, SpectralParity parity,
    unsigned threads) {
  require_spectrum_shape(spectrum, kgrid, grid, "time-domain reconstruction");
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  const double sign = parity == SpectralParity::Even ? 1.0 : -1.0;
  std::vector<Eigen::Vector3cd> out(nm * tgrid.n);
  parallel_for(nm, threads, [&](std::size_t m) {
    std::vector<Eigen::Vector3cd> two_sided(2 * nw);
    for (std::size_t s = 0; s < 2 * nw; ++s) {
      two_sided[s] = s < nw ? sign * spectrum[m * nw + (nw - 1 - s)]
                            : spectrum[m * nw + (s - nw)];
    }
    const std::vector<Eigen::Vector3cd> row =
        spectrum_to_time(two_sided, grid, tgrid);
    std::copy(row.begin(), row.end(), out.begin() + m * tgrid.n);
  });
  return out;
}

std::vector<Eigen::Vector3cd> series_spectrum(
    std::span<const Eigen::Vector3cd> series, const KGrid& kgrid,
    const FrequencyGrid& grid, const TimeGrid& tgrid, unsigned threads) {
  require_series_shape(series, kgrid, tgrid, "series spectrum");
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  std::vector<Eigen::Vector3cd> out(nm * nw);
  parallel_for(nm, threads, [&](std::size_t m) {
    const std::vector<Eigen::Vector3cd> full = time_to_spectrum(
        series.subspan(m * tgrid.n, tgrid.n), grid, tgrid);
    for (std::size_t q = 0; q < nw; ++q) out[m * nw + q] = full[nw + q];
  });
  return out;
}

std::vector<Eigen::Vector3cd> magnetic_from_electric(
    std::span<const Eigen::Vector3cd> e_spectrum, const KGrid& kgrid,
    const FrequencyGrid& grid) {
  require_spectrum_shape(e_spectrum, kgrid, grid, "induction spectrum");
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  std::vector<Eigen::Vector3cd> out(nm * nw);
  for (std::size_t m = 0; m < nm; ++m) {
    const Eigen::Vector3cd k = kgrid.half_node(m).cast<cplx>();
    for (std::size_t q = 0; q < nw; ++q) {
      out[m * nw + q] =
          cross_bilinear(k, e_spectrum[m * nw + q]) / (-grid.nodes[q]);
    }
  }
  return out;
}

std::vector<Eigen::Vector3cd> polarization_eval(
    std::span<const Eigen::Vector3cd> field_time, const Kernel1Time& k1,
    const Kernel2Time* k2, std::span<const Eigen::Vector3cd> noise_density,
    const KGrid& kgrid, const TimeGrid& tgrid, unsigned threads) {
  return constitutive_eval(field_time, k1, k2, noise_density, kgrid, tgrid,
                           FieldKind::Electric, threads, "polarization");
}

std::vector<Eigen::Vector3cd> magnetization_eval(
    std::span<const Eigen::Vector3cd> field_time, const Kernel1Time& k1,
    const Kernel2Time* k2, std::span<const Eigen::Vector3cd> noise_density,
    const KGrid& kgrid, const TimeGrid& tgrid, unsigned threads) {
  return constitutive_eval(field_time, k1, k2, noise_density, kgrid, tgrid,
                           FieldKind::Magnetic, threads, "magnetization");
}

std::vector<cplx> scalar_potential(std::span<const Eigen::Vector3cd> p,
                                   const KGrid& kgrid, double eps0) {
  const std::size_t nm = kgrid.n_half();
  if (nm == 0 || p.size() % nm != 0) {
    throw shape_error("scalar potential: layout not divisible by half grid");
  }
  const std::size_t inner = p.size() / nm;
  std::vector<cplx> out(p.size());
  for (std::size_t m = 0; m < nm; ++m) {
    const Eigen::Vector3d k = kgrid.half_node(m);
    const double k2 = k.squaredNorm();
    if (k2 == 0.0) {
      throw config_error(
          "scalar potential: undefined at k = 0 in the transverse gauge");
    }
    for (std::size_t j = 0; j < inner; ++j) {
      out[m * inner + j] =
          cplx(0, -1) * k.cast<cplx>().dot(p[m * inner + j]) / (eps0 * k2);
    }
  }
  return out;
}

std::vector<Eigen::Vector3cd> displacement(
    std::span<const Eigen::Vector3cd> e, std::span<const Eigen::Vector3cd> p,
    double eps0) {
  if (e.size() != p.size()) {
    throw shape_error("displacement: field and polarization shapes differ");
  }
  std::vector<Eigen::Vector3cd> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = eps0 * e[i] + p[i];
  return out;
}

double gauge_residual(std::span<const Eigen::Vector3cd> e_spectrum,
                      std::span<const Eigen::Vector3cd> p_total_spectrum,
                      const KGrid& kgrid, const FrequencyGrid& grid,
                      double eta, double eps0) {
  require_spectrum_shape(e_spectrum, kgrid, grid, "gauge residual");
  require_spectrum_shape(p_total_spectrum, kgrid, grid, "gauge residual");
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  double worst = 0.0;
  for (std::size_t m = 0; m < nm; ++m) {
    const Eigen::Vector3cd k = kgrid.half_node(m).cast<cplx>();
    if (kgrid.half_node(m).squaredNorm() == 0.0) continue;
    for (std::size_t q = 0; q < nw; ++q) {
      const double w = grid.nodes[q];
      const cplx wt(w, eta);
      const cplx lhs = eps0 * k.dot(e_spectrum[m * nw + q]);
      const cplx rhs =
          -(w * w / (wt * wt)) * k.dot(p_total_spectrum[m * nw + q]);
      const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  return worst;
}

}  // namespace nlmd
