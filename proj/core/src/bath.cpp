#include "nlmd/bath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlmd/errors.hpp"
#include "nlmd/parallel.hpp"

namespace nlmd {

namespace {

// symplectic composition weights (4th order, three Verlet substeps)
constexpr double kW1 = 1.0 / (2.0 - 1.2599210498948731647672106072782);
constexpr double kW0 = 1.0 - 2.0 * kW1;
// drift/kick schedule: x += c_i h v, then v += d_i h F(x, t)
constexpr double kDrift[4] = {kW1 / 2, (kW0 + kW1) / 2, (kW0 + kW1) / 2,
                              kW1 / 2};
constexpr double kKick[4] = {kW1, kW0, kW1, 0.0};

void require_drive(std::span<const Eigen::Vector3cd> drive, const KGrid& kg,
                   const TimeGrid& tgrid) {
  if (drive.size() != kg.n_half() * tgrid.n) {
    throw shape_error("bath integration: drive shape mismatch");
  }
}

double stability_bound(const FrequencyGrid& grid) {
  double wmax = 0.0;
  for (double w : grid.nodes) wmax = std::max(wmax, std::abs(w));
  return wmax > 0 ? 0.1 / wmax : std::numeric_limits<double>::infinity();
}

// linear interpolation of a (slot, time) series at an off-node time,
// clamped to the sampled interval
Eigen::Vector3cd interp_series(std::span<const Eigen::Vector3cd> series,
                               std::size_t slot, const TimeGrid& tgrid,
                               double t) {
  const double u = std::clamp(t / tgrid.dt, 0.0,
                              static_cast<double>(tgrid.n - 1));
  const std::size_t lo =
      std::min(static_cast<std::size_t>(u), tgrid.n - 2);
  const double frac = u - static_cast<double>(lo);
  const std::size_t base = slot * tgrid.n;
  return (1.0 - frac) * series[base + lo] + frac * series[base + lo + 1];
}

// contracted drive per bin, D(q, m, j) = sum_k1 f_adj(w_q, k1, k_m) E(k1, j)
std::vector<Eigen::Vector3cd> contract_drive(
    const Coupling1& c1, std::span<const Eigen::Vector3cd> drive,
    const KGrid& kg, const TimeGrid& tgrid, unsigned threads) {
  const std::size_t nq = c1.grid().size();
  const std::size_t nm = kg.n_half();
  const std::size_t nf = kg.n_full();
  const std::size_t nt = tgrid.n;
  std::vector<Eigen::Vector3cd> d(nq * nm * nt);
  parallel_for(nq * nm, threads, [&](std::size_t qm) {
    const std::size_t q = qm / nm;
    const std::size_t m = qm % nm;
    if (c1.homogeneous()) {
      const Eigen::Matrix3cd a = c1.adjoint_at(q);
      for (std::size_t j = 0; j < nt; ++j) {
        d[qm * nt + j] = a * drive[m * nt + j];
      }
    } else {
      for (std::size_t j = 0; j < nt; ++j) {
        Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
        for (std::size_t f1 = 0; f1 < nf; ++f1) {
          const Eigen::Vector3cd& e = drive[kg.half_of_full(f1) * nt + j];
          acc += kg.full_weight(f1) *
                 (c1.adjoint_at(q, m, f1) *
                  (kg.conjugated(f1) ? Eigen::Vector3cd(e.conjugate()) : e));
        }
        d[qm * nt + j] = acc;
      }
    }
  });
  return d;
}

// out_i = sum_{j,k} T_{jik} u_j w_k (free middle index)
Eigen::Vector3cd mid_contract(const Tensor3& t, const Eigen::Vector3cd& u,
                              const Eigen::Vector3cd& w) {
  Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) out[i] += t(j, i, k) * u[j] * w[k];
    }
  }
  return out;
}

// out_i = sum_{a,b} T_{abi} u_a w_b (free last index)
Eigen::Vector3cd last_contract(const Tensor3& t, const Eigen::Vector3cd& u,
                               const Eigen::Vector3cd& w) {
  Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int i = 0; i < 3; ++i) out[i] += t(a, b, i) * u[a] * w[b];
    }
  }
  return out;
}

std::size_t substeps_per_node(const TimeGrid& tgrid, double dt) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tgrid.dt / dt - 1e-12)));
}

}  // namespace

BathState integrate_bath_linear(const Coupling1& c1,
                                std::span<const Eigen::Vector3cd> drive,
                                const KGrid& kgrid, const TimeGrid& tgrid,
                                double dt,
                                std::span<const Eigen::Vector3cd> x0,
                                std::span<const Eigen::Vector3cd> v0,
                                unsigned threads) {
  require_drive(drive, kgrid, tgrid);
  if (!(dt > 0)) throw config_error("bath integration: dt must be > 0");
  if (dt > stability_bound(c1.grid())) {
    throw stability_error(
        "bath integration: dt exceeds 0.1 / w_max; reduce the step");
  }
  const std::size_t nq = c1.grid().size();
  const std::size_t nm = kgrid.n_half();
  const std::size_t nt = tgrid.n;
  if (!x0.empty() && x0.size() != nq * nm) {
    throw shape_error("bath integration: initial displacement shape");
  }
  if (!v0.empty() && v0.size() != nq * nm) {
    throw shape_error("bath integration: initial velocity shape");
  }

  const std::vector<Eigen::Vector3cd> d =
      contract_drive(c1, drive, kgrid, tgrid, threads);
  const std::size_t steps = substeps_per_node(tgrid, dt);
  const double h = tgrid.dt / static_cast<double>(steps);

  BathState out;
  out.grid = c1.grid();
  out.kgrid = kgrid;
  out.tgrid = tgrid;
  out.x.resize(nq * nm * nt);
  out.v.resize(nq * nm * nt);

  parallel_for(nq * nm, threads, [&](std::size_t qm) {
    const double w2 = c1.grid().nodes[qm / nm] * c1.grid().nodes[qm / nm];
    Eigen::Vector3cd x =
        x0.empty() ? Eigen::Vector3cd::Zero() : x0[qm];
    Eigen::Vector3cd v =
        v0.empty() ? Eigen::Vector3cd::Zero() : v0[qm];
    out.x[qm * nt] = x;
    out.v[qm * nt] = v;
    double t = 0.0;
    for (std::size_t j = 1; j < nt; ++j) {
      for (std::size_t step = 0; step < steps; ++step) {
        for (int part = 0; part < 4; ++part) {
          x += (kDrift[part] * h) * v;
          t += kDrift[part] * h;
          if (kKick[part] == 0.0) continue;
          const Eigen::Vector3cd f =
              -w2 * x + interp_series(d, qm, tgrid, t);
          v += (kKick[part] * h) * f;
        }
      }
      // pin the node time exactly (guards drift interpolation at the ends)
      t = static_cast<double>(j) * tgrid.dt;
      out.x[qm * nt + j] = x;
      out.v[qm * nt + j] = v;
    }
  });
  return out;
}

BathState first_order_solution(const Coupling1& c1,
                               std::span<const Eigen::Vector3cd> drive,
                               const KGrid& kgrid, const TimeGrid& tgrid,
                               const NoiseRealization* noise,
                               unsigned threads) {
  require_drive(drive, kgrid, tgrid);
  const std::size_t nq = c1.grid().size();
  const std::size_t nm = kgrid.n_half();
  const std::size_t nt = tgrid.n;
  const std::vector<Eigen::Vector3cd> d =
      contract_drive(c1, drive, kgrid, tgrid, threads);

  BathState out;
  out.grid = c1.grid();
  out.kgrid = kgrid;
  out.tgrid = tgrid;
  out.x.assign(nq * nm * nt, Eigen::Vector3cd::Zero());
  out.v.assign(nq * nm * nt, Eigen::Vector3cd::Zero());

  parallel_for(nq * nm, threads, [&](std::size_t qm) {
    const std::size_t q = qm / nm;
    const std::size_t m = qm % nm;
    const double w = c1.grid().nodes[q];

    // split sin w(t - t') and cos w(t - t') into running trapezoid sums
    Eigen::Vector3cd sum_c = Eigen::Vector3cd::Zero();
    Eigen::Vector3cd sum_s = Eigen::Vector3cd::Zero();
    const Eigen::Vector3cd g_c0 = d[qm * nt];
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = tgrid.node(j);
      const Eigen::Vector3cd g_c = std::cos(w * t) * d[qm * nt + j];
      const Eigen::Vector3cd g_s = std::sin(w * t) * d[qm * nt + j];
      sum_c += g_c;
      sum_s += g_s;
      if (j > 0) {
        const Eigen::Vector3cd trap_c = sum_c - 0.5 * (g_c0 + g_c);
        const Eigen::Vector3cd trap_s = sum_s - 0.5 * g_s;
        if (w * tgrid.t_max() < 1e-3) {
          // near-degenerate oscillator: direct quadrature, no 1/w split
          Eigen::Vector3cd xs = Eigen::Vector3cd::Zero();
          Eigen::Vector3cd vs = Eigen::Vector3cd::Zero();
          for (std::size_t jp = 0; jp <= j; ++jp) {
            const double tau = (jp == 0 || jp == j) ? 0.5 : 1.0;
            const double arg = t - tgrid.node(jp);
            xs += tau * sinc_kernel(w, arg) * d[qm * nt + jp];
            vs += tau * std::cos(w * arg) * d[qm * nt + jp];
          }
          out.x[qm * nt + j] = tgrid.dt * xs;
          out.v[qm * nt + j] = tgrid.dt * vs;
        } else {
          out.x[qm * nt + j] = (tgrid.dt / w) * (std::sin(w * t) * trap_c -
                                                 std::cos(w * t) * trap_s);
          out.v[qm * nt + j] = tgrid.dt * (std::cos(w * t) * trap_c +
                                           std::sin(w * t) * trap_s);
        }
      }
      if (noise) {
        const Eigen::Vector3cd a = c1.kind() == FieldKind::Electric
                                       ? noise->amplitude_electric(q, m)
                                       : noise->amplitude_magnetic(q, m);
        const cplx phase = std::polar(1.0, -w * t);
        const double scale = std::sqrt(noise->hbar() / (2.0 * w));
        out.x[qm * nt + j] += scale * 2.0 * (a * phase).real();
        out.v[qm * nt + j] +=
            scale * 2.0 * (cplx(0, -w) * a * phase).real();
      }
    }
  });
  return out;
}

BathState integrate_bath_nonlinear(const Coupling1& c1, const Coupling2& c2,
                                   std::span<const Eigen::Vector3cd> drive,
                                   const KGrid& kgrid, const TimeGrid& tgrid,
                                   double dt, unsigned threads) {
  require_drive(drive, kgrid, tgrid);
  if (!(dt > 0)) throw config_error("bath integration: dt must be > 0");
  if (dt > stability_bound(c1.grid())) {
    throw stability_error(
        "bath integration: dt exceeds 0.1 / w_max; reduce the step");
  }
  if (!c2.homogeneous()) {
    throw config_error(
        "nonlinear bath: rank-3 couplings must be momentum-conserving");
  }
  if (c2.kind() != c1.kind()) {
    throw config_error("nonlinear bath: coupling kind mismatch");
  }
  const FrequencyGrid& grid = c1.grid();
  const std::size_t nq = grid.size();
  const std::size_t nm = kgrid.n_half();
  const std::size_t nf = kgrid.n_full();
  const std::size_t nt = tgrid.n;

  const std::vector<Eigen::Vector3cd> d =
      contract_drive(c1, drive, kgrid, tgrid, threads);
  // conjugated coupling blocks, used by both quadratic terms
  std::vector<Tensor3> cc(nq * nq);
  for (std::size_t q1 = 0; q1 < nq; ++q1) {
    for (std::size_t q2 = 0; q2 < nq; ++q2) {
      cc[q1 * nq + q2] = c2.at(q1, q2).conjugate();
    }
  }
  // field node carrying momentum k_m + k_f, -1 when off-lattice
  std::vector<std::ptrdiff_t> sum_node(nm * nf);
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t f = 0; f < nf; ++f) {
      sum_node[m * nf + f] =
          kgrid.find_full(kgrid.half_node(m) + kgrid.full_node(f), 1e-9);
    }
  }
  const auto drive_at = [&](std::ptrdiff_t f, double t) -> Eigen::Vector3cd {
    const std::size_t fu = static_cast<std::size_t>(f);
    const Eigen::Vector3cd e =
        interp_series(drive, kgrid.half_of_full(fu), tgrid, t);
    return kgrid.conjugated(fu) ? Eigen::Vector3cd(e.conjugate()) : e;
  };

  const std::size_t steps = substeps_per_node(tgrid, dt);
  const double h = tgrid.dt / static_cast<double>(steps);

  std::vector<Eigen::Vector3cd> x(nq * nm, Eigen::Vector3cd::Zero());
  std::vector<Eigen::Vector3cd> v(nq * nm, Eigen::Vector3cd::Zero());
  std::vector<Eigen::Vector3cd> force(nq * nm);

  // blow-up guard relative to the drive scale
  double drive_scale = 1e-300;
  for (const auto& e : drive) {
    drive_scale = std::max(drive_scale, e.cwiseAbs().maxCoeff());
  }

  const auto eval_force = [&](double t) {
    parallel_for(nq * nm, threads, [&](std::size_t qm) {
      const std::size_t q = qm / nm;
      const std::size_t m = qm % nm;
      const double w = grid.nodes[q];
      Eigen::Vector3cd f = -(w * w) * x[qm] + interp_series(d, qm, tgrid, t);
      for (std::size_t qp = 0; qp < nq; ++qp) {
        const double wq = grid.weights[qp];
        for (std::size_t fp = 0; fp < nf; ++fp) {
          const std::ptrdiff_t fe = sum_node[m * nf + fp];
          if (fe < 0) continue;
          const Eigen::Vector3cd& xs = x[qp * nm + kgrid.half_of_full(fp)];
          // conj(X at node fp): the mirror conjugation and the equation's
          // conjugation cancel on the mirrored half
          const Eigen::Vector3cd xc =
              kgrid.conjugated(fp) ? xs : Eigen::Vector3cd(xs.conjugate());
          const Eigen::Vector3cd e = drive_at(fe, t);
          const double ww = wq * kgrid.full_weight(fp);
          // drive slot first, evolved bin in the first bath slot
          f += ww * mid_contract(cc[q * nq + qp], e, xc);
          // evolved bin in the second bath slot
          f += ww * last_contract(cc[qp * nq + q], e, xc);
        }
      }
      force[qm] = f;
    });
  };

  BathState out;
  out.grid = grid;
  out.kgrid = kgrid;
  out.tgrid = tgrid;
  out.x.resize(nq * nm * nt);
  out.v.resize(nq * nm * nt);
  for (std::size_t qm = 0; qm < nq * nm; ++qm) {
    out.x[qm * nt] = x[qm];
    out.v[qm * nt] = v[qm];
  }

  double t = 0.0;
  for (std::size_t j = 1; j < nt; ++j) {
    for (std::size_t step = 0; step < steps; ++step) {
      for (int part = 0; part < 4; ++part) {
        const double ch = kDrift[part] * h;
        parallel_for(nq * nm, threads,
                     [&](std::size_t qm) { x[qm] += ch * v[qm]; });
        t += ch;
        if (kKick[part] == 0.0) continue;
        eval_force(t);
        const double dh = kKick[part] * h;
        parallel_for(nq * nm, threads,
                     [&](std::size_t qm) { v[qm] += dh * force[qm]; });
      }
    }
    t = static_cast<double>(j) * tgrid.dt;
    double sup = 0.0;
    for (std::size_t qm = 0; qm < nq * nm; ++qm) {
      out.x[qm * nt + j] = x[qm];
      out.v[qm * nt + j] = v[qm];
      sup = std::max(sup, x[qm].cwiseAbs().maxCoeff());
    }
    if (!std::isfinite(sup) || sup > 1e9 * std::max(1.0, drive_scale)) {
      throw stability_error(
          "nonlinear bath integration unstable: displacement blow-up; "
          "reduce the rank-3 coupling or the step");
    }
  }
  return out;
}

}  // namespace nlmd
