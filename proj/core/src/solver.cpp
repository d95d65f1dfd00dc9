#include "nlmd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nlmd/fields.hpp"
#include "nlmd/parallel.hpp"

namespace nlmd {

namespace {

void require_field_shape(std::span<const Eigen::Vector3cd> v, const KGrid& kg,
                         const FrequencyGrid& grid, const char* what) {
  if (v.size() != kg.n_half() * grid.size()) {
    throw shape_error(std::string(what) + ": field/source shape mismatch");
  }
}

void require_kernel_grid(const FrequencyGrid& a, const FrequencyGrid& b,
                         const char* what) {
  bool ok = a.size() == b.size();
  for (std::size_t q = 0; ok && q < a.size(); ++q) {
    ok = std::abs(a.nodes[q] - b.nodes[q]) <=
         1e-12 * std::max(1.0, std::abs(b.nodes[q]));
  }
  if (!ok) {
    throw shape_error(std::string(what) +
                      ": kernel frequency grid differs from the field grid");
  }
}

double sup_norm(std::span<const Eigen::Vector3cd> v) {
  double s = 0.0;
  for (const auto& x : v) s = std::max(s, x.cwiseAbs().maxCoeff());
  return s;
}

// pairwise momentum-transfer lookup table (output half node, lattice node)
std::vector<std::ptrdiff_t> transfer_table(const KGrid& kg) {
  const std::size_t nm = kg.n_half();
  const std::size_t nf = kg.n_full();
  std::vector<std::ptrdiff_t> pair_of(nm * nf);
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t f1 = 0; f1 < nf; ++f1) {
      pair_of[m * nf + f1] =
          kg.find_full(kg.half_node(m) - kg.full_node(f1), 1e-9);
    }
  }
  return pair_of;
}

// dense table of the factored rank-2 kernel at (w_q, w_q - w_q1) pairs
std::vector<Tensor3> convolution_kernel_table(const Kernel2Factored& k2,
                                              const FrequencyGrid& grid,
                                              unsigned threads) {
  const std::size_t nw = grid.size();
  std::vector<Eigen::VectorXcd> g1(nw);
  for (std::size_t q1 = 0; q1 < nw; ++q1) {
    g1[q1] = k2.g_column(grid.nodes[q1]);
  }
  std::vector<Tensor3> table(nw * nw);
  parallel_for(nw, threads, [&](std::size_t q) {
    for (std::size_t q1 = 0; q1 < nw; ++q1) {
      table[q * nw + q1] = k2.eval_columns(
          g1[q1], k2.g_column(grid.nodes[q] - grid.nodes[q1]));
    }
  });
  return table;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0)) throw config_error("solver: tolerance must be > 0");
  if (!(eta > 0)) throw config_error("solver: eta must be > 0");
  if (!(damping > 0) || damping > 1.0) {
    throw config_error("solver: damping must lie in (0, 1]");
  }
  if (window == 0) throw config_error("solver: window must be >= 1");
}

std::string ConvergenceReport::to_text() const {
  std::ostringstream os;
  os << "# order  sup_change  residual\n";
  os << std::scientific << std::setprecision(6);
  for (const ConvergenceRow& row : rows) {
    os << row.order << "  ";
    if (std::isfinite(row.sup_change)) {
      os << row.sup_change;
    } else {
      os << "-";
    }
    os << "  " << row.residual_norm << "\n";
  }
  os << (converged ? "# converged\n" : "# not converged\n");
  return os.str();
}

FieldState zero_order(const KGrid& kgrid, const FrequencyGrid& grid,
                      std::span<const Eigen::Vector3cd> source, double eta,
                      const Units& units, unsigned threads) {
  require_field_shape(source, kgrid, grid, "zero order");
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  FieldState state;
  state.order = 0;
  state.data.resize(nm * nw);
  parallel_for(nm, threads, [&](std::size_t m) {
    const Eigen::Vector3d k = kgrid.half_node(m);
    for (std::size_t q = 0; q < nw; ++q) {
      state.data[m * nw + q] =
          invert_lambda(k, grid.nodes[q], eta, units.c) * source[m * nw + q];
    }
  });
  return state;
}

std::vector<Eigen::Vector3cd> apply_susceptibility(
    const MediumKernels& kernels, const KGrid& kg, const FrequencyGrid& grid,
    std::span<const Eigen::Vector3cd> field, const Units& units,
    unsigned threads) {
  require_field_shape(field, kg, grid, "medium terms");
  require_kernel_grid(kernels.electric1.grid, grid, "medium terms");
  require_kernel_grid(kernels.magnetic1.grid, grid, "medium terms");
  if (kernels.electric1.kind != FieldKind::Electric ||
      kernels.magnetic1.kind != FieldKind::Magnetic) {
    throw config_error("medium terms: kernel kind mismatch");
  }
  const std::size_t nm = kg.n_half();
  const std::size_t nf = kg.n_full();
  const std::size_t nw = grid.size();
  const double mu0 = units.mu0;

  const auto field_full = [&](std::size_t f, std::size_t q) {
    const Eigen::Vector3cd& v = field[kg.half_of_full(f) * nw + q];
    return kg.conjugated(f) ? Eigen::Vector3cd(v.conjugate()) : v;
  };

  // linear interpolation on the positive axis (the spectrum is even in w);
  // zero inside the gap |w| < w_min and beyond w_max
  const auto in_band = [&](double w2) {
    const double a = std::abs(w2);
    return a >= grid.nodes.front() && a <= grid.nodes.back();
  };
  const auto interp_full = [&](std::size_t f, double w2) -> Eigen::Vector3cd {
    const double a = std::abs(w2);
    if (nw == 1) return field_full(f, 0);
    auto it = std::upper_bound(grid.nodes.begin(), grid.nodes.end(), a);
    std::size_t hi = static_cast<std::size_t>(it - grid.nodes.begin());
    if (hi == 0) hi = 1;
    if (hi == nw) hi = nw - 1;
    const std::size_t lo = hi - 1;
    const double t = (a - grid.nodes[lo]) / (grid.nodes[hi] - grid.nodes[lo]);
    return (1.0 - t) * field_full(f, lo) + t * field_full(f, hi);
  };

  const bool any_quadratic =
      kernels.electric2.has_value() || kernels.magnetic2.has_value();
  std::vector<std::ptrdiff_t> pair_of;
  std::vector<Tensor3> ke, km;
  if (any_quadratic) {
    pair_of = transfer_table(kg);
    if (kernels.electric2) {
      ke = convolution_kernel_table(*kernels.electric2, grid, threads);
    }
    if (kernels.magnetic2) {
      km = convolution_kernel_table(*kernels.magnetic2, grid, threads);
    }
  }

  std::vector<Eigen::Vector3cd> out(nm * nw);
  parallel_for(nm, threads, [&](std::size_t m) {
    const Eigen::Vector3d k = kg.half_node(m);
    const Eigen::Vector3cd kc = k.cast<cplx>();
    for (std::size_t q = 0; q < nw; ++q) {
      const double w = grid.nodes[q];
      const std::size_t s = nw + q;  // two-sided slot of the positive bin

      // rank-1 electric polarization
      Eigen::Vector3cd p1;
      if (kernels.electric1.homogeneous) {
        p1 = kernels.electric1.at(s) * field[m * nw + q];
      } else {
        p1 = Eigen::Vector3cd::Zero();
        for (std::size_t f1 = 0; f1 < nf; ++f1) {
          p1 += kg.full_weight(f1) *
                (kernels.electric1.at(s, m, f1) * field_full(f1, q));
        }
      }

      // rank-1 magnetization drive, then the outer k x (...)
      Eigen::Vector3cd t1;
      if (kernels.magnetic1.homogeneous) {
        const Eigen::Vector3cd b =
            cross_bilinear(kc, field[m * nw + q]) / (-w);
        t1 = kernels.magnetic1.at(s) * b;
      } else {
        t1 = Eigen::Vector3cd::Zero();
        for (std::size_t f1 = 0; f1 < nf; ++f1) {
          const Eigen::Vector3cd b1 =
              cross_bilinear(kg.full_node(f1).cast<cplx>(), field_full(f1, q)) /
              (-w);
          t1 += kg.full_weight(f1) * (kernels.magnetic1.at(s, m, f1) * b1);
        }
      }

      // rank-2 convolutions over (k1, w1)
      Eigen::Vector3cd conv_e = Eigen::Vector3cd::Zero();
      Eigen::Vector3cd conv_b = Eigen::Vector3cd::Zero();
      if (any_quadratic) {
        for (std::size_t f1 = 0; f1 < nf; ++f1) {
          const std::ptrdiff_t p = pair_of[m * nf + f1];
          if (p < 0) continue;
          const std::size_t f2 = static_cast<std::size_t>(p);
          const double wk = kg.full_weight(f1);
          for (std::size_t q1 = 0; q1 < nw; ++q1) {
            const double w1 = grid.nodes[q1];
            const double w2 = w - w1;
            if (!in_band(w2)) continue;
            const double ww = wk * grid.weights[q1];
            const Eigen::Vector3cd e1 = field_full(f1, q1);
            const Eigen::Vector3cd e2 = interp_full(f2, w2);
            if (kernels.electric2) {
              conv_e += ww * ke[q * nw + q1].contract(e1, e2);
            }
            if (kernels.magnetic2) {
              const Eigen::Vector3cd b1 =
                  cross_bilinear(kg.full_node(f1).cast<cplx>(), e1) / (-w1);
              const Eigen::Vector3cd b2 =
                  cross_bilinear(kg.full_node(f2).cast<cplx>(), e2) / (-w2);
              conv_b += ww * km[q * nw + q1].contract(b1, b2);
            }
          }
        }
      }

      out[m * nw + q] = kTwoPi32 * mu0 * w * w * (p1 + conv_e) +
                        kTwoPi32 * mu0 * w * cross_bilinear(kc, t1 + conv_b);
    }
  });
  return out;
}

FieldState iterate_order(const FieldState& prev, const MediumKernels& kernels,
                         const KGrid& kgrid, const FrequencyGrid& grid,
                         std::span<const Eigen::Vector3cd> source,
                         const SolverConfig& cfg, const Units& units) {
  require_field_shape(prev.data, kgrid, grid, "iteration");
  require_field_shape(source, kgrid, grid, "iteration");
  const std::vector<Eigen::Vector3cd> s = apply_susceptibility(
      kernels, kgrid, grid, prev.data, units, cfg.threads);
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  FieldState next;
  next.order = prev.order + 1;
  next.residual_history = prev.residual_history;
  next.data.resize(nm * nw);
  parallel_for(nm, cfg.threads, [&](std::size_t m) {
    const Eigen::Vector3d k = kgrid.half_node(m);
    for (std::size_t q = 0; q < nw; ++q) {
      const std::size_t i = m * nw + q;
      const Eigen::Vector3cd cand =
          invert_lambda(k, grid.nodes[q], cfg.eta, units.c) *
          (source[i] - s[i]);
      next.data[i] = cfg.damping * cand + (1.0 - cfg.damping) * prev.data[i];
    }
  });
  return next;
}

double weighted_l2(std::span<const Eigen::Vector3cd> v, const KGrid& kgrid,
                   const FrequencyGrid& grid) {
  require_field_shape(v, kgrid, grid, "weighted norm");
  const std::size_t nw = grid.size();
  double acc = 0.0;
  for (std::size_t m = 0; m < kgrid.n_half(); ++m) {
    for (std::size_t q = 0; q < nw; ++q) {
      acc += kgrid.half_weight(m) * grid.weights[q] *
             v[m * nw + q].squaredNorm();
    }
  }
  return std::sqrt(acc);
}

double residual(const FieldState& state, const MediumKernels& kernels,
                const KGrid& kgrid, const FrequencyGrid& grid,
                std::span<const Eigen::Vector3cd> source, double eta,
                const Units& units, unsigned threads) {
  require_field_shape(state.data, kgrid, grid, "residual");
  require_field_shape(source, kgrid, grid, "residual");
  const std::vector<Eigen::Vector3cd> s =
      apply_susceptibility(kernels, kgrid, grid, state.data, units, threads);
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  std::vector<Eigen::Vector3cd> r(nm * nw);
  parallel_for(nm, threads, [&](std::size_t m) {
    const Eigen::Vector3d k = kgrid.half_node(m);
    for (std::size_t q = 0; q < nw; ++q) {
      const std::size_t i = m * nw + q;
      r[i] = assemble_lambda(k, grid.nodes[q], eta, units.c) * state.data[i] +
             s[i] - source[i];
    }
  });
  return weighted_l2(r, kgrid, grid);
}

std::vector<Eigen::Vector3cd> linear_direct_solve(
    const MediumKernels& kernels, const KGrid& kgrid,
    const FrequencyGrid& grid, std::span<const Eigen::Vector3cd> source,
    double eta, const Units& units, unsigned threads) {
  require_field_shape(source, kgrid, grid, "direct solve");
  require_kernel_grid(kernels.electric1.grid, grid, "direct solve");
  require_kernel_grid(kernels.magnetic1.grid, grid, "direct solve");
  if (kernels.electric2 || kernels.magnetic2) {
    throw config_error("direct solve: only linear media are supported");
  }
  if (!kernels.electric1.homogeneous || !kernels.magnetic1.homogeneous) {
    throw config_error(
        "direct solve: tabulated kernels couple the lattice nodes");
  }
  const std::size_t nm = kgrid.n_half();
  const std::size_t nw = grid.size();
  const double mu0 = units.mu0;
  std::vector<Eigen::Vector3cd> out(nm * nw);
  parallel_for(nm, threads, [&](std::size_t m) {
    const Eigen::Vector3d k = kgrid.half_node(m);
    Eigen::Matrix3d kx;  // cross-product matrix of k
    kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
    for (std::size_t q = 0; q < nw; ++q) {
      const double w = grid.nodes[q];
      const std::size_t s = nw + q;
      // k x (zeta (k x E)/(-w)) scaled by mu0 w collapses to the
      // w-independent matrix -mu0 Kx zeta Kx
      const Eigen::Matrix3cd a =
          assemble_lambda(k, w, eta, units.c) +
          kTwoPi32 * mu0 * w * w * kernels.electric1.at(s) -
          kTwoPi32 * mu0 *
              (kx.cast<cplx>() * kernels.magnetic1.at(s) * kx.cast<cplx>());
      out[m * nw + q] = a.partialPivLu().solve(source[m * nw + q]);
    }
  });
  return out;
}

std::vector<Eigen::Vector3cd> build_source(
    const Medium& medium, const NoiseRealization& noise,
    const FieldState* prev_field, const KGrid& kgrid,
    const FrequencyGrid& grid, const TimeGrid& tgrid, const Units& units,
    unsigned threads) {
  const Coupling2* e2 =
      medium.electric2 ? &*medium.electric2 : nullptr;
  const Coupling2* m2 =
      medium.magnetic2 ? &*medium.magnetic2 : nullptr;

  std::vector<Eigen::Vector3cd> e_time, b_time;
  if (prev_field) {
    require_field_shape(prev_field->data, kgrid, grid, "source");
    e_time = to_time_domain(prev_field->data, kgrid, grid, tgrid,
                            SpectralParity::Even, threads);
    const std::vector<Eigen::Vector3cd> b_spec =
        magnetic_from_electric(prev_field->data, kgrid, grid);
    b_time = to_time_domain(b_spec, kgrid, grid, tgrid, SpectralParity::Odd,
                            threads);
  }

  const std::vector<Eigen::Vector3cd> pn = noise_polarization(
      noise, medium.electric1, e2, e_time, tgrid, threads);
  const std::vector<Eigen::Vector3cd> mn = noise_magnetization(
      noise, medium.magnetic1, m2, b_time, tgrid, threads);
  return source_term(pn, mn, kgrid, grid, tgrid, units.mu0, threads);
}

SolveResult solve(const SolverConfig& cfg, const Medium& medium,
                  const NoiseRealization& noise, const FrequencyGrid& grid,
                  const Units& units) {
  cfg.validate();
  units.validate();
  const KGrid& kgrid = noise.kgrid();
  const TimeGrid tgrid = conjugate_time_grid(grid);
  const MediumKernels kernels =
      build_medium_kernels(medium, tgrid, grid, cfg.eta, cfg.threads);

  // the source only changes between orders through the memory terms
  const bool field_feeds_source =
      medium.electric2.has_value() || medium.magnetic2.has_value();

  std::vector<Eigen::Vector3cd> source = build_source(
      medium, noise, nullptr, kgrid, grid, tgrid, units, cfg.threads);

  SolveResult result;
  FieldState& state = result.state;
  state = zero_order(kgrid, grid, source, cfg.eta, units, cfg.threads);
  double res = residual(state, kernels, kgrid, grid, source, cfg.eta, units,
                        cfg.threads);
  state.residual_history.push_back(res);
  result.report.rows.push_back(
      {0, std::numeric_limits<double>::quiet_NaN(), res});

  std::vector<double> norms = {sup_norm(state.data)};
  std::size_t quiet = 0;
  for (std::size_t order = 1; order <= cfg.max_order; ++order) {
    if (field_feeds_source) {
      source = build_source(medium, noise, &state, kgrid, grid, tgrid, units,
                            cfg.threads);
    }
    FieldState next =
        iterate_order(state, kernels, kgrid, grid, source, cfg, units);

    double change = 0.0;
    for (std::size_t i = 0; i < next.data.size(); ++i) {
      change = std::max(
          change, (next.data[i] - state.data[i]).cwiseAbs().maxCoeff());
    }
    const double scale = std::max(sup_norm(next.data), 1e-300);
    const double sup_change = change / scale;

    res = residual(next, kernels, kgrid, grid, source, cfg.eta, units,
                   cfg.threads);
    next.residual_history.push_back(res);
    result.report.rows.push_back({order, sup_change, res});
    norms.push_back(sup_norm(next.data));
    state = std::move(next);

    if (norms.size() > cfg.window) {
      const double before = norms[norms.size() - 1 - cfg.window];
      const double now = norms.back();
      if (now > 10.0 * std::max(before, 1e-300) && now > 0.0) {
        std::ostringstream msg;
        msg << "fixed-point iteration diverging: sup norm grew from "
            << before << " to " << now << " over " << cfg.window
            << " order(s)";
        throw divergence_error(msg.str(), norms);
      }
    }

    if (sup_change < cfg.tolerance) {
      if (++quiet >= cfg.window) {
        result.report.converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  return result;
}

}  // namespace nlmd
