#include "nlmd/susceptibility.hpp"

#include <cmath>
#include <sstream>

#include "nlmd/parallel.hpp"

namespace nlmd {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b,
                       const char* what) {
  if (a.size() != b.size()) {
    throw config_error(std::string(what) + ": frequency grids differ in size");
  }
  for (std::size_t q = 0; q < a.size(); ++q) {
    const double scale = std::max(1.0, std::abs(a.nodes[q]));
    if (std::abs(a.nodes[q] - b.nodes[q]) > 1e-12 * scale ||
        std::abs(a.weights[q] - b.weights[q]) > 1e-12 * scale) {
      throw config_error(std::string(what) + ": frequency grids differ");
    }
  }
}

void require_finite(const Eigen::Matrix3cd& m, const char* what,
                    std::size_t index) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << what << ": non-finite value at sample " << index;
    throw numerical_error(os.str());
  }
}

// D(q1,q2) blocks: rank-3 coupling contracted with one adjoint rank-2
// factor per trailing slot (homogeneous forms).
std::vector<Tensor3> coupling_d_blocks(const Coupling2& c2,
                                       const Coupling1& c1) {
  const std::size_t n = c2.grid().size();
  std::vector<Eigen::Matrix3cd> adj(n);
  for (std::size_t q = 0; q < n; ++q) adj[q] = c1.adjoint_at(q);
  std::vector<Tensor3> d(n * n);
  for (std::size_t q1 = 0; q1 < n; ++q1) {
    for (std::size_t q2 = 0; q2 < n; ++q2) {
      d[q1 * n + q2] = c2.at(q1, q2).sandwich(adj[q1], adj[q2]);
    }
  }
  return d;
}

}  // namespace

const Tensor3& Kernel2Time::at(std::size_t m1, std::size_t m2, std::size_t f,
                               std::size_t f1, std::size_t f2) const {
  if (homogeneous) return at(m1, m2);
  const std::size_t nf = kgrid->n_full();
  return data[(((m1 * stored + m2) * nf + f) * nf + f1) * nf + f2];
}

Tensor3 Kernel2Time::eval(double t1, double t2) const {
  if (!homogeneous) {
    throw config_error("rank-2 kernel: eval() needs the homogeneous form");
  }
  Tensor3 zero{};
  if (t1 < 0 || t2 < 0) return zero;
  const double dt = stored_dt();
  const double tmax = static_cast<double>(stored - 1) * dt;
  if (t1 > tmax || t2 > tmax) return zero;
  const auto cell = [&](double t, std::size_t& lo, double& frac) {
    const double x = t / dt;
    lo = std::min(static_cast<std::size_t>(x), stored - 2);
    frac = x - static_cast<double>(lo);
  };
  std::size_t i = 0, j = 0;
  double u = 0, v = 0;
  cell(t1, i, u);
  cell(t2, j, v);
  return at(i, j) * ((1 - u) * (1 - v)) + at(i + 1, j) * (u * (1 - v)) +
         at(i, j + 1) * ((1 - u) * v) + at(i + 1, j + 1) * (u * v);
}

const Tensor3& Kernel2Freq::at(std::size_t s1, std::size_t s2, std::size_t f,
                               std::size_t f1, std::size_t f2) const {
  if (homogeneous) return at(s1, s2);
  const std::size_t nf = kgrid->n_full();
  const std::size_t ns = 2 * grid.size();
  return data[(((s1 * ns + s2) * nf + f) * nf + f1) * nf + f2];
}

// ------------------------------------------------------------------ rank 1

Kernel1Time build_kernel1_time(const Coupling1& c, const TimeGrid& tgrid,
                               unsigned threads) {
  const FrequencyGrid& grid = c.grid();
  const std::size_t nq = grid.size();
  Kernel1Time kernel;
  kernel.kind = c.kind();
  kernel.tgrid = tgrid;
  kernel.homogeneous = c.homogeneous();

  if (c.homogeneous()) {
    std::vector<Eigen::Matrix3cd> bin(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      bin[q] = grid.weights[q] * c.at(q) * c.at(q).adjoint();
    }
    kernel.data.assign(tgrid.n, Eigen::Matrix3cd::Zero());
    parallel_for(tgrid.n, threads, [&](std::size_t m) {
      const double t = tgrid.node(m);
      Eigen::Matrix3cd acc = Eigen::Matrix3cd::Zero();
      for (std::size_t q = 0; q < nq; ++q) {
        acc += sinc_kernel(grid.nodes[q], t) * bin[q];
      }
      require_finite(acc, "rank-1 kernel", m);
      kernel.data[m] = acc;
    });
    return kernel;
  }

  const KGrid& kg = c.kgrid();
  const std::size_t nf = kg.n_full();
  kernel.kgrid = kg;
  // time-independent lattice contraction, then the cheap time sweep
  std::vector<Eigen::Matrix3cd> lattice(nq * nf * nf);
  parallel_for(nq, threads, [&](std::size_t q) {
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        Eigen::Matrix3cd acc = Eigen::Matrix3cd::Zero();
        for (std::size_t p = 0; p < nf; ++p) {
          acc += kg.full_weight(p) * c.at(q, f, p) * c.adjoint_at(q, f1, p);
        }
        lattice[(q * nf + f) * nf + f1] = grid.weights[q] * acc;
      }
    }
  });
  kernel.data.assign(tgrid.n * nf * nf, Eigen::Matrix3cd::Zero());
  parallel_for(tgrid.n, threads, [&](std::size_t m) {
    const double t = tgrid.node(m);
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        Eigen::Matrix3cd acc = Eigen::Matrix3cd::Zero();
        for (std::size_t q = 0; q < nq; ++q) {
          acc += sinc_kernel(grid.nodes[q], t) * lattice[(q * nf + f) * nf + f1];
        }
        require_finite(acc, "rank-1 kernel", m);
        kernel.data[(m * nf + f) * nf + f1] = acc;
      }
    }
  });
  return kernel;
}

Kernel1Freq kernel1_to_frequency(const Kernel1Time& kernel,
                                 const FrequencyGrid& out_grid, double eta,
                                 unsigned threads) {
  if (!(eta > 0)) throw config_error("kernel transform: eta must be > 0");
  const TimeGrid& tg = kernel.tgrid;
  const auto axis = two_sided_axis(out_grid);
  const std::size_t ns = axis.size();
  const std::size_t block =
      kernel.homogeneous ? 1
                         : kernel.kgrid->n_full() * kernel.kgrid->n_full();

  Kernel1Freq out;
  out.kind = kernel.kind;
  out.grid = out_grid;
  out.eta = eta;
  out.homogeneous = kernel.homogeneous;
  out.kgrid = kernel.kgrid;
  out.data.assign(ns * block, Eigen::Matrix3cd::Zero());

  parallel_for(ns, threads, [&](std::size_t s) {
    for (std::size_t b = 0; b < block; ++b) {
      Eigen::Matrix3cd acc = Eigen::Matrix3cd::Zero();
      for (std::size_t m = 0; m < tg.n; ++m) {
        const double t = tg.node(m);
        const cplx phase =
            std::polar(trapezoid_weight(tg, m) * std::exp(-eta * t),
                       -axis[s] * t);
        acc += phase * kernel.data[m * block + b];
      }
      out.data[s * block + b] = acc / kTwoPi32;
    }
  });
  return out;
}

// ------------------------------------------------------------------ rank 2

Kernel2Time build_kernel2_time(const Coupling2& c2, const Coupling1& c1,
                               const TimeGrid& tgrid, std::size_t stride,
                               unsigned threads) {
  if (c2.kind() != c1.kind()) {
    throw config_error("rank-2 kernel: couplings mix electric and magnetic");
  }
  require_same_grid(c2.grid(), c1.grid(), "rank-2 kernel");
  if (stride == 0 || (tgrid.n - 1) % stride != 0) {
    throw config_error("rank-2 kernel: stride must divide the node count - 1");
  }
  const FrequencyGrid& grid = c2.grid();
  const std::size_t nq = grid.size();

  Kernel2Time kernel;
  kernel.kind = c2.kind();
  kernel.tgrid = tgrid;
  kernel.stride = stride;
  kernel.stored = (tgrid.n - 1) / stride + 1;
  const std::size_t ms = kernel.stored;
  const double dt = kernel.stored_dt();

  // weighted oscillator factors per (bin, stored node)
  std::vector<double> u(nq * ms);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t m = 0; m < ms; ++m) {
      u[q * ms + m] = grid.weights[q] *
                      sinc_kernel(grid.nodes[q], static_cast<double>(m) * dt);
    }
  }

  if (c2.homogeneous()) {
    if (!c1.homogeneous()) {
      throw config_error(
          "rank-2 kernel: separable rank-3 coupling needs a homogeneous "
          "rank-2 coupling");
    }
    kernel.homogeneous = true;
    const std::vector<Tensor3> d = coupling_d_blocks(c2, c1);
    // half-contracted blocks: e(q1, m2) = sum_q2 u(q2,m2) D(q1,q2)
    std::vector<Tensor3> e(nq * ms);
    parallel_for(nq, threads, [&](std::size_t q1) {
      for (std::size_t m2 = 0; m2 < ms; ++m2) {
        Tensor3 acc{};
        for (std::size_t q2 = 0; q2 < nq; ++q2) {
          acc += d[q1 * nq + q2] * u[q2 * ms + m2];
        }
        e[q1 * ms + m2] = acc;
      }
    });
    kernel.data.assign(ms * ms, Tensor3{});
    parallel_for(ms, threads, [&](std::size_t m1) {
      for (std::size_t m2 = 0; m2 < ms; ++m2) {
        Tensor3 acc{};
        for (std::size_t q1 = 0; q1 < nq; ++q1) {
          acc += e[q1 * ms + m2] * u[q1 * ms + m1];
        }
        kernel.data[m1 * ms + m2] = acc;
      }
    });
    return kernel;
  }

  // tabulated rank-3 coupling; the rank-2 coupling may be homogeneous
  // (collapsing the internal lattice sums) or tabulated on the same lattice
  const KGrid& kg = c2.kgrid();
  const std::size_t nf = kg.n_full();
  if (!c1.homogeneous()) {
    const KGrid& kg1 = c1.kgrid();
    if (kg1.n_full() != nf) {
      throw config_error("rank-2 kernel: couplings tabulated on different "
                         "lattices");
    }
  }
  kernel.homogeneous = false;
  kernel.kgrid = kg;

  // time-independent contraction with the adjoint factors
  std::vector<Tensor3> dtab(nq * nq * nf * nf * nf);
  const auto tab_index = [&](std::size_t q1, std::size_t q2, std::size_t f,
                             std::size_t f1, std::size_t f2) {
    return (((q1 * nq + q2) * nf + f) * nf + f1) * nf + f2;
  };
  parallel_for(nq * nq, threads, [&](std::size_t qq) {
    const std::size_t q1 = qq / nq;
    const std::size_t q2 = qq % nq;
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t f1 = 0; f1 < nf; ++f1) {
        for (std::size_t f2 = 0; f2 < nf; ++f2) {
          Tensor3 acc{};
          if (c1.homogeneous()) {
            acc = c2.at(q1, q2, f, f1, f2)
                      .sandwich(c1.adjoint_at(q1), c1.adjoint_at(q2));
          } else {
            for (std::size_t p1 = 0; p1 < nf; ++p1) {
              for (std::size_t p2 = 0; p2 < nf; ++p2) {
                acc += c2.at(q1, q2, f, p1, p2)
                           .sandwich(c1.adjoint_at(q1, f1, p1),
                                     c1.adjoint_at(q2, f2, p2)) *
                       (kg.full_weight(p1) * kg.full_weight(p2));
              }
            }
          }
          dtab[tab_index(q1, q2, f, f1, f2)] = acc;
        }
      }
    }
  });

  const std::size_t lattice = nf * nf * nf;
  kernel.data.assign(ms * ms * lattice, Tensor3{});
  parallel_for(ms, threads, [&](std::size_t m1) {
    for (std::size_t m2 = 0; m2 < ms; ++m2) {
      for (std::size_t l = 0; l < lattice; ++l) {
        Tensor3 acc{};
        for (std::size_t q1 = 0; q1 < nq; ++q1) {
          for (std::size_t q2 = 0; q2 < nq; ++q2) {
            acc += dtab[(q1 * nq + q2) * lattice + l] *
                   (u[q1 * ms + m1] * u[q2 * ms + m2]);
          }
        }
        kernel.data[(m1 * ms + m2) * lattice + l] = acc;
      }
    }
  });
  return kernel;
}

Kernel2Freq kernel2_to_frequency(const Kernel2Time& kernel,
                                 const FrequencyGrid& out_grid, double eta,
                                 unsigned threads) {
  if (!(eta > 0)) throw config_error("kernel transform: eta must be > 0");
  const auto axis = two_sided_axis(out_grid);
  const std::size_t ns = axis.size();
  const std::size_t ms = kernel.stored;
  const double dt = kernel.stored_dt();
  const std::size_t block =
      kernel.homogeneous ? 1
                         : kernel.kgrid->n_full() * kernel.kgrid->n_full() *
                               kernel.kgrid->n_full();
  const auto tau = [&](std::size_t m) {
    return (m == 0 || m + 1 == ms) ? 0.5 * dt : dt;
  };

  Kernel2Freq out;
  out.kind = kernel.kind;
  out.grid = out_grid;
  out.eta = eta;
  out.homogeneous = kernel.homogeneous;
  out.kgrid = kernel.kgrid;
  out.data.assign(ns * ns * block, Tensor3{});

  // transform the second axis first, then the first
  std::vector<Tensor3> half(ms * ns * block);
  parallel_for(ms, threads, [&](std::size_t m1) {
    for (std::size_t s2 = 0; s2 < ns; ++s2) {
      for (std::size_t b = 0; b < block; ++b) {
        Tensor3 acc{};
        for (std::size_t m2 = 0; m2 < ms; ++m2) {
          const double t2 = static_cast<double>(m2) * dt;
          acc += kernel.data[(m1 * ms + m2) * block + b] *
                 std::polar(tau(m2) * std::exp(-eta * t2), -axis[s2] * t2);
        }
        half[(m1 * ns + s2) * block + b] = acc;
      }
    }
  });
  parallel_for(ns, threads, [&](std::size_t s1) {
    for (std::size_t s2 = 0; s2 < ns; ++s2) {
      for (std::size_t b = 0; b < block; ++b) {
        Tensor3 acc{};
        for (std::size_t m1 = 0; m1 < ms; ++m1) {
          const double t1 = static_cast<double>(m1) * dt;
          acc += half[(m1 * ns + s2) * block + b] *
                 std::polar(tau(m1) * std::exp(-eta * t1), -axis[s1] * t1);
        }
        out.data[(s1 * ns + s2) * block + b] = acc * (1.0 / (kTwoPi32 * kTwoPi32));
      }
    }
  });
  return out;
}

Kernel2Factored build_kernel2_factored(const Coupling2& c2,
                                       const Coupling1& c1,
                                       const TimeGrid& tgrid, double eta) {
  if (c2.kind() != c1.kind()) {
    throw config_error("rank-2 kernel: couplings mix electric and magnetic");
  }
  if (!c2.homogeneous() || !c1.homogeneous()) {
    throw config_error(
        "factored rank-2 kernel: homogeneous couplings required");
  }
  require_same_grid(c2.grid(), c1.grid(), "rank-2 kernel");
  if (!(eta > 0)) throw config_error("kernel transform: eta must be > 0");
  Kernel2Factored out;
  out.kind = c2.kind();
  out.bath_grid = c2.grid();
  out.tgrid = tgrid;
  out.eta = eta;
  out.d = coupling_d_blocks(c2, c1);
  return out;
}

Eigen::VectorXcd Kernel2Factored::g_column(double omega) const {
  const std::size_t nq = bath_grid.size();
  Eigen::VectorXcd g(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    cplx acc = 0;
    for (std::size_t m = 0; m < tgrid.n; ++m) {
      const double t = tgrid.node(m);
      // the oscillator factor changes sign, so scale a unit phase
      const double scale = trapezoid_weight(tgrid, m) * std::exp(-eta * t) *
                           sinc_kernel(bath_grid.nodes[q], t);
      acc += scale * std::polar(1.0, -omega * t);
    }
    g[q] = bath_grid.weights[q] * acc / kTwoPi32;
  }
  return g;
}

Tensor3 Kernel2Factored::eval_columns(const Eigen::VectorXcd& g1,
                                      const Eigen::VectorXcd& g2) const {
  const std::size_t nq = bath_grid.size();
  Tensor3 acc{};
  for (std::size_t q1 = 0; q1 < nq; ++q1) {
    // inner contraction first keeps this O(nq^2) tensor updates
    Tensor3 row{};
    for (std::size_t q2 = 0; q2 < nq; ++q2) {
      row += d_at(q1, q2) * g2[q2];
    }
    acc += row * g1[q1];
  }
  return acc;
}

Tensor3 Kernel2Factored::eval(double w1, double w2) const {
  return eval_columns(g_column(w1), g_column(w2));
}

double Kernel2Factored::max_abs() const {
  double m = 0;
  for (const auto& t : d) m = std::max(m, t.max_abs());
  return m;
}

// -------------------------------------------------------------- validation

ValidationReport check_kernel_symmetry(const Kernel2Time& kernel, double tol) {
  ValidationReport report;
  report.tolerance = tol;
  const std::size_t ms = kernel.stored;
  const auto scan = [&](std::size_t m1, std::size_t m2, const Tensor3& a,
                        const Tensor3& b_swapped) {
    const double v = (a + b_swapped * -1.0).max_abs();
    if (v > report.max_violation) {
      report.max_violation = v;
      std::ostringstream os;
      os << "worst at (m1=" << m1 << ", m2=" << m2 << "), violation " << v;
      report.where = os.str();
    }
  };
  if (kernel.homogeneous) {
    for (std::size_t m1 = 0; m1 < ms; ++m1) {
      for (std::size_t m2 = 0; m2 < ms; ++m2) {
        scan(m1, m2, kernel.at(m1, m2), kernel.at(m2, m1).swapped_last());
      }
    }
  } else {
    const std::size_t nf = kernel.kgrid->n_full();
    for (std::size_t m1 = 0; m1 < ms; ++m1) {
      for (std::size_t m2 = 0; m2 < ms; ++m2) {
        for (std::size_t f = 0; f < nf; ++f) {
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            for (std::size_t f2 = 0; f2 < nf; ++f2) {
              scan(m1, m2, kernel.at(m1, m2, f, f1, f2),
                   kernel.at(m2, m1, f, f2, f1).swapped_last());
            }
          }
        }
      }
    }
  }
  report.pass = report.max_violation <= tol;
  return report;
}

ValidationReport check_causality_kk(const Kernel1Freq& kernel,
                                    double rel_tol) {
  ValidationReport report;
  report.tolerance = rel_tol;
  const auto axis = two_sided_axis(kernel.grid);
  const std::size_t ns = axis.size();
  const std::size_t block =
      kernel.homogeneous ? 1
                         : kernel.kgrid->n_full() * kernel.kgrid->n_full();

  double num = 0;
  double den = 0;
  std::vector<double> im(ns), re(ns);
  for (std::size_t b = 0; b < block; ++b) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (std::size_t s = 0; s < ns; ++s) {
          const cplx v = kernel.data[s * block + b](i, j);
          re[s] = v.real();
          im[s] = v.imag();
        }
        for (std::size_t s = 0; s < ns; ++s) {
          // principal value: skip the diagonal node
          double hil = 0;
          for (std::size_t sp = 0; sp < ns; ++sp) {
            if (sp == s) continue;
            hil += two_sided_weight(kernel.grid, sp) * im[sp] /
                   (axis[sp] - axis[s]);
          }
          hil *= -1.0 / kPi;
          num += (re[s] - hil) * (re[s] - hil);
          den += re[s] * re[s];
        }
      }
    }
  }
  if (den == 0) {
    report.max_violation = 0;  // zero kernel: vacuous pass
  } else {
    report.max_violation = std::sqrt(num / den);
    std::ostringstream os;
    os << "relative L2 mismatch " << report.max_violation;
    report.where = os.str();
  }
  report.pass = report.max_violation <= rel_tol;
  return report;
}

// ------------------------------------------------------------------ bundle

MediumKernels build_medium_kernels(const Medium& medium, const TimeGrid& tgrid,
                                   const FrequencyGrid& freq_grid, double eta,
                                   unsigned threads) {
  MediumKernels out;
  out.electric1 = kernel1_to_frequency(
      build_kernel1_time(medium.electric1, tgrid, threads), freq_grid, eta,
      threads);
  out.magnetic1 = kernel1_to_frequency(
      build_kernel1_time(medium.magnetic1, tgrid, threads), freq_grid, eta,
      threads);
  if (medium.electric2) {
    out.electric2 =
        build_kernel2_factored(*medium.electric2, medium.electric1, tgrid, eta);
  }
  if (medium.magnetic2) {
    out.magnetic2 =
        build_kernel2_factored(*medium.magnetic2, medium.magnetic1, tgrid, eta);
  }
  return out;
}

}  // namespace nlmd
