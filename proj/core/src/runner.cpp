#include "nlmd/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlmd/bath.hpp"
#include "nlmd/errors.hpp"
#include "nlmd/fields.hpp"
#include "nlmd/io.hpp"
#include "nlmd/noise.hpp"
#include "nlmd/rng.hpp"
#include "nlmd/solver.hpp"
#include "nlmd/susceptibility.hpp"
#include "nlmd/transforms.hpp"
#include "nlmd/version.hpp"

namespace nlmd {
namespace {

using json = nlohmann::ordered_json;

std::string joined(const std::string& dir, const std::string& rel) {
  return (std::filesystem::path(dir) / rel).string();
}

void ensure_outdir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path);
  out << text;
  if (!out) throw io_error("write failed: " + path);
}

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Convention stamp shared by every exported array: transform normalization
// powers of (2pi), the forward time-transform sign, the damping shift, and
// the unit system. Readers should not have to guess any of these.
std::vector<std::pair<std::string, double>> convention_flags(
    const RunConfig& cfg, double eta) {
  return {
      {"fourier_time_sign", -1.0},
      {"two_pi_forward_power", 0.5},
      {"two_pi_inverse_power", -1.5},
      {"two_pi_kernel_power", -1.5},
      {"eta", eta},
      {"eps0", cfg.units.eps0},
      {"mu0", cfg.units.mu0},
      {"c", cfg.units.c},
      {"hbar", cfg.units.hbar},
  };
}

// z is the outer lattice axis, x the inner one; the half set keeps every
// (x, y) column at the positive-z nodes, so it factorizes as a product grid.
std::array<ArrayAxis, 3> lattice_axes(const KGrid& kg) {
  const auto& counts = kg.counts();
  const Eigen::Vector3d& d = kg.spacing();
  const std::size_t nx = counts[0];
  const std::size_t ny = counts[1];
  if (nx == 0 || ny == 0 || kg.n_half() % (nx * ny) != 0) {
    throw shape_error("lattice does not factorize into product axes");
  }
  const std::size_t nzh = kg.n_half() / (nx * ny);
  auto centered = [](std::size_t n, double dd) {
    return -0.5 * static_cast<double>(n - 1) * dd;
  };
  return {ArrayAxis{"kz", nzh, d.z(), 0.5 * d.z()},
          ArrayAxis{"ky", ny, d.y(), centered(ny, d.y())},
          ArrayAxis{"kx", nx, d.x(), centered(nx, d.x())}};
}

ArrayAxis frequency_axis(const std::string& name,
                         const std::vector<double>& nodes) {
  ArrayAxis axis{name, nodes.size(), 0.0, nodes.empty() ? 0.0 : nodes.front()};
  if (nodes.size() > 1) {
    const double d = nodes[1] - nodes[0];
    bool uniform = d > 0;
    for (std::size_t i = 1; uniform && i + 1 < nodes.size(); ++i) {
      uniform = std::abs(nodes[i + 1] - nodes[i] - d) <= 1e-9 * std::abs(d);
    }
    if (uniform) axis.spacing = d;
  }
  return axis;
}

ArrayFile complex_file(std::vector<ArrayAxis> axes,
                       std::vector<std::pair<std::string, double>> flags,
                       std::vector<cplx> data) {
  ArrayFile f;
  f.dtype = kDtypeComplex128;
  f.axes = std::move(axes);
  f.flags = std::move(flags);
  f.complex_data = std::move(data);
  return f;
}

const char* kind_name(FieldKind kind) {
  return kind == FieldKind::Electric ? "electric" : "magnetic";
}

// --- kernel export -----------------------------------------------------------

void export_rank1(const Coupling1& c1, const RunConfig& cfg,
                  const TimeGrid& tgrid, double eta, unsigned threads,
                  const std::string& out_dir, std::ostream& log) {
  const std::string base = kind_name(c1.kind());
  const Kernel1Time kt = build_kernel1_time(c1, tgrid, threads);
  auto flags = convention_flags(cfg, eta);

  {
    std::vector<ArrayAxis> axes{ArrayAxis{"time", tgrid.n, tgrid.dt, 0.0}};
    std::size_t blocks = tgrid.n;
    if (!kt.homogeneous) {
      const std::size_t nf = kt.kgrid->n_full();
      axes.push_back(ArrayAxis{"k", nf, 0.0, 0.0});
      axes.push_back(ArrayAxis{"k1", nf, 0.0, 0.0});
      blocks *= nf * nf;
    }
    axes.push_back(ArrayAxis{"row", 3, 0.0, 0.0});
    axes.push_back(ArrayAxis{"col", 3, 0.0, 0.0});
    std::vector<cplx> data(blocks * 9);
    for (std::size_t b = 0; b < blocks; ++b) {
      const Eigen::Matrix3cd& m = kt.data[b];
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) data[b * 9 + 3 * r + c] = m(r, c);
      }
    }
    const std::string path = joined(out_dir, base + "1_time.nlmd");
    write_array(path, complex_file(std::move(axes), flags, std::move(data)));
    log << "wrote " << path << "\n";
  }

  {
    const Kernel1Freq kf = kernel1_to_frequency(kt, cfg.field_grid, eta,
                                                threads);
    std::vector<ArrayAxis> axes{
        frequency_axis("omega", two_sided_axis(cfg.field_grid))};
    std::size_t blocks = axes[0].length;
    if (!kf.homogeneous) {
      const std::size_t nf = kf.kgrid->n_full();
      axes.push_back(ArrayAxis{"k", nf, 0.0, 0.0});
      axes.push_back(ArrayAxis{"k1", nf, 0.0, 0.0});
      blocks *= nf * nf;
    }
    axes.push_back(ArrayAxis{"row", 3, 0.0, 0.0});
    axes.push_back(ArrayAxis{"col", 3, 0.0, 0.0});
    std::vector<cplx> data(blocks * 9);
    for (std::size_t b = 0; b < blocks; ++b) {
      const Eigen::Matrix3cd& m = kf.data[b];
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) data[b * 9 + 3 * r + c] = m(r, c);
      }
    }
    const std::string path = joined(out_dir, base + "1_freq.nlmd");
    write_array(path, complex_file(std::move(axes), std::move(flags),
                                   std::move(data)));
    log << "wrote " << path << "\n";
  }
}

// The quadratic kernel ships in its factored form: the bin-pair blocks plus
// the weighted transform column sampled on the two-sided field axis. The pair
// reconstructs K~(w1, w2) = sum g(q1, w1) g(q2, w2) D(q1, q2) exactly, which
// is also the form the solver consumes.
void export_rank2(const Coupling2& c2, const Coupling1& c1,
                  const RunConfig& cfg, const TimeGrid& tgrid, double eta,
                  const std::string& out_dir, std::ostream& log) {
  const std::string base = kind_name(c2.kind());
  const Kernel2Factored kf = build_kernel2_factored(c2, c1, tgrid, eta);
  const std::size_t nq = kf.bath_grid.size();
  auto flags = convention_flags(cfg, eta);

  {
    std::vector<ArrayAxis> axes{
        frequency_axis("bath1", kf.bath_grid.nodes),
        frequency_axis("bath2", kf.bath_grid.nodes),
        ArrayAxis{"i", 3, 0.0, 0.0},
        ArrayAxis{"j", 3, 0.0, 0.0},
        ArrayAxis{"k", 3, 0.0, 0.0}};
    std::vector<cplx> data(nq * nq * 27);
    for (std::size_t p = 0; p < nq * nq; ++p) {
      const Tensor3& t = kf.d[p];
      for (int i = 0; i < 3; ++i) {
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) {
            data[p * 27 + (3 * i + a) * 3 + b] = t(i, a, b);
          }
        }
      }
    }
    const std::string path = joined(out_dir, base + "2_blocks.nlmd");
    write_array(path, complex_file(std::move(axes), flags, std::move(data)));
    log << "wrote " << path << "\n";
  }

  {
    const std::vector<double> axis = two_sided_axis(cfg.field_grid);
    std::vector<ArrayAxis> axes{frequency_axis("bath", kf.bath_grid.nodes),
                                frequency_axis("omega", axis)};
    std::vector<cplx> data(nq * axis.size());
    for (std::size_t s = 0; s < axis.size(); ++s) {
      const Eigen::VectorXcd col = kf.g_column(axis[s]);
      for (std::size_t q = 0; q < nq; ++q) data[q * axis.size() + s] = col(q);
    }
    const std::string path = joined(out_dir, base + "2_transform.nlmd");
    write_array(path, complex_file(std::move(axes), std::move(flags),
                                   std::move(data)));
    log << "wrote " << path << "\n";
  }
}

void export_kernels(const RunConfig& cfg, double eta, unsigned threads,
                    const std::string& out_dir, std::ostream& log) {
  const TimeGrid tgrid = conjugate_time_grid(cfg.field_grid);
  export_rank1(cfg.medium.electric1, cfg, tgrid, eta, threads, out_dir, log);
  export_rank1(cfg.medium.magnetic1, cfg, tgrid, eta, threads, out_dir, log);
  if (cfg.medium.electric2) {
    export_rank2(*cfg.medium.electric2, cfg.medium.electric1, cfg, tgrid, eta,
                 out_dir, log);
  }
  if (cfg.medium.magnetic2) {
    export_rank2(*cfg.medium.magnetic2, cfg.medium.magnetic1, cfg, tgrid, eta,
                 out_dir, log);
  }
}

// --- manifest ----------------------------------------------------------------

json base_manifest(const RunConfig& cfg, const char* command) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["format_version"] = kFormatVersion;
  m["config_hash"] = hash_hex(cfg.config_hash);
  m["conventions"] = {{"fourier_time_sign", -1},
                      {"two_pi_forward_power", 0.5},
                      {"two_pi_inverse_power", -1.5},
                      {"two_pi_kernel_power", -1.5}};
  m["units"] = {{"eps0", cfg.units.eps0},
                {"mu0", cfg.units.mu0},
                {"c", cfg.units.c},
                {"hbar", cfg.units.hbar}};
  m["grids"] = {{"omega_bins", cfg.field_grid.size()},
                {"k_half_nodes", cfg.kgrid.n_half()},
                {"bath_bins", cfg.bath_grid.size()}};
  return m;
}

void write_manifest(const std::string& path, const json& m,
                    std::ostream& log) {
  write_text(path, m.dump(2) + "\n");
  log << "wrote " << path << "\n";
}

// --- validation report lines ---------------------------------------------------

bool report_line(std::ostream& log, const std::string& name,
                 const ValidationReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-34s %-4s  max %.3e  tol %.3e  %s\n",
                name.c_str(), r.pass ? "pass" : "FAIL", r.max_violation,
                r.tolerance, r.where.c_str());
  log << buf;
  return r.pass;
}

// --- oracle drive ------------------------------------------------------------

// Smooth deterministic test drive: per lattice node, three random tones
// below the bath band edge with complex normal amplitudes. Plane nodes stay
// real so the drive is a valid half-space field.
std::vector<Eigen::Vector3cd> oracle_drive(const KGrid& kg,
                                           const FrequencyGrid& bath,
                                           const TimeGrid& tgrid,
                                           std::uint64_t seed) {
  const std::size_t nm = kg.n_half();
  std::vector<Eigen::Vector3cd> drive(nm * tgrid.n,
                                      Eigen::Vector3cd::Zero());
  const double w_max = bath.omega_max > 0 ? bath.omega_max
                                          : bath.nodes.back();
  for (std::size_t m = 0; m < nm; ++m) {
    GaussianStream g(substream_seed(seed, m));
    SplitMix64 u(substream_seed(seed ^ 0x5851f42d4c957f2dull, m));
    for (int tone = 0; tone < 3; ++tone) {
      const double omega = (0.15 + 0.7 * u.next_unit()) * w_max;
      const double phase = kTwoPi * u.next_unit();
      Eigen::Vector3cd amp;
      for (int c = 0; c < 3; ++c) {
        const double re = g.next();
        const double im = kg.plane(m) ? 0.0 : g.next();
        amp(c) = cplx(re, im);
      }
      for (std::size_t j = 0; j < tgrid.n; ++j) {
        drive[m * tgrid.n + j] +=
            amp * std::cos(omega * tgrid.node(j) + phase);
      }
    }
  }
  return drive;
}

struct OracleRow {
  std::string label;
  double rms_x = 0;
  double rms_v = 0;
  bool pass = false;
};

OracleRow compare_routes(const std::string& label, const Coupling1& c1,
                         std::span<const Eigen::Vector3cd> drive,
                         const KGrid& kg, const TimeGrid& tgrid,
                         double step, double tol, unsigned threads) {
  const BathState direct = first_order_solution(c1, drive, kg, tgrid,
                                                nullptr, threads);
  const BathState stepped = integrate_bath_linear(c1, drive, kg, tgrid, step,
                                                  {}, {}, threads);
  double num_x = 0, num_v = 0, den_x = 0, den_v = 0;
  for (std::size_t i = 0; i < direct.x.size(); ++i) {
    num_x += (direct.x[i] - stepped.x[i]).squaredNorm();
    num_v += (direct.v[i] - stepped.v[i]).squaredNorm();
    den_x += direct.x[i].squaredNorm();
    den_v += direct.v[i].squaredNorm();
  }
  const double n = static_cast<double>(direct.x.size());
  OracleRow row;
  row.label = label;
  // relative when the reference has scale, absolute otherwise
  row.rms_x = std::sqrt(num_x / n) /
              std::max(std::sqrt(den_x / n), 1e-30);
  row.rms_v = std::sqrt(num_v / n) /
              std::max(std::sqrt(den_v / n), 1e-30);
  row.pass = row.rms_x < tol && row.rms_v < tol;
  return row;
}

}  // namespace

// --- public entry points -------------------------------------------------------

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("NLMD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<unsigned>(v);
    }
  }
  return 1;
}

int cmd_validate(const RunConfig& cfg, const RunOptions& opt,
                 std::ostream& log) {
  const unsigned threads = resolve_threads(opt.threads);
  bool ok = true;

  ok &= report_line(log, "electric rank-2 reality",
                    cfg.medium.electric1.check_reality());
  ok &= report_line(log, "magnetic rank-2 reality",
                    cfg.medium.magnetic1.check_reality());

  struct Pair {
    const Coupling2* c2;
    const Coupling1* c1;
    const char* tag;
  };
  const Pair pairs[] = {
      {cfg.medium.electric2 ? &*cfg.medium.electric2 : nullptr,
       &cfg.medium.electric1, "electric"},
      {cfg.medium.magnetic2 ? &*cfg.medium.magnetic2 : nullptr,
       &cfg.medium.magnetic1, "magnetic"},
  };
  for (const Pair& p : pairs) {
    if (!p.c2) continue;
    const std::string tag = p.tag;
    ok &= report_line(log, tag + " rank-3 reality", p.c2->check_reality());
    ok &= report_line(log, tag + " rank-3 pair swap", p.c2->check_pair_swap());
    // Structural symmetry of the built kernel, sampled on a coarse time
    // grid: the swap property is grid-independent, so a short axis is
    // enough and keeps validation fast.
    const TimeGrid full = conjugate_time_grid(cfg.field_grid);
    const TimeGrid coarse = TimeGrid::make(
        std::min<std::size_t>(full.n, 17), full.t_max());
    const Kernel2Time kt = build_kernel2_time(*p.c2, *p.c1, coarse, 1,
                                              threads);
    ok &= report_line(log, tag + " kernel pair symmetry",
                      check_kernel_symmetry(kt));
  }

  // Dispersion consistency of the linear kernels on the run's own axis.
  const TimeGrid tgrid = conjugate_time_grid(cfg.field_grid);
  const double eta = cfg.solver.eta;
  for (const Coupling1* c1 : {&cfg.medium.electric1, &cfg.medium.magnetic1}) {
    const std::string tag = kind_name(c1->kind());
    const Kernel1Time kt = build_kernel1_time(*c1, tgrid, threads);
    const Kernel1Freq kf = kernel1_to_frequency(kt, cfg.field_grid, eta,
                                                threads);
    ok &= report_line(log, tag + " kernel dispersion consistency",
                      check_causality_kk(kf));
  }

  log << (ok ? "validation passed\n" : "validation FAILED\n");
  return ok ? 0 : 1;
}

int cmd_susceptibility(const RunConfig& cfg, const RunOptions& opt,
                       std::ostream& log) {
  const unsigned threads = resolve_threads(opt.threads);
  ensure_outdir(opt.out_dir);
  export_kernels(cfg, cfg.solver.eta, threads, opt.out_dir, log);

  json m = base_manifest(cfg, "susceptibility");
  m["eta"] = cfg.solver.eta;
  write_manifest(joined(opt.out_dir, cfg.out_manifest), m, log);
  return 0;
}

int cmd_solve(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const unsigned threads = resolve_threads(opt.threads);
  ensure_outdir(opt.out_dir);

  SolverConfig sc = cfg.solver;
  sc.threads = threads;
  if (opt.max_order) sc.max_order = *opt.max_order;
  const std::uint64_t seed = opt.seed ? *opt.seed : cfg.seed;

  json m = base_manifest(cfg, "solve");
  m["seed"] = seed;
  m["noise_enabled"] = cfg.noise_enabled;
  m["eta"] = sc.eta;
  m["max_order"] = sc.max_order;
  m["tolerance"] = sc.tolerance;
  m["damping"] = sc.damping;
  m["outputs"] = {{"field", cfg.out_field},
                  {"convergence", cfg.out_convergence}};

  const std::size_t nw = cfg.field_grid.size();
  const std::size_t nm = cfg.kgrid.n_half();

  FieldState state;
  ConvergenceReport report;
  bool diverged = false;
  std::vector<double> norm_history;

  if (!cfg.noise_enabled) {
    // no source: the zero field solves the equation exactly
    state.order = 0;
    state.data.assign(nm * nw, Eigen::Vector3cd::Zero());
    state.residual_history = {0.0};
    report.rows = {ConvergenceRow{
        0, std::numeric_limits<double>::quiet_NaN(), 0.0}};
    report.converged = true;
  } else {
    const NoiseRealization noise = NoiseRealization::sample(
        cfg.bath_grid, cfg.kgrid, seed, cfg.units.hbar, threads);
    try {
      SolveResult result = solve(sc, cfg.medium, noise, cfg.field_grid,
                                 cfg.units);
      state = std::move(result.state);
      report = std::move(result.report);
    } catch (const divergence_error& e) {
      diverged = true;
      norm_history = e.norm_history;
      log << "diverged: " << e.what() << "\n";
    }
  }

  if (diverged) {
    std::string text = "# diverged; weighted L2 norm per order\n";
    for (std::size_t i = 0; i < norm_history.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%4zu  %.12e\n", i, norm_history[i]);
      text += buf;
    }
    write_text(joined(opt.out_dir, cfg.out_convergence), text);
    log << "wrote " << joined(opt.out_dir, cfg.out_convergence) << "\n";

    m["status"] = "diverged";
    m["partial"] = true;
    m["norm_history"] = norm_history;
    write_manifest(joined(opt.out_dir, cfg.out_manifest), m, log);
    return 2;
  }

  {
    auto axes3 = lattice_axes(cfg.kgrid);
    std::vector<ArrayAxis> axes{axes3[0], axes3[1], axes3[2],
                                frequency_axis("omega", cfg.field_grid.nodes),
                                ArrayAxis{"component", 3, 0.0, 0.0}};
    std::vector<cplx> data(nm * nw * 3);
    for (std::size_t m_i = 0; m_i < nm; ++m_i) {
      for (std::size_t q = 0; q < nw; ++q) {
        const Eigen::Vector3cd& v = state.at(m_i, q, nw);
        for (int c = 0; c < 3; ++c) data[(m_i * nw + q) * 3 + c] = v(c);
      }
    }
    auto flags = convention_flags(cfg, sc.eta);
    flags.emplace_back("seed", static_cast<double>(seed));
    flags.emplace_back("orders_run", static_cast<double>(state.order));
    flags.emplace_back("converged", report.converged ? 1.0 : 0.0);
    const std::string path = joined(opt.out_dir, cfg.out_field);
    write_array(path, complex_file(std::move(axes), std::move(flags),
                                   std::move(data)));
    log << "wrote " << path << "\n";
  }

  {
    std::string text = report.to_text();
    text += report.converged ? "# status: converged\n"
                             : "# status: max-order\n";
    write_text(joined(opt.out_dir, cfg.out_convergence), text);
    log << "wrote " << joined(opt.out_dir, cfg.out_convergence) << "\n";
  }

  m["status"] = report.converged ? "converged" : "max-order";
  m["orders_run"] = state.order;
  m["residual_final"] = state.residual_history.empty()
                            ? 0.0
                            : state.residual_history.back();
  write_manifest(joined(opt.out_dir, cfg.out_manifest), m, log);

  if (cfg.write_kernels) {
    export_kernels(cfg, sc.eta, threads, opt.out_dir, log);
  }
  log << (report.converged ? "converged" : "stopped at max order") << " after "
      << state.order << " orders\n";
  return 0;
}

int cmd_oracle(const RunConfig& cfg, const RunOptions& opt,
               std::ostream& log) {
  const unsigned threads = resolve_threads(opt.threads);
  ensure_outdir(opt.out_dir);
  const std::uint64_t seed = opt.seed ? *opt.seed : cfg.seed;
  const TimeGrid tgrid = conjugate_time_grid(cfg.field_grid);
  const double w_max = cfg.bath_grid.omega_max > 0 ? cfg.bath_grid.omega_max
                                                   : cfg.bath_grid.nodes.back();
  // comfortably inside the integrator's stability bound
  const double step = std::min(0.02 / w_max, tgrid.dt);
  const double tol = 1e-6;

  std::vector<OracleRow> rows;
  const auto drive_e = oracle_drive(cfg.kgrid, cfg.bath_grid, tgrid, seed);
  rows.push_back(compare_routes("electric", cfg.medium.electric1, drive_e,
                                cfg.kgrid, tgrid, step, tol, threads));
  const auto drive_b = oracle_drive(cfg.kgrid, cfg.bath_grid, tgrid,
                                    substream_seed(seed, 0xb));
  rows.push_back(compare_routes("magnetic", cfg.medium.magnetic1, drive_b,
                                cfg.kgrid, tgrid, step, tol, threads));

  std::string text =
      "# closed-form retarded solution vs symplectic integration\n"
      "# kind      rms_x         rms_v         tol        status\n";
  bool ok = true;
  for (const OracleRow& r : rows) {
    char buf[120];
    std::snprintf(buf, sizeof buf, "%-9s %.6e  %.6e  %.1e  %s\n",
                  r.label.c_str(), r.rms_x, r.rms_v, tol,
                  r.pass ? "pass" : "FAIL");
    text += buf;
    ok &= r.pass;
  }
  log << text;
  write_text(joined(opt.out_dir, "oracle.txt"), text);
  log << "wrote " << joined(opt.out_dir, "oracle.txt") << "\n";
  return ok ? 0 : 1;
}

int cmd_sample(const RunConfig& cfg, const RunOptions& opt,
               std::ostream& log) {
  const unsigned threads = resolve_threads(opt.threads);
  ensure_outdir(opt.out_dir);
  const std::uint64_t seed = opt.seed ? *opt.seed : cfg.seed;
  const NoiseRealization noise = NoiseRealization::sample(
      cfg.bath_grid, cfg.kgrid, seed, cfg.units.hbar, threads);

  const std::size_t nq = cfg.bath_grid.size();
  const std::size_t nm = cfg.kgrid.n_half();
  auto axes3 = lattice_axes(cfg.kgrid);
  auto flags = convention_flags(cfg, cfg.solver.eta);
  flags.emplace_back("seed", static_cast<double>(seed));

  struct Kind {
    const char* name;
    const Eigen::Vector3cd& (NoiseRealization::*mode)(std::size_t,
                                                      std::size_t) const;
  };
  for (const Kind k : {Kind{"electric", &NoiseRealization::mode_electric},
                       Kind{"magnetic", &NoiseRealization::mode_magnetic}}) {
    std::vector<ArrayAxis> axes{
        frequency_axis("bath", cfg.bath_grid.nodes), axes3[0], axes3[1],
        axes3[2], ArrayAxis{"lambda", 3, 0.0, 0.0}};
    std::vector<cplx> data(nq * nm * 3);
    for (std::size_t q = 0; q < nq; ++q) {
      for (std::size_t m_i = 0; m_i < nm; ++m_i) {
        const Eigen::Vector3cd& v = (noise.*k.mode)(q, m_i);
        for (int c = 0; c < 3; ++c) data[(q * nm + m_i) * 3 + c] = v(c);
      }
    }
    const std::string path =
        joined(opt.out_dir, std::string("noise_") + k.name + ".nlmd");
    write_array(path, complex_file(std::move(axes), flags, std::move(data)));
    log << "wrote " << path << "\n";
  }

  json m = base_manifest(cfg, "sample");
  m["seed"] = seed;
  write_manifest(joined(opt.out_dir, cfg.out_manifest), m, log);
  return 0;
}

int run_command(const std::string& command, const std::string& config_path,
                const RunOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    if (command == "validate") return cmd_validate(cfg, opt, log);
    if (command == "susceptibility") return cmd_susceptibility(cfg, opt, log);
    if (command == "solve") return cmd_solve(cfg, opt, log);
    if (command == "oracle") return cmd_oracle(cfg, opt, log);
    if (command == "sample") return cmd_sample(cfg, opt, log);
    err << "unknown command: " << command << "\n";
    return 4;
  } catch (const divergence_error& e) {
    err << "diverged: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return 4;
  } catch (const shape_error& e) {
    err << "config error: " << e.what() << "\n";
    return 4;
  } catch (const stability_error& e) {
    err << "config error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nlmd
