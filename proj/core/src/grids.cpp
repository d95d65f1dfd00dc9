#include "nlmd/grids.hpp"

#include <algorithm>
#include <cmath>

#include "nlmd/tensor3.hpp"

namespace nlmd {

namespace {

// Gauss-Legendre nodes/weights on (-1, 1) by Newton iteration on P_n.
// Symmetric, converges in a handful of steps for any practical n.
void gauss_legendre_unit(std::size_t n, std::vector<double>& x,
                         std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Chebyshev-like initial guess
    double z = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

FrequencyGrid build_frequency_grid(double omega_max, std::size_t n,
                                   FrequencyRule rule) {
  if (!(omega_max > 0))
    throw config_error("frequency grid: omega_max must be positive");
  if (n == 0) throw config_error("frequency grid: need at least one bin");

  FrequencyGrid g;
  g.omega_max = omega_max;
  g.nodes.resize(n);
  g.weights.resize(n);
  switch (rule) {
    case FrequencyRule::UniformMidpoint: {
      const double d = omega_max / static_cast<double>(n);
      for (std::size_t q = 0; q < n; ++q) {
        g.nodes[q] = (static_cast<double>(q) + 0.5) * d;
        g.weights[q] = d;
      }
      break;
    }
    case FrequencyRule::GaussLegendre: {
      std::vector<double> x, w;
      gauss_legendre_unit(n, x, w);
      for (std::size_t q = 0; q < n; ++q) {
        g.nodes[q] = 0.5 * omega_max * (x[q] + 1.0);
        g.weights[q] = 0.5 * omega_max * w[q];
      }
      break;
    }
  }
  return g;
}

FrequencyGrid FrequencyGrid::from_nodes(std::vector<double> nodes,
                                        std::vector<double> weights) {
  if (nodes.empty() || nodes.size() != weights.size())
    throw config_error("frequency grid: node/weight arrays empty or mismatched");
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    if (!(nodes[q] >= 0))
      throw config_error("frequency grid: negative node");
    if (q > 0 && !(nodes[q] > nodes[q - 1]))
      throw config_error("frequency grid: nodes must be strictly increasing");
    if (!(weights[q] > 0))
      throw config_error("frequency grid: weights must be positive");
  }
  FrequencyGrid g;
  g.omega_max = nodes.back();
  g.nodes = std::move(nodes);
  g.weights = std::move(weights);
  return g;
}

Triad build_triad(const Eigen::Vector3d& k) {
  const double kn = k.norm();
  if (kn == 0.0)
    throw config_error("triad undefined at k = 0; use the axis fallback");
  Triad t;
  t.e3 = k / kn;
  const Eigen::Vector3d z(0, 0, 1);
  Eigen::Vector3d c = z.cross(t.e3);
  const double cn = c.norm();
  if (cn < 1e-14) {
    t.e1 = Eigen::Vector3d(1, 0, 0);
  } else {
    t.e1 = c / cn;
  }
  t.e2 = t.e3.cross(t.e1);  // then e1 x e2 = e3
  return t;
}

Triad axis_triad() {
  Triad t;
  t.e1 = Eigen::Vector3d(1, 0, 0);
  t.e2 = Eigen::Vector3d(0, 1, 0);
  t.e3 = Eigen::Vector3d(0, 0, 1);
  return t;
}

KGrid KGrid::build(const Eigen::Vector3d& extents,
                   const std::array<std::size_t, 3>& counts) {
  for (int a = 0; a < 3; ++a) {
    if (!(extents[a] > 0))
      throw config_error("k grid: extents must be positive");
    if (counts[a] == 0) throw config_error("k grid: counts must be nonzero");
  }
  KGrid g;
  g.extents_ = extents;
  g.counts_ = counts;
  for (int a = 0; a < 3; ++a)
    g.spacing_[a] = extents[a] / static_cast<double>(counts[a]);

  std::vector<double> ax[2];
  for (int a = 0; a < 2; ++a) {
    ax[a].resize(counts[a]);
    for (std::size_t i = 0; i < counts[a]; ++i)
      ax[a][i] = (static_cast<double>(i) -
                  0.5 * (static_cast<double>(counts[a]) - 1.0)) *
                 g.spacing_[a];
  }
  // z axis: strictly positive midpoints in both parities (see header)
  const std::size_t nz =
      (counts[2] % 2 == 0) ? counts[2] / 2 : counts[2];
  std::vector<double> az(nz);
  for (std::size_t i = 0; i < nz; ++i)
    az[i] = (static_cast<double>(i) + 0.5) * g.spacing_[2];

  const double cellw = g.spacing_[0] * g.spacing_[1] * g.spacing_[2];
  g.half_nodes_.reserve(counts[0] * counts[1] * nz);
  for (std::size_t iz = 0; iz < nz; ++iz)
    for (std::size_t iy = 0; iy < counts[1]; ++iy)
      for (std::size_t ix = 0; ix < counts[0]; ++ix) {
        g.half_nodes_.emplace_back(ax[0][ix], ax[1][iy], az[iz]);
        g.half_weights_.push_back(cellw);
        g.plane_.push_back(false);
      }
  g.finalize();
  return g;
}

KGrid KGrid::from_nodes(std::vector<Eigen::Vector3d> nodes,
                        std::vector<double> weights) {
  if (nodes.empty() || nodes.size() != weights.size())
    throw config_error("k grid: node/weight arrays empty or mismatched");
  KGrid g;
  g.half_nodes_ = std::move(nodes);
  g.half_weights_ = std::move(weights);
  g.plane_.resize(g.half_nodes_.size());
  for (std::size_t m = 0; m < g.half_nodes_.size(); ++m) {
    if (g.half_nodes_[m][2] < 0)
      throw config_error("k grid: stored nodes must have k_z >= 0");
    if (!(g.half_weights_[m] > 0))
      throw config_error("k grid: weights must be positive");
    g.plane_[m] = (g.half_nodes_[m][2] == 0.0);
  }
  g.finalize();
  return g;
}

void KGrid::finalize() {
  const std::size_t n = half_nodes_.size();
  // duplicate detection at a scale-aware tolerance
  double scale = 0;
  for (const auto& k : half_nodes_) scale = std::max(scale, k.lpNorm<Eigen::Infinity>());
  const double tol = 1e-12 * std::max(scale, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((half_nodes_[i] - half_nodes_[j]).lpNorm<Eigen::Infinity>() < tol)
        throw config_error("k grid: duplicate node");

  n_plane_ = 0;
  mirror_src_.clear();
  mirror_slot_.assign(n, 0);
  for (std::size_t m = 0; m < n; ++m) {
    if (plane_[m]) {
      ++n_plane_;
      mirror_slot_[m] = m;  // self-conjugate
    } else {
      mirror_slot_[m] = n + mirror_src_.size();
      mirror_src_.push_back(m);
    }
  }
}

Eigen::Vector3d KGrid::full_node(std::size_t f) const {
  if (f < n_half()) return half_nodes_[f];
  return -half_nodes_[mirror_src_[f - n_half()]];
}

double KGrid::full_weight(std::size_t f) const {
  return half_weights_[half_of_full(f)];
}

std::size_t KGrid::half_of_full(std::size_t f) const {
  if (f < n_half()) return f;
  return mirror_src_[f - n_half()];
}

std::size_t KGrid::mirror_of(std::size_t f) const {
  if (f < n_half()) return mirror_slot_[f];
  return mirror_src_[f - n_half()];
}

std::ptrdiff_t KGrid::find_full(const Eigen::Vector3d& k, double tol) const {
  const std::size_t nf = n_full();
  for (std::size_t f = 0; f < nf; ++f)
    if ((full_node(f) - k).lpNorm<Eigen::Infinity>() <= tol)
      return static_cast<std::ptrdiff_t>(f);
  return -1;
}

double KGrid::half_volume() const {
  double s = 0;
  for (double w : half_weights_) s += w;
  return s;
}

std::vector<Eigen::Vector3cd> mirror_extend(
    const KGrid& grid, std::span<const Eigen::Vector3cd> half_field,
    double tol) {
  if (half_field.size() != grid.n_half())
    throw shape_error("mirror_extend: field size does not match grid");
  std::vector<Eigen::Vector3cd> full(grid.n_full());
  for (std::size_t m = 0; m < grid.n_half(); ++m) {
    Eigen::Vector3cd v = half_field[m];
    if (grid.plane(m)) {
      for (int i = 0; i < 3; ++i) {
        if (std::abs(v[i].imag()) > tol)
          throw reality_error(
              "mirror_extend: self-conjugate plane node carries an imaginary "
              "part above tolerance");
        v[i] = cplx(v[i].real(), 0.0);
      }
    }
    full[m] = v;
  }
  for (std::size_t f = grid.n_half(); f < grid.n_full(); ++f)
    full[f] = half_field[grid.half_of_full(f)].conjugate();
  return full;
}

}  // namespace nlmd
