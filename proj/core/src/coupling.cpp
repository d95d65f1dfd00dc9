#include "nlmd/coupling.hpp"

#include <cmath>
#include <initializer_list>
#include <sstream>
#include <utility>

namespace nlmd {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

std::string locate(std::initializer_list<std::pair<const char*, std::size_t>>
                       indices,
                   double violation) {
  std::ostringstream os;
  os << "worst at (";
  bool first = true;
  for (const auto& [name, value] : indices) {
    if (!first) os << ", ";
    os << name << "=" << value;
    first = false;
  }
  os << "), violation " << violation;
  return os.str();
}

}  // namespace

double LorentzianLine::eval(double omega) const {
  const double d = omega - center;
  return strength * std::sqrt(width / kPi) / std::sqrt(d * d + width * width);
}

void LorentzianLine::validate() const {
  if (strength < 0) throw config_error("lorentzian line: strength < 0");
  if (!(width > 0)) throw config_error("lorentzian line: width must be > 0");
  if (!std::isfinite(strength) || !std::isfinite(center) ||
      !std::isfinite(width)) {
    throw config_error("lorentzian line: non-finite parameter");
  }
}

// ---------------------------------------------------------------- Coupling1

Coupling1 Coupling1::zero(FieldKind kind, FrequencyGrid grid) {
  Coupling1 c;
  c.kind_ = kind;
  c.form_ = Form::HomogeneousDiagonal;
  c.values_.assign(grid.size(), Eigen::Matrix3cd::Zero());
  c.grid_ = std::move(grid);
  return c;
}

Coupling1 Coupling1::isotropic_lorentzian(FieldKind kind, FrequencyGrid grid,
                                          const LorentzianLine& line) {
  line.validate();
  Coupling1 c;
  c.kind_ = kind;
  c.form_ = Form::HomogeneousDiagonal;
  c.values_.reserve(grid.size());
  for (double omega : grid.nodes) {
    c.values_.push_back(line.eval(omega) * Eigen::Matrix3cd::Identity());
  }
  c.grid_ = std::move(grid);
  return c;
}

Coupling1 Coupling1::anisotropic_diagonal(
    FieldKind kind, FrequencyGrid grid,
    const std::array<LorentzianLine, 3>& lines) {
  for (const auto& line : lines) line.validate();
  Coupling1 c;
  c.kind_ = kind;
  c.form_ = Form::HomogeneousDiagonal;
  c.values_.reserve(grid.size());
  for (double omega : grid.nodes) {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    for (int i = 0; i < 3; ++i) m(i, i) = lines[i].eval(omega);
    c.values_.push_back(m);
  }
  c.grid_ = std::move(grid);
  return c;
}

Coupling1 Coupling1::homogeneous_dense(FieldKind kind, FrequencyGrid grid,
                                       std::vector<Eigen::Matrix3d> values) {
  if (values.size() != grid.size()) {
    throw shape_error("coupling: one matrix per frequency bin required");
  }
  Coupling1 c;
  c.kind_ = kind;
  c.form_ = Form::HomogeneousDense;
  c.values_.reserve(values.size());
  for (const auto& m : values) {
    if (!m.allFinite()) throw config_error("coupling: non-finite entry");
    c.values_.push_back(m.cast<cplx>());
  }
  c.grid_ = std::move(grid);
  return c;
}

Coupling1 Coupling1::tabulated(FieldKind kind, FrequencyGrid grid, KGrid kgrid,
                               std::vector<Eigen::Matrix3cd> values,
                               bool validate) {
  const std::size_t nf = kgrid.n_full();
  if (values.size() != grid.size() * nf * nf) {
    throw shape_error("coupling: tabulated data must cover (bin, k, k1)");
  }
  for (const auto& m : values) {
    if (!m.allFinite()) throw config_error("coupling: non-finite entry");
  }
  Coupling1 c;
  c.kind_ = kind;
  c.form_ = Form::Tabulated;
  c.grid_ = std::move(grid);
  c.kgrid_ = std::move(kgrid);
  c.values_ = std::move(values);
  if (validate) {
    auto report = c.check_reality();
    if (!report.pass) {
      throw reality_error("tabulated coupling violates mirror reality: " +
                          report.where);
    }
  }
  return c;
}

const KGrid& Coupling1::kgrid() const {
  if (!kgrid_) throw config_error("coupling: homogeneous form has no k table");
  return *kgrid_;
}

std::size_t Coupling1::table_index(std::size_t q, std::size_t f,
                                   std::size_t f1) const {
  const std::size_t nf = kgrid_->n_full();
  return (q * nf + f) * nf + f1;
}

const Eigen::Matrix3cd& Coupling1::at(std::size_t q) const {
  if (form_ == Form::Tabulated) {
    throw config_error("coupling: tabulated form needs momentum arguments");
  }
  return values_[q];
}

const Eigen::Matrix3cd& Coupling1::at(std::size_t q, std::size_t f,
                                      std::size_t f1) const {
  if (form_ != Form::Tabulated) return values_[q];
  return values_[table_index(q, f, f1)];
}

Eigen::Matrix3cd Coupling1::adjoint_at(std::size_t q) const {
  return at(q).adjoint();
}

Eigen::Matrix3cd Coupling1::adjoint_at(std::size_t q, std::size_t f,
                                       std::size_t f1) const {
  // tensor indices and momentum arguments swap together
  return at(q, f1, f).adjoint();
}

ValidationReport Coupling1::check_reality(double tol) const {
  ValidationReport report;
  report.tolerance = tol;
  if (form_ != Form::Tabulated) {
    for (std::size_t q = 0; q < values_.size(); ++q) {
      const double v = values_[q].imag().cwiseAbs().maxCoeff();
      if (v > report.max_violation) {
        report.max_violation = v;
        report.where = locate({{"q", q}}, v);
      }
    }
  } else {
    const std::size_t nf = kgrid_->n_full();
    for (std::size_t q = 0; q < grid_.size(); ++q) {
      for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t f1 = 0; f1 < nf; ++f1) {
          const Eigen::Matrix3cd delta =
              values_[table_index(q, f, f1)] -
              values_[table_index(q, kgrid_->mirror_of(f),
                                  kgrid_->mirror_of(f1))]
                  .conjugate();
          const double v = delta.cwiseAbs().maxCoeff();
          if (v > report.max_violation) {
            report.max_violation = v;
            report.where = locate({{"q", q}, {"f", f}, {"f1", f1}}, v);
          }
        }
      }
    }
  }
  report.pass = report.max_violation <= tol;
  return report;
}

double Coupling1::max_abs() const {
  double m = 0;
  for (const auto& v : values_) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

// ---------------------------------------------------------------- Coupling2

Coupling2 Coupling2::zero(FieldKind kind, FrequencyGrid grid) {
  Coupling2 c;
  c.kind_ = kind;
  c.form_ = Form::HomogeneousSeparable;
  c.values_.assign(grid.size() * grid.size(), Tensor3{});
  c.grid_ = std::move(grid);
  return c;
}

Coupling2 Coupling2::separable_lorentzian(FieldKind kind, FrequencyGrid grid,
                                          const Tensor3& t,
                                          const LorentzianLine& line) {
  line.validate();
  const std::size_t n = grid.size();
  std::vector<Tensor3> values;
  values.reserve(n * n);
  for (std::size_t q1 = 0; q1 < n; ++q1) {
    for (std::size_t q2 = 0; q2 < n; ++q2) {
      values.push_back(t * (line.eval(grid.nodes[q1]) *
                            line.eval(grid.nodes[q2])));
    }
  }
  return homogeneous_separable(kind, std::move(grid), std::move(values));
}

Coupling2 Coupling2::homogeneous_separable(FieldKind kind, FrequencyGrid grid,
                                           std::vector<Tensor3> values,
                                           bool symmetrize_input) {
  if (values.size() != grid.size() * grid.size()) {
    throw shape_error("coupling: one block per frequency bin pair required");
  }
  for (std::size_t p = 0; p < values.size(); ++p) {
    for (const cplx& v : values[p].a) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw config_error("coupling: non-finite entry");
      }
      if (std::abs(v.imag()) > 1e-10) {
        throw reality_error(
            "homogeneous rank-3 coupling: non-real entry (mirror reality "
            "forces real values)");
      }
    }
  }
  Coupling2 c;
  c.kind_ = kind;
  c.form_ = Form::HomogeneousSeparable;
  c.grid_ = std::move(grid);
  c.values_ = std::move(values);
  return symmetrize_input ? symmetrize(c) : c;
}

Coupling2 Coupling2::tabulated(FieldKind kind, FrequencyGrid grid, KGrid kgrid,
                               std::vector<Tensor3> values,
                               bool symmetrize_input, bool validate) {
  const std::size_t nf = kgrid.n_full();
  const std::size_t n = grid.size();
  if (values.size() != n * n * nf * nf * nf) {
    throw shape_error(
        "coupling: tabulated data must cover (bin1, bin2, k, k1, k2)");
  }
  Coupling2 c;
  c.kind_ = kind;
  c.form_ = Form::Tabulated;
  c.grid_ = std::move(grid);
  c.kgrid_ = std::move(kgrid);
  c.values_ = std::move(values);
  if (symmetrize_input) c = symmetrize(c);
  if (validate) {
    auto report = c.check_reality();
    if (!report.pass) {
      throw reality_error("tabulated coupling violates mirror reality: " +
                          report.where);
    }
  }
  return c;
}

const KGrid& Coupling2::kgrid() const {
  if (!kgrid_) throw config_error("coupling: homogeneous form has no k table");
  return *kgrid_;
}

std::size_t Coupling2::pair_index(std::size_t q1, std::size_t q2) const {
  return q1 * grid_.size() + q2;
}

std::size_t Coupling2::table_index(std::size_t q1, std::size_t q2,
                                   std::size_t f, std::size_t f1,
                                   std::size_t f2) const {
  const std::size_t nf = kgrid_->n_full();
  return (((q1 * grid_.size() + q2) * nf + f) * nf + f1) * nf + f2;
}

const Tensor3& Coupling2::at(std::size_t q1, std::size_t q2) const {
  if (form_ == Form::Tabulated) {
    throw config_error("coupling: tabulated form needs momentum arguments");
  }
  return values_[pair_index(q1, q2)];
}

const Tensor3& Coupling2::at(std::size_t q1, std::size_t q2, std::size_t f,
                             std::size_t f1, std::size_t f2) const {
  if (form_ != Form::Tabulated) return values_[pair_index(q1, q2)];
  return values_[table_index(q1, q2, f, f1, f2)];
}

ValidationReport Coupling2::check_pair_swap(double tol) const {
  ValidationReport report;
  report.tolerance = tol;
  const std::size_t n = grid_.size();
  if (form_ == Form::HomogeneousSeparable) {
    for (std::size_t q1 = 0; q1 < n; ++q1) {
      for (std::size_t q2 = 0; q2 < n; ++q2) {
        const Tensor3 delta = values_[pair_index(q1, q2)] +
                              values_[pair_index(q2, q1)].swapped_last() * -1.0;
        const double v = delta.max_abs();
        if (v > report.max_violation) {
          report.max_violation = v;
          report.where = locate({{"q1", q1}, {"q2", q2}}, v);
        }
      }
    }
  } else {
    const std::size_t nf = kgrid_->n_full();
    for (std::size_t q1 = 0; q1 < n; ++q1) {
      for (std::size_t q2 = 0; q2 < n; ++q2) {
        for (std::size_t f = 0; f < nf; ++f) {
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            for (std::size_t f2 = 0; f2 < nf; ++f2) {
              const Tensor3 delta =
                  values_[table_index(q1, q2, f, f1, f2)] +
                  values_[table_index(q2, q1, f, f2, f1)].swapped_last() *
                      -1.0;
              const double v = delta.max_abs();
              if (v > report.max_violation) {
                report.max_violation = v;
                report.where = locate(
                    {{"q1", q1}, {"q2", q2}, {"f", f}, {"f1", f1}, {"f2", f2}},
                    v);
              }
            }
          }
        }
      }
    }
  }
  report.pass = report.max_violation <= tol;
  return report;
}

ValidationReport Coupling2::check_reality(double tol) const {
  ValidationReport report;
  report.tolerance = tol;
  const std::size_t n = grid_.size();
  if (form_ == Form::HomogeneousSeparable) {
    for (std::size_t p = 0; p < values_.size(); ++p) {
      double v = 0;
      for (const cplx& e : values_[p].a) v = std::max(v, std::abs(e.imag()));
      if (v > report.max_violation) {
        report.max_violation = v;
        report.where = locate({{"q1", p / n}, {"q2", p % n}}, v);
      }
    }
  } else {
    const std::size_t nf = kgrid_->n_full();
    for (std::size_t q1 = 0; q1 < n; ++q1) {
      for (std::size_t q2 = 0; q2 < n; ++q2) {
        for (std::size_t f = 0; f < nf; ++f) {
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            for (std::size_t f2 = 0; f2 < nf; ++f2) {
              const Tensor3 delta =
                  values_[table_index(q1, q2, f, f1, f2)] +
                  values_[table_index(q1, q2, kgrid_->mirror_of(f),
                                      kgrid_->mirror_of(f1),
                                      kgrid_->mirror_of(f2))]
                          .conjugate() *
                      -1.0;
              const double v = delta.max_abs();
              if (v > report.max_violation) {
                report.max_violation = v;
                report.where = locate(
                    {{"q1", q1}, {"q2", q2}, {"f", f}, {"f1", f1}, {"f2", f2}},
                    v);
              }
            }
          }
        }
      }
    }
  }
  report.pass = report.max_violation <= tol;
  return report;
}

double Coupling2::max_abs() const {
  double m = 0;
  for (const auto& v : values_) m = std::max(m, v.max_abs());
  return m;
}

Coupling2 symmetrize(const Coupling2& c) {
  Coupling2 out = c;
  const std::size_t n = c.grid_.size();
  if (c.form_ == Coupling2::Form::HomogeneousSeparable) {
    for (std::size_t q1 = 0; q1 < n; ++q1) {
      for (std::size_t q2 = 0; q2 < n; ++q2) {
        out.values_[c.pair_index(q1, q2)] =
            (c.values_[c.pair_index(q1, q2)] +
             c.values_[c.pair_index(q2, q1)].swapped_last()) *
            0.5;
      }
    }
  } else {
    const std::size_t nf = c.kgrid_->n_full();
    for (std::size_t q1 = 0; q1 < n; ++q1) {
      for (std::size_t q2 = 0; q2 < n; ++q2) {
        for (std::size_t f = 0; f < nf; ++f) {
          for (std::size_t f1 = 0; f1 < nf; ++f1) {
            for (std::size_t f2 = 0; f2 < nf; ++f2) {
              out.values_[c.table_index(q1, q2, f, f1, f2)] =
                  (c.values_[c.table_index(q1, q2, f, f1, f2)] +
                   c.values_[c.table_index(q2, q1, f, f2, f1)]
                       .swapped_last()) *
                  0.5;
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace nlmd
