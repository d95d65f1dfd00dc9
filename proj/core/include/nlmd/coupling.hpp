#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlmd/errors.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/tensor3.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Medium description. A medium is a set of coupling tensors: rank-2 tensors
// pair the electric (or magnetic) field with one bath oscillator factor and
// generate the linear susceptibility; rank-3 tensors pair it with two bath
// factors and generate the quadratic one. Higher ranks are out of scope; the
// extension point is an additional CouplingN class plus the matching kernel
// builder.
//
// Homogeneous forms are momentum-conserving: a rank-2 coupling carries an
// implicit delta(k - k1) and stores one 3x3 matrix per frequency bin, a
// rank-3 coupling carries delta(k - k1 - k2) and stores one 3-index block
// per frequency bin pair. Mirror reality (value at -k equals the conjugate
// of the value at +k) then forces the stored entries to be real; we keep
// complex storage for uniformity with the tabulated forms and validate the
// imaginary parts away at construction.
//
// Tabulated forms store dense data over full-lattice momentum indices and
// may be genuinely complex, constrained by the mirror pairing instead.
// ---------------------------------------------------------------------------

enum class FieldKind { Electric, Magnetic };

inline const char* to_string(FieldKind k) {
  return k == FieldKind::Electric ? "electric" : "magnetic";
}

// sqrt-lorentzian line shape: strength * sqrt(width/pi) / sqrt((omega-center)^2 + width^2)
struct LorentzianLine {
  double strength = 0;  // >= 0
  double center = 0;
  double width = 0;  // > 0

  double eval(double omega) const;
  void validate() const;  // throws config_error on bad parameters
};

// outcome of a symmetry/reality scan; pass iff max_violation <= tolerance
struct ValidationReport {
  bool pass = true;
  double max_violation = 0;
  double tolerance = 0;
  std::string where;  // location of the worst entry, empty if clean
};

// Rank-2 coupling tensor (one field index, one bath index).
class Coupling1 {
 public:
  enum class Form { HomogeneousDiagonal, HomogeneousDense, Tabulated };

  static Coupling1 zero(FieldKind kind, FrequencyGrid grid);
  static Coupling1 isotropic_lorentzian(FieldKind kind, FrequencyGrid grid,
                                        const LorentzianLine& line);
  // independent line per Cartesian axis
  static Coupling1 anisotropic_diagonal(
      FieldKind kind, FrequencyGrid grid,
      const std::array<LorentzianLine, 3>& lines);
  // one real 3x3 matrix per frequency bin
  static Coupling1 homogeneous_dense(FieldKind kind, FrequencyGrid grid,
                                     std::vector<Eigen::Matrix3d> values);
  // dense complex table over (bin q, k index f, k1 index f1), full lattice,
  // row-major; validate=false skips the mirror-reality gate (test hook)
  static Coupling1 tabulated(FieldKind kind, FrequencyGrid grid, KGrid kgrid,
                             std::vector<Eigen::Matrix3cd> values,
                             bool validate = true);

  FieldKind kind() const { return kind_; }
  Form form() const { return form_; }
  bool homogeneous() const { return form_ != Form::Tabulated; }
  const FrequencyGrid& grid() const { return grid_; }
  // lattice of the tabulated momentum arguments; throws for homogeneous forms
  const KGrid& kgrid() const;

  // homogeneous value at frequency bin q
  const Eigen::Matrix3cd& at(std::size_t q) const;
  // tabulated value at (q, f, f1); f, f1 index the full mirrored lattice
  const Eigen::Matrix3cd& at(std::size_t q, std::size_t f,
                             std::size_t f1) const;

  // conjugate transpose in the two tensor indices; for tabulated data the
  // momentum arguments swap roles along with the indices, so this evaluates
  // the adjoint *at* (q, f, f1), i.e. adjoint(at(q, f1, f)).
  Eigen::Matrix3cd adjoint_at(std::size_t q) const;
  Eigen::Matrix3cd adjoint_at(std::size_t q, std::size_t f,
                              std::size_t f1) const;

  // max violation of value(.., k, k1) - conj(value(.., -k, -k1))
  ValidationReport check_reality(double tol = 1e-10) const;

  double max_abs() const;

 private:
  Coupling1() = default;

  std::size_t table_index(std::size_t q, std::size_t f, std::size_t f1) const;

  FieldKind kind_ = FieldKind::Electric;
  Form form_ = Form::HomogeneousDiagonal;
  FrequencyGrid grid_;
  std::optional<KGrid> kgrid_;
  std::vector<Eigen::Matrix3cd> values_;  // per q, or per (q,f,f1) row-major
};

// Rank-3 coupling tensor (one field index, two bath indices).
class Coupling2 {
 public:
  enum class Form { HomogeneousSeparable, Tabulated };

  static Coupling2 zero(FieldKind kind, FrequencyGrid grid);
  // block(q1,q2) = T * line(omega_q1) * line(omega_q2), T real, symmetrized
  static Coupling2 separable_lorentzian(FieldKind kind, FrequencyGrid grid,
                                        const Tensor3& t,
                                        const LorentzianLine& line);
  // one block per frequency bin pair (q1, q2), row-major
  static Coupling2 homogeneous_separable(FieldKind kind, FrequencyGrid grid,
                                         std::vector<Tensor3> values,
                                         bool symmetrize = true);
  // dense table over (q1, q2, f, f1, f2), full lattice, row-major
  static Coupling2 tabulated(FieldKind kind, FrequencyGrid grid, KGrid kgrid,
                             std::vector<Tensor3> values,
                             bool symmetrize = true, bool validate = true);

  FieldKind kind() const { return kind_; }
  Form form() const { return form_; }
  bool homogeneous() const { return form_ == Form::HomogeneousSeparable; }
  const FrequencyGrid& grid() const { return grid_; }
  const KGrid& kgrid() const;

  const Tensor3& at(std::size_t q1, std::size_t q2) const;
  const Tensor3& at(std::size_t q1, std::size_t q2, std::size_t f,
                    std::size_t f1, std::size_t f2) const;

  // max violation of the simultaneous swap (omega1,k1,j) <-> (omega2,k2,k)
  ValidationReport check_pair_swap(double tol = 1e-10) const;
  // as for Coupling1, with all three momentum arguments mirrored
  ValidationReport check_reality(double tol = 1e-10) const;

  double max_abs() const;

  friend Coupling2 symmetrize(const Coupling2& c);

 private:
  Coupling2() = default;

  std::size_t pair_index(std::size_t q1, std::size_t q2) const;
  std::size_t table_index(std::size_t q1, std::size_t q2, std::size_t f,
                          std::size_t f1, std::size_t f2) const;

  FieldKind kind_ = FieldKind::Electric;
  Form form_ = Form::HomogeneousSeparable;
  FrequencyGrid grid_;
  std::optional<KGrid> kgrid_;
  std::vector<Tensor3> values_;
};

// Projection onto the pair-swap-even part: (T + swap(T)) / 2. Idempotent and
// linear; construction applies it by default so stored tensors satisfy the
// swap symmetry exactly.
Coupling2 symmetrize(const Coupling2& c);

// The full set of couplings defining a medium. Rank-3 parts are optional;
// absent means the medium has no quadratic response of that kind (distinct
// from a present-but-zero coupling only in storage).
struct Medium {
  Coupling1 electric1;
  Coupling1 magnetic1;
  std::optional<Coupling2> electric2;
  std::optional<Coupling2> magnetic2;
};

}  // namespace nlmd
