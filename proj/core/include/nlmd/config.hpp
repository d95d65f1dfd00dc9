#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "nlmd/coupling.hpp"
#include "nlmd/grids.hpp"
#include "nlmd/solver.hpp"
#include "nlmd/units.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Run configuration: a versioned JSON document (schema version 1) parsed
// into built grids, couplings, and solver settings. Layout:
//
// {
//   "version": 1,
//   "units":  {"eps0": 1, "mu0": 1, "c": 1, "hbar": 1},
//   "grids": {
//     "omega": {"max": 4.0, "count": 32, "rule": "midpoint" | "legendre"},
//     "k":     {"extents": [2, 2, 2], "counts": [2, 2, 2]},
//     "bath":  {"max": 3.0, "count": 4, "rule": "midpoint"}
//   },
//   "medium": {
//     "electric1": COUPLING1, "magnetic1": COUPLING1,       (default zero)
//     "electric2": COUPLING2, "magnetic2": COUPLING2        (default absent)
//   },
//   "noise":  {"enabled": true, "seed": 1234},
//   "solver": {"max_order": 16, "tolerance": 1e-8, "eta": "auto" | 0.05,
//              "damping": 1.0, "window": 2},
//   "outputs": {"field": "field.nlmd", "convergence": "convergence.txt",
//               "manifest": "manifest.json", "kernels": false}
// }
//
// COUPLING1 forms: {"form": "zero"} |
//   {"form": "isotropic", "line": LINE} |
//   {"form": "diagonal", "lines": [LINE, LINE, LINE]} |
//   {"form": "dense", "matrices": [[9 reals row-major] per bath bin]}
// COUPLING2 forms: {"form": "zero"} |
//   {"form": "separable", "tensor": [27 reals row-major], "line": LINE}
// LINE: {"strength": s, "center": w0, "width": g}
//
// "eta": "auto" resolves to 0.01 * omega max. The CLI supports homogeneous
// couplings; tabulated media are a library-level feature.
// ---------------------------------------------------------------------------

struct RunConfig {
  Units units;
  FrequencyGrid field_grid;
  KGrid kgrid;
  FrequencyGrid bath_grid;
  Medium medium;
  bool noise_enabled = true;
  std::uint64_t seed = 0;
  SolverConfig solver;
  std::string out_field;
  std::string out_convergence;
  std::string out_manifest;
  bool write_kernels = false;
  std::uint64_t config_hash = 0;  // FNV-1a over the canonical document
  std::string canonical;          // canonical (sorted, compact) document
};

// both throw config_error with the offending field (or parse position)
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);  // io_error when unreadable

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace nlmd
