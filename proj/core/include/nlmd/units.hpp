#pragma once

#include "nlmd/errors.hpp"

namespace nlmd {

// Unit system for the run. Defaults are the natural units eps0 = mu0 = c =
// hbar = 1; all four are independent knobs and no mutual consistency
// (eps0*mu0*c^2 = 1) is enforced -- callers working in SI are responsible for
// supplying a consistent set.
struct Units {
  double eps0 = 1.0;
  double mu0 = 1.0;
  double c = 1.0;
  double hbar = 1.0;

  void validate() const {
    if (eps0 <= 0 || mu0 <= 0 || c <= 0 || hbar <= 0)
      throw config_error("units: eps0, mu0, c, hbar must all be positive");
  }
};

}  // namespace nlmd
