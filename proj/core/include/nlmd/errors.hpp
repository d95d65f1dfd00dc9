#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlmd {

// Bad or inconsistent run configuration / constructor arguments.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Array / grid shape mismatch between operands.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A conjugate-symmetry (reality) constraint was violated beyond tolerance.
struct reality_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value or an excluded bin (omega = 0, k = 0) hit at runtime.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wave operator not invertible at the requested (k, omega) with eta = 0.
struct singularity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Integrator step-size restriction violated.
struct stability_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// File I/O or binary-format failure.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-point iteration diverged; carries the recorded norm history.
struct divergence_error : std::runtime_error {
  divergence_error(const std::string& msg, std::vector<double> history)
      : std::runtime_error(msg), norm_history(std::move(history)) {}
  std::vector<double> norm_history;
};

}  // namespace nlmd
