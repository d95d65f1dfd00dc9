#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "nlmd/config.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Command implementations behind the CLI. Every command is a pure function
// of (config, options) plus the filesystem; all file writes go through a
// single writer, and the bytes written depend only on (config, seed) —
// never on the thread count.
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;      // overrides the config seed
  std::optional<std::size_t> max_order;   // overrides solver.max_order
  unsigned threads = 1;
};

// 0 -> NLMD_THREADS env var if set and positive -> 1
unsigned resolve_threads(unsigned flag);

// exit status: 0 success, 1 validation failure
int cmd_validate(const RunConfig& cfg, const RunOptions& opt,
                 std::ostream& log);

// builds and exports the response kernels; 0 on success
int cmd_susceptibility(const RunConfig& cfg, const RunOptions& opt,
                       std::ostream& log);

// full pipeline: noise, solve, field/manifest/convergence outputs;
// 0 converged or max-order reached, 2 diverged (partial outputs flagged)
int cmd_solve(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);

// convolution-vs-integrator comparison table; 0 all pass, 1 otherwise
int cmd_oracle(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);

// samples and exports the stochastic bath amplitudes; 0 on success
int cmd_sample(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);

// Loads the config, dispatches to the command, and maps exceptions to exit
// codes: 1 validation, 2 divergence, 3 I/O, 4 config/usage.
int run_command(const std::string& command, const std::string& config_path,
                const RunOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace nlmd
