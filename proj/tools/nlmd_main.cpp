#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlmd/runner.hpp"
#include "nlmd/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spectral solver for dispersive magnetodielectric media"};
  app.set_version_flag("--version", std::string(nlmd::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  nlmd::RunOptions opt;
  std::uint64_t seed = 0;
  std::size_t order_max = 0;
  unsigned threads = 0;  // 0 -> NLMD_THREADS -> 1

  const char* descriptions[][2] = {
      {"validate", "run the medium and kernel consistency checks"},
      {"susceptibility", "build and export the response kernels"},
      {"solve", "sample noise and iterate the field equation"},
      {"oracle", "cross-check the oscillator routes, emit RMS tables"},
      {"sample", "draw and export one stochastic bath realization"},
  };
  for (auto& d : descriptions) {
    CLI::App* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("-c,--config", config_path, "run configuration (JSON)")
        ->required();
    sub->add_option("-o,--out", opt.out_dir, "output directory");
    sub->add_option("-t,--threads", threads,
                    "worker threads (default: NLMD_THREADS or 1)");
    auto* s = sub->add_option("-s,--seed", seed, "override the config seed");
    auto* n = sub->add_option("--order-max", order_max,
                              "override the solver's maximum order");
    sub->callback([&, s, n, sub]() {
      opt.threads = threads;
      if (s->count()) opt.seed = seed;
      if (n->count()) opt.max_order = order_max;
      const int rc = nlmd::run_command(sub->get_name(), config_path, opt,
                                       std::cout, std::cerr);
      std::exit(rc);
    });
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
