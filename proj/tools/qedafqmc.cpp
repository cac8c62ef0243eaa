// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: `qedafqmc --fixture hubbard_dimer:1,4 --mode 1,5,0.1 --oracle`.

#include "qedafqmc/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using namespace qedafqmc;
  CLI::App app{"Phaseless auxiliary-field QMC for electrons coupled to cavity photons"};

  RunConfig flags;
  std::string config_path, analyze_path, scheme, constraint;
  bool no_dse = false, no_background = false;
  app.add_option("--fcidump", flags.fcidump_path, "FCIDUMP integral file");
  app.add_option("--cavity", flags.cavity_path, "cavity mode file");
  app.add_option("--fixture", flags.fixture, "built-in model, e.g. hubbard_dimer:1,4");
  app.add_option("--mode", flags.inline_modes, "extra mode omega,nmax,gdiag[,dnuc]; repeatable");
  app.add_option("--config", config_path, "key=value config file; flags override it");
  app.add_option("--seed", flags.seed);
  app.add_option("--walkers", flags.n_walkers);
  app.add_option("--dtau", flags.dtau);
  app.add_option("--total-time", flags.total_time);
  app.add_option("--estimator-stride", flags.estimator_stride);
  app.add_option("--sr-stride", flags.sr_stride);
  app.add_option("--orth-stride", flags.orth_stride);
  app.add_option("--scheme", scheme)->check(CLI::IsMember({"two", "three", "two_field", "three_field"}));
  app.add_option("--constraint", constraint)->check(CLI::IsMember({"free", "phaseless"}));
  app.add_flag("--no-dse", no_dse, "drop the dipole self-energy");
  app.add_flag("--no-background", no_background, "propagate the fields without mean-field subtraction");
  app.add_flag("--oracle", flags.oracle, "compare with dense diagonalization");
  app.add_option("--out-dir", flags.out_dir);
  app.add_option("--analyze", analyze_path, "recompute mean and error from a trace.csv and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!analyze_path.empty()) {
      std::ifstream in(analyze_path);
      if (!in) throw Error("cannot open " + analyze_path);
      RunConfig defaults;
      if (!config_path.empty()) apply_config_file(config_path, defaults);
      const auto est = autocorrelation_error(read_trace_csv(in), defaults.equilibration_fraction);
      std::printf("e_mean=%.17g\ne_error=%.17g\ntau_int=%.17g\nn_samples_used=%d\n", est.mean,
                  est.error, est.tau_int, est.n_used);
      return 0;
    }

    RunConfig config;
    if (!config_path.empty()) apply_config_file(config_path, config);
    auto given = [&](const char* name) { return app.count(name) > 0; };
    if (given("--fcidump")) config.fcidump_path = flags.fcidump_path;
    if (given("--fixture")) config.fixture = flags.fixture;
    if (given("--cavity")) config.cavity_path = flags.cavity_path;
    if (given("--mode")) config.inline_modes = flags.inline_modes;
    if (given("--seed")) config.seed = flags.seed;
    if (given("--walkers")) config.n_walkers = flags.n_walkers;
    if (given("--dtau")) config.dtau = flags.dtau;
    if (given("--total-time")) config.total_time = flags.total_time;
    if (given("--estimator-stride")) config.estimator_stride = flags.estimator_stride;
    if (given("--sr-stride")) config.sr_stride = flags.sr_stride;
    if (given("--orth-stride")) config.orth_stride = flags.orth_stride;
    if (given("--scheme")) config.scheme = parse_scheme(scheme);
    if (given("--constraint")) config.constraint = parse_constraint(constraint);
    if (no_dse) config.include_dse = false;
    if (no_background) config.background_subtraction = false;
    if (given("--oracle")) config.oracle = true;
    if (given("--out-dir")) config.out_dir = flags.out_dir;
    return run(config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
