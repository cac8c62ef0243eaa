// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file runner.hpp
 * @brief End-to-end runs: configuration, the step loop, trace and summary.
 *
 * Config files are flat `key = value` lines (`#` starts a comment). Keys
 * match the RunConfig field names; `mode` may be repeated and takes
 * `omega,nmax,gdiag[,dnuc]`.
 */

#pragma once

#include "qedafqmc/estimators.hpp"
#include "qedafqmc/exact_oracle.hpp"
#include "qedafqmc/model_io.hpp"
#include "qedafqmc/pf_hamiltonian.hpp"
#include "qedafqmc/walker_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qedafqmc {

struct RunConfig {
  std::string fcidump_path;
  std::string fixture;  ///< "name:p1,p2,..." as an alternative to fcidump_path
  std::string cavity_path;
  std::vector<std::string> inline_modes;  ///< "omega,nmax,gdiag[,dnuc]", appended to the cavity

  double dtau = 0.005;
  double total_time = 20.0;
  int n_walkers = 256;
  int estimator_stride = 10;
  int sr_stride = 10;
  int orth_stride = kDefaultOrthStride;
  DecouplingScheme scheme = DecouplingScheme::two_field;
  Constraint constraint = Constraint::phaseless;
  bool include_dse = true;
  bool background_subtraction = true;  ///< propagate L_g - <L_g>_T
  std::uint64_t seed = 12345;
  bool oracle = false;
  double equilibration_fraction = 0.25;
  double cholesky_tolerance = kDefaultCholeskyTolerance;
  double bias_cap = kDefaultBiasCap;
  long oracle_limit = kDefaultDenseLimit;
  std::string out_dir = ".";
};

/// round(total_time / dtau)
long total_steps(const RunConfig& config);

/// Applies `key = value` lines to `config`. Throws ParseError on unknown
/// keys or malformed values.
void apply_config_text(std::istream& in, RunConfig& config);
void apply_config_file(const std::filesystem::path& path, RunConfig& config);

/// Human-readable violations; empty when the config can run.
std::vector<std::string> validate_config(const RunConfig& config);

struct Problem {
  IntegralSet integrals;
  CavitySpec cavity;  ///< as given, nuclear projections not yet folded
};

Problem load_problem(const RunConfig& config);

struct TraceRow {
  long step = 0;
  double tau = 0.0;
  cplx numerator{0.0, 0.0};
  double denominator = 0.0;
  cplx e_mixed{0.0, 0.0};
  double total_weight = 0.0;
  int n_alive = 0;
};

struct RunResult {
  std::vector<TraceRow> rows;
  EnergyTrace trace;
  ErrorEstimate estimate;
  double trial_energy = 0.0;
  std::optional<double> e_fci;
  std::optional<double> sigma_distance;
  double wall_time_seconds = 0.0;
};

/// Runs the full pipeline in memory. Errors carry the failing stage as a
/// prefix, e.g. "cholesky: ...".
RunResult simulate(const RunConfig& config);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
EnergyTrace read_trace_csv(std::istream& in, int stride = 1);
void write_summary(std::ostream& out, const RunConfig& config, const RunResult& result);

/// simulate() plus trace.csv and summary.txt in config.out_dir. Returns the
/// process exit status; diagnostics and errors go to `log`.
int run(const RunConfig& config, std::ostream& log);

}  // namespace qedafqmc
