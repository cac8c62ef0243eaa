// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "qedafqmc/runner.hpp"

#include "qedafqmc/exact_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qedafqmc {

namespace {

// Stream id of the resampling comb, outside the range of walker slots.
constexpr std::uint64_t kResampleStream = ~std::uint64_t{0};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error(what + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("'" + v + "' is not a boolean");
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

long total_steps(const RunConfig& c) { return std::lround(c.total_time / c.dtau); }

void apply_config_text(std::istream& in, RunConfig& c) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "fcidump") c.fcidump_path = val;
      else if (key == "fixture") c.fixture = val;
      else if (key == "cavity") c.cavity_path = val;
      else if (key == "mode") c.inline_modes.push_back(val);
      else if (key == "dtau") c.dtau = std::stod(val);
      else if (key == "total_time") c.total_time = std::stod(val);
      else if (key == "walkers" || key == "n_walkers") c.n_walkers = std::stoi(val);
      else if (key == "estimator_stride") c.estimator_stride = std::stoi(val);
      else if (key == "sr_stride") c.sr_stride = std::stoi(val);
      else if (key == "orth_stride") c.orth_stride = std::stoi(val);
      else if (key == "scheme") c.scheme = parse_scheme(val);
      else if (key == "constraint") c.constraint = parse_constraint(val);
      else if (key == "include_dse") c.include_dse = parse_bool(val);
      else if (key == "background_subtraction") c.background_subtraction = parse_bool(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "oracle") c.oracle = parse_bool(val);
      else if (key == "equilibration_fraction") c.equilibration_fraction = std::stod(val);
      else if (key == "cholesky_tolerance") c.cholesky_tolerance = std::stod(val);
      else if (key == "bias_cap") c.bias_cap = std::stod(val);
      else if (key == "oracle_limit") c.oracle_limit = std::stol(val);
      else if (key == "out_dir") c.out_dir = val;
      else throw Error("unknown key '" + key + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(lineno, key + ": " + e.what());
    }
  }
}

void apply_config_file(const std::filesystem::path& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  apply_config_text(in, c);
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> diag;
  if (!(c.dtau > 0.0)) diag.emplace_back("dtau must be positive");
  if (!(c.total_time > 0.0)) diag.emplace_back("total_time must be positive");
  if (c.n_walkers <= 0) diag.emplace_back("walkers must be positive");
  if (!(c.equilibration_fraction >= 0.0 && c.equilibration_fraction < 1.0))
    diag.emplace_back("equilibration_fraction must be in [0, 1)");
  if (!(c.cholesky_tolerance > 0.0)) diag.emplace_back("cholesky_tolerance must be positive");
  if (!(c.bias_cap > 0.0)) diag.emplace_back("bias_cap must be positive");

  const std::pair<const char*, int> strides[] = {{"estimator_stride", c.estimator_stride},
                                                 {"sr_stride", c.sr_stride},
                                                 {"orth_stride", c.orth_stride}};
  for (const auto& [name, value] : strides)
    if (value <= 0) diag.push_back(std::string(name) + " must be positive");
  if (c.dtau > 0.0 && c.total_time > 0.0) {
    const long steps = total_steps(c);
    if (steps <= 0) diag.emplace_back("total_time / dtau rounds to zero steps");
    else if (std::abs(c.total_time / c.dtau - static_cast<double>(steps)) > 1e-6)
      diag.push_back("total_time " + fmt(c.total_time) + " is not a multiple of dtau " + fmt(c.dtau));
    for (const auto& [name, value] : strides)
      if (value > 0 && steps > 0 && steps % value != 0)
        diag.push_back(std::string(name) + " " + std::to_string(value) + " does not divide " +
                       std::to_string(steps) + " total steps");
  }

  const bool has_fcidump = !c.fcidump_path.empty();
  const bool has_fixture = !c.fixture.empty();
  if (has_fcidump == has_fixture) diag.emplace_back("exactly one of fcidump or fixture is required");
  if (has_fcidump && !std::filesystem::exists(c.fcidump_path))
    diag.push_back("fcidump file not found: " + c.fcidump_path);
  if (!c.cavity_path.empty() && !std::filesystem::exists(c.cavity_path))
    diag.push_back("cavity file not found: " + c.cavity_path);

  if (diag.empty()) {
    try {
      const auto p = load_problem(c);
      check_compatible(p.integrals, p.cavity);
      if (c.oracle) {
        double dim = 1.0;
        for (const auto& s : {enumerate_strings(p.integrals.n_orb, p.integrals.n_alpha).size(),
                              enumerate_strings(p.integrals.n_orb, p.integrals.n_beta).size()})
          dim *= static_cast<double>(s);
        for (const auto& m : p.cavity.modes) dim *= m.fock_dim();
        if (dim > static_cast<double>(c.oracle_limit))
          diag.push_back("oracle dimension " + fmt(dim) + " exceeds the dense limit " +
                         std::to_string(c.oracle_limit));
      }
    } catch (const std::exception& e) {
      diag.push_back(std::string("input: ") + e.what());
    }
  }
  return diag;
}

Problem load_problem(const RunConfig& c) {
  Problem p;
  if (!c.fcidump_path.empty()) {
    p.integrals = read_fcidump(c.fcidump_path);
  } else {
    const auto colon = c.fixture.find(':');
    const std::string name = c.fixture.substr(0, colon);
    const auto params =
        colon == std::string::npos ? std::vector<double>{} : parse_reals(c.fixture.substr(colon + 1), "fixture");
    auto fx = build_fixture(name, params);
    p.integrals = std::move(fx.integrals);
    p.cavity = std::move(fx.cavity);
  }
  if (!c.cavity_path.empty()) p.cavity = read_cavity(c.cavity_path);
  for (const auto& text : c.inline_modes) {
    const auto v = parse_reals(text, "mode");
    if (v.size() < 3 || v.size() > 4) throw Error("mode: expected omega,nmax,gdiag[,dnuc]");
    if (v[1] != std::floor(v[1]) || v[1] < 0) throw Error("mode: nmax must be a non-negative integer");
    p.cavity.modes.push_back(make_diagonal_mode(p.integrals.n_orb, v[0], static_cast<int>(v[1]), v[2],
                                                v.size() == 4 ? v[3] : 0.0));
  }
  return p;
}

RunResult simulate(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  if (const auto diag = validate_config(c); !diag.empty()) throw Error("config: " + diag.front());

  const Problem problem = stage("input", [&] { return load_problem(c); });
  const auto ne = problem.integrals.n_electrons();
  const CavitySpec cav = stage("input", [&] {
    problem.integrals.validate(true);
    check_compatible(problem.integrals, problem.cavity);
    return fold_nuclear_projection(problem.cavity, ne);
  });
  const auto dse = stage("fold_dse", [&] { return fold_dse(problem.integrals, cav, c.include_dse); });
  const auto chol = stage("cholesky", [&] { return cholesky_decompose(dse.v_tilde, c.cholesky_tolerance); });
  const auto mc = stage("assemble", [&] { return assemble_mc_hamiltonian(dse, chol, cav, c.scheme); });
  const auto trial = stage("trial", [&] { return build_trial(dse, cav); });

  RunResult result;
  result.trial_energy =
      stage("trial", [&] { return local_energy(make_walker(trial), trial, dse, chol, cav).total.real(); });
  const auto prop = stage("propagator", [&] {
    return build_propagator(mc, c.dtau, result.trial_energy, c.bias_cap,
                            c.background_subtraction ? &trial : nullptr);
  });

  const long steps = total_steps(c);
  const int n = c.n_walkers;
  std::vector<Walker> walkers(n, make_walker(trial));
  std::vector<cplx> e_local(n);
  result.trace.stride = c.estimator_stride;

  stage("propagate", [&] {
    for (long step = 1; step <= steps; ++step) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        RngStream rng(c.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(step));
        propagate_step(walkers[i], prop, trial, rng, c.constraint);
        if (step % c.orth_stride == 0) reorthogonalize(walkers[i]);
      }

      if (step % c.estimator_stride == 0) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
          e_local[i] = 0.0;
          if (!walkers[i].alive()) continue;
          try {
            e_local[i] = local_energy(walkers[i], trial, dse, chol, cav).total;
          } catch (const Error&) {
            walkers[i].kill();
          }
          if (!std::isfinite(e_local[i].real()) || !std::isfinite(e_local[i].imag())) {
            walkers[i].kill();
            e_local[i] = 0.0;
          }
        }
        TraceRow row;
        row.step = step;
        row.tau = static_cast<double>(step) * c.dtau;
        cplx den{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
          if (!walkers[i].alive()) continue;
          const cplx w = walkers[i].complex_weight();
          row.numerator += w * e_local[i];
          den += w;
          row.total_weight += walkers[i].weight;
          ++row.n_alive;
        }
        row.denominator = den.real();
        if (!(row.denominator > 0.0)) throw Error("population collapse at step " + std::to_string(step));
        row.e_mixed = row.numerator / row.denominator;
        result.rows.push_back(row);
        result.trace.samples.push_back({static_cast<int>(step), row.tau, row.numerator, row.denominator});
      }

      if (step % c.sr_stride == 0) {
        RngStream rng(c.seed, kResampleStream, static_cast<std::uint64_t>(step));
        walkers = stochastic_reconfiguration(walkers, rng);
      }
    }
    return 0;
  });

  result.estimate =
      stage("statistics", [&] { return autocorrelation_error(result.trace, c.equilibration_fraction); });

  if (c.oracle) {
    result.e_fci = stage("oracle", [&] { return fci_ground_state(dse, cav, c.oracle_limit).energy; });
    const double diff = std::abs(result.estimate.mean - *result.e_fci);
    result.sigma_distance = result.estimate.error > 0.0
                                ? diff / result.estimate.error
                                : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  }
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "step,tau,e_numerator_re,e_numerator_im,weight_denominator,e_mixed_re,e_mixed_im,"
         "total_weight,n_alive\n";
  for (const auto& r : rows)
    out << r.step << ',' << fmt(r.tau) << ',' << fmt(r.numerator.real()) << ','
        << fmt(r.numerator.imag()) << ',' << fmt(r.denominator) << ',' << fmt(r.e_mixed.real())
        << ',' << fmt(r.e_mixed.imag()) << ',' << fmt(r.total_weight) << ',' << r.n_alive << '\n';
}

EnergyTrace read_trace_csv(std::istream& in, int stride) {
  EnergyTrace trace;
  trace.stride = stride;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || trim(line).empty()) continue;
    const auto v = parse_reals(line, "trace line " + std::to_string(lineno));
    if (v.size() != 9) throw ParseError(lineno, "expected 9 columns");
    trace.samples.push_back({static_cast<int>(v[0]), v[1], cplx(v[2], v[3]), v[4]});
  }
  return trace;
}

void write_summary(std::ostream& out, const RunConfig& c, const RunResult& r) {
  out << "e_mean=" << fmt(r.estimate.mean) << '\n'
      << "e_error=" << fmt(r.estimate.error) << '\n'
      << "tau_int=" << fmt(r.estimate.tau_int) << '\n'
      << "n_samples_used=" << r.estimate.n_used << '\n';
  if (r.e_fci) out << "e_fci=" << fmt(*r.e_fci) << '\n';
  if (r.sigma_distance) out << "sigma_distance=" << fmt(*r.sigma_distance) << '\n';
  out << "wall_time_seconds=" << fmt(r.wall_time_seconds) << '\n'
      << "seed=" << c.seed << '\n'
      << "scheme=" << to_string(c.scheme) << '\n'
      << "constraint=" << to_string(c.constraint) << '\n';
}

int run(const RunConfig& c, std::ostream& log) {
  const auto diag = validate_config(c);
  if (!diag.empty()) {
    for (const auto& d : diag) log << "config: " << d << '\n';
    return 2;
  }
  try {
    const auto result = simulate(c);
    std::filesystem::create_directories(c.out_dir);
    const auto dir = std::filesystem::path(c.out_dir);
    std::ofstream trace(dir / "trace.csv");
    write_trace_csv(trace, result.rows);
    std::ofstream summary(dir / "summary.txt");
    write_summary(summary, c, result);
    if (!trace || !summary) throw Error("output: cannot write to " + c.out_dir);
    write_summary(log, c, result);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace qedafqmc
