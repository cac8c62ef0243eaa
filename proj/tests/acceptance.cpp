// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include "support.hpp"

#include "qedafqmc/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace qedafqmc;
using namespace qedafqmc::testing;

namespace {

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

void operator_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int checked = 0;
  for (const auto& p : coupled_fixtures()) {
    const auto& ints = p.integrals;
    const auto space = FCISpace::build(ints.n_orb, ints.n_alpha, ints.n_beta, p.cavity);
    if (space.dim() > 4096) continue;
    const Mat reference = pf_hamiltonian_matrix_unfolded(space, ints, p.cavity);
    const auto cav = fold_nuclear_projection(p.cavity, ints.n_electrons());
    const auto dse = fold_dse(ints, cav);
    const auto chol = cholesky_decompose(dse.v_tilde, 1e-12);
    for (auto scheme : {DecouplingScheme::two_field, DecouplingScheme::three_field}) {
      const CMat mc = mc_hamiltonian_matrix(space, assemble_mc_hamiltonian(dse, chol, cav, scheme));
      worst = std::max(worst, (mc - reference.cast<cplx>()).cwiseAbs().maxCoeff());
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  report("operator_identity", worst <= 1e-9 && t < 10.0 && checked >= 10,
         fmt("%d fixture/scheme pairs, max |H_MC - H_PF| = %.3e (tol 1e-9), %.2f s", checked, worst, t));
}

void oracle_agreement() {
  RunConfig c;
  c.fixture = "hubbard_dimer:1,4";
  c.inline_modes = {"1,5,0.1"};
  c.oracle = true;
  const auto r = simulate(c);
  const double diff = std::abs(r.estimate.mean - *r.e_fci);
  const double sigma = r.estimate.error;
  report("oracle_agreement",
         sigma <= 1e-3 && diff <= 2.0 * sigma && r.wall_time_seconds <= 300.0,
         fmt("E = %.6f +- %.6f, E_FCI = %.6f, |dE| = %.2f sigma (need <= 2, sigma <= 1e-3), %.1f s",
             r.estimate.mean, sigma, *r.e_fci, diff / sigma, r.wall_time_seconds));
}

void zero_coupling_factorization() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig bare;
  bare.fixture = "hubbard_dimer:1,4";
  bare.total_time = 5.0;
  RunConfig qed = bare;
  qed.inline_modes = {"1,5,0", "2.5,3,0"};
  const double zpe = 0.5 * (1.0 + 2.5);
  const auto a = simulate(bare);
  const auto b = simulate(qed);
  bool same_shape = a.rows.size() == b.rows.size() && !a.rows.empty();
  double worst = 0.0;
  long identical = 0;
  for (std::size_t i = 0; same_shape && i < a.rows.size(); ++i) {
    const cplx d = b.rows[i].e_mixed - (a.rows[i].e_mixed + zpe);
    worst = std::max(worst, std::abs(d));
    if (d == cplx(0.0, 0.0)) ++identical;
  }
  const double t = seconds_since(t0);
  report("zero_coupling_factorization", same_shape && worst <= 1e-12 && t < 60.0,
         fmt("%zu samples, max |E_qed - E_bare - sum(omega)/2| = %.3e, %ld bit-identical, %.1f s",
             a.rows.size(), worst, identical, t));
}

void displaced_oscillator() {
  // one doubly occupied level cannot respond, so the mode sees a fixed dipole
  // 2 g = 0.2 and, without the self-energy term, shifts by -(0.2)^2 / 2
  auto fx = build_fixture("single_level", std::vector<double>{-1.0, 0.5});
  CavitySpec coupled, uncoupled;
  coupled.modes.push_back(make_diagonal_mode(1, 1.0, 8, 0.1));
  uncoupled.modes.push_back(make_diagonal_mode(1, 1.0, 8, 0.0));
  const double e_coupled = fci_ground_state(fold_dse(fx.integrals, coupled, false), coupled).energy;
  const double e_free = fci_ground_state(fold_dse(fx.integrals, uncoupled, false), uncoupled).energy;
  const double shift = e_coupled - e_free;

  // judged on free projection, which is exact in expectation; the phaseless
  // figure is reported alongside
  RunConfig c;
  c.fixture = "single_level:-1,0.5";
  c.inline_modes = {"1,8,0.1"};
  c.include_dse = false;
  c.oracle = true;
  c.constraint = Constraint::free;
  const auto r = simulate(c);
  c.constraint = Constraint::phaseless;
  const auto pl = simulate(c);
  auto sigmas = [](const RunResult& x) {
    return x.estimate.error > 0 ? std::abs(x.estimate.mean - *x.e_fci) / x.estimate.error : 0.0;
  };
  const bool qmc_ok = std::abs(r.estimate.mean - *r.e_fci) <= 2.0 * r.estimate.error;
  report("displaced_oscillator", std::abs(shift + 0.02) <= 1e-7 && qmc_ok,
         fmt("FCI shift = %.9f (target -0.02, tol 1e-7); free AFQMC %.6f +- %.6f vs FCI %.6f "
             "(%.2f sigma); phaseless %.6f +- %.6f (%.2f sigma)",
             shift, r.estimate.mean, r.estimate.error, *r.e_fci, sigmas(r), pl.estimate.mean,
             pl.estimate.error, sigmas(pl)));
}

void trotter_order() {
  auto fx = build_fixture("single_level", std::vector<double>{-1.0, 0.5});
  CavitySpec cav;
  cav.modes.push_back(make_diagonal_mode(1, 1.0, 4, 0.1));
  const auto dse = fold_dse(fx.integrals, cav);
  const auto chol = cholesky_decompose(dse.v_tilde);
  const auto mc = assemble_mc_hamiltonian(dse, chol, cav, DecouplingScheme::two_field);
  const auto trial = build_trial(dse, cav);
  const auto space = FCISpace::build(1, 1, 1, cav);
  const double e_exact = fci_ground_state(dse, cav).energy;

  std::vector<double> steps{0.02, 0.01, 0.005}, bias;
  for (double dt : steps) {
    const auto prop = build_propagator(mc, dt);
    const CMat p = averaged_step_matrix(space, prop, trial);
    const Eigen::ComplexEigenSolver<CMat> es(p);
    double lead = 0.0;
    for (const auto& v : es.eigenvalues()) lead = std::max(lead, std::abs(v));
    bias.push_back(std::abs(-std::log(lead) / dt - e_exact));
  }
  // least-squares slope of log bias against log dtau
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double lx = std::log(steps[i]), ly = std::log(bias[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double n = static_cast<double>(steps.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  report("trotter_order", std::abs(slope - 2.0) <= 0.3,
         fmt("bias %.3e / %.3e / %.3e at dtau 0.02 / 0.01 / 0.005, slope %.3f (target 2 +- 0.3)",
             bias[0], bias[1], bias[2], slope));
}

void cholesky() {
  // full-rank tensor with a geometric spectrum, so each tolerance truncates differently
  std::mt19937_64 gen(7);
  Eri v(4);
  for (int k = 0; k < 10; ++k) {
    const Mat a = random_symmetric(4, gen, std::pow(10.0, -0.6 * k));
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q)
        for (int r = 0; r < 4; ++r)
          for (int s = 0; s < 4; ++s) v(p, q, r, s) += a(p, q) * a(r, s);
  }
  bool ok = true;
  std::string detail;
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    const auto f = cholesky_decompose(v, tol);
    const double err = cholesky_reconstruction_error(v, f);
    ok = ok && err <= tol;
    detail += fmt("tol %.0e: err %.2e with %d vectors; ", tol, err, f.count());
  }
  const auto dimer = build_fixture("hubbard_dimer", std::vector<double>{1.0, 4.0});
  const auto f = cholesky_decompose(dimer.integrals.eri);
  bool single_entries = f.count() == 2;
  for (const auto& l : f.vectors)
    single_entries = single_entries && (l.cwiseAbs().array() > 1e-14).count() == 1 &&
                     std::abs(l.cwiseAbs().maxCoeff() - 2.0) <= 1e-12;
  detail += fmt("hubbard dimer: %d vectors", f.count());
  report("cholesky", ok && single_entries, detail);
}

void scheme_equivalence() {
  bool ok = true;
  std::string detail;
  for (const char* fixture : {"single_level:-1,0.5", "hubbard_dimer:1,4"}) {
    RunConfig c;
    c.fixture = fixture;
    c.inline_modes = {"1,5,0.1"};
    c.scheme = DecouplingScheme::two_field;
    const auto two = simulate(c);
    c.scheme = DecouplingScheme::three_field;
    const auto three = simulate(c);
    const double sigma = std::hypot(two.estimate.error, three.estimate.error);
    const double diff = std::abs(two.estimate.mean - three.estimate.mean);
    ok = ok && diff <= 2.0 * sigma;
    detail += fmt("%s: %.6f +- %.6f vs %.6f +- %.6f (%.2f sigma); ", fixture, two.estimate.mean,
                  two.estimate.error, three.estimate.mean, three.estimate.error,
                  sigma > 0 ? diff / sigma : 0.0);
  }
  report("scheme_equivalence", ok, detail);
}

void truncation_convergence() {
  bool ok = true;
  std::string detail;
  for (const auto& p : coupled_fixtures()) {
    std::vector<double> energies;
    for (int nmax : {1, 2, 3, 5, 8}) {
      CavitySpec cav = p.cavity;
      for (auto& m : cav.modes) m.n_max = nmax;
      const auto folded = fold_nuclear_projection(cav, p.integrals.n_electrons());
      energies.push_back(fci_ground_state(fold_dse(p.integrals, folded), folded).energy);
    }
    for (std::size_t i = 1; i < energies.size(); ++i) ok = ok && energies[i] <= energies[i - 1] + 1e-12;
    detail += fmt("%s %.8f -> %.8f; ", p.name.c_str(), energies.front(), energies.back());
  }
  report("truncation_convergence", ok, detail);
}

void statistics() {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  std::vector<double> iid(10000);
  for (auto& x : iid) x = nd(gen);
  const auto e_iid = autocorrelation_error(iid);
  const double iid_ratio = e_iid.error / (1.0 / std::sqrt(10000.0));

  const int n = 200000;
  const double rho = 0.8;
  std::vector<double> ar(n);
  double x = nd(gen) / std::sqrt(1.0 - rho * rho);
  for (auto& v : ar) v = x = rho * x + nd(gen);
  const auto e_ar = autocorrelation_error(ar);
  double mean = 0.0, var = 0.0;
  for (double v : ar) mean += v;
  mean /= n;
  for (double v : ar) var += (v - mean) * (v - mean);
  var /= n - 1;
  const double inflation = e_ar.error / std::sqrt(var / n);
  report("statistics", std::abs(iid_ratio - 1.0) <= 0.2 && std::abs(inflation / 3.0 - 1.0) <= 0.25,
         fmt("iid error / (1/sqrt N) = %.3f (within 20%%); AR(1) inflation = %.3f (target 3 within 25%%)",
             iid_ratio, inflation));
}

}  // namespace

int main() {
  guarded("operator_identity", operator_identity);
  guarded("oracle_agreement", oracle_agreement);
  guarded("zero_coupling_factorization", zero_coupling_factorization);
  guarded("displaced_oscillator", displaced_oscillator);
  guarded("trotter_order", trotter_order);
  guarded("cholesky", cholesky);
  guarded("scheme_equivalence", scheme_equivalence);
  guarded("truncation_convergence", truncation_convergence);
  guarded("statistics", statistics);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
