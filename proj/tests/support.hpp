// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the unit tests and the acceptance binary.

#pragma once

#include "qedafqmc/estimators.hpp"
#include "qedafqmc/exact_oracle.hpp"
#include "qedafqmc/model_io.hpp"
#include "qedafqmc/pf_hamiltonian.hpp"
#include "qedafqmc/walker_engine.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace qedafqmc::testing {

struct NamedProblem {
  std::string name;
  IntegralSet integrals;
  CavitySpec cavity;  ///< raw, nuclear projection not folded
};

inline Mat random_symmetric(int m, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = nd(gen);
  return a;
}

/// Positive semi-definite ERI built as sum_k A_k (x) A_k with symmetric A_k.
inline Eri random_eri(int m, int rank, std::mt19937_64& gen, double scale = 0.3) {
  Eri v(m);
  for (int k = 0; k < rank; ++k) {
    const Mat a = random_symmetric(m, gen, scale);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q)
        for (int r = 0; r < m; ++r)
          for (int s = 0; s < m; ++s) v(p, q, r, s) += a(p, q) * a(r, s);
  }
  return v;
}

inline IntegralSet random_integrals(int m, int na, int nb, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  IntegralSet ints;
  ints.n_orb = m;
  ints.n_alpha = na;
  ints.n_beta = nb;
  ints.oei = random_symmetric(m, gen, 0.5);
  ints.eri = random_eri(m, m, gen);
  ints.core_energy = 0.7;
  return ints;
}

inline ModeSpec random_mode(int m, double omega, int n_max, double scale, double dnuc,
                            std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  ModeSpec mode;
  mode.omega = omega;
  mode.n_max = n_max;
  mode.coupling = random_symmetric(m, gen, scale);
  mode.nuclear_projection = dnuc;
  return mode;
}

inline NamedProblem fixture_problem(const std::string& name, std::vector<double> params,
                                    std::vector<ModeSpec> modes) {
  auto fx = build_fixture(name, params);
  NamedProblem p{name, std::move(fx.integrals), std::move(fx.cavity)};
  for (auto& m : modes) p.cavity.modes.push_back(std::move(m));
  return p;
}

/// Coupled fixtures small enough for dense checks (dimension <= 4096).
inline std::vector<NamedProblem> coupled_fixtures() {
  std::vector<NamedProblem> out;
  out.push_back(fixture_problem("single_level", {-1.0, 0.5}, {make_diagonal_mode(1, 1.0, 4, 0.1)}));
  out.push_back(fixture_problem("hubbard_dimer", {1.0, 4.0}, {make_diagonal_mode(2, 1.0, 5, 0.1)}));
  {
    auto p = fixture_problem("hubbard_dimer", {1.0, 2.0, 3.0}, {});
    p.cavity.modes.push_back(random_mode(2, 0.8, 4, 0.2, 0.3, 11));
    p.cavity.modes.push_back(random_mode(2, 1.7, 3, 0.1, -0.2, 12));
    p.name = "hubbard_dimer_3e_two_modes";
    out.push_back(std::move(p));
  }
  {
    NamedProblem p{"random_m3", random_integrals(3, 2, 1, 5), {}};
    p.cavity.modes.push_back(random_mode(3, 1.2, 4, 0.15, 0.4, 21));
    p.cavity.modes.push_back(random_mode(3, 0.6, 3, 0.1, 0.0, 22));
    out.push_back(std::move(p));
  }
  {
    NamedProblem p{"random_m4", random_integrals(4, 2, 2, 6), {}};
    p.cavity.modes.push_back(random_mode(4, 1.0, 5, 0.1, 0.1, 31));
    out.push_back(std::move(p));
  }
  return out;
}

/// Probabilists' Gauss-Hermite rule (weight e^{-x^2/2}/sqrt(2 pi)) by Golub-Welsch.
inline std::pair<Vec, Vec> gauss_hermite(int n) {
  Mat j = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(static_cast<double>(k));
  const Eigen::SelfAdjointEigenSolver<Mat> es(j);
  return {es.eigenvalues(), es.eigenvectors().row(0).transpose().array().square()};
}

/// Expectation over the Gaussian fields of one step of the walker propagator,
/// materialized on a one-orbital space where every state is a walker (the
/// electronic sector is a single determinant). Joint tensor-product quadrature
/// over all fields, since the step exponentiates their sum.
inline CMat averaged_step_matrix(const FCISpace& space, const Propagator& prop,
                                 const TrialState& trial, int nodes = 20) {
  const auto [x, w] = gauss_hermite(nodes);
  const long dim = space.dim();
  const int nf = prop.n_fields();
  auto walker_for = [&](const CVec& photon) {
    Walker walker = make_walker(trial);
    walker.photon_vectors[0] = photon;
    return walker;
  };
  long combos = 1;
  for (int k = 0; k < nf; ++k) combos *= nodes;

  CMat out(dim, dim);
  for (long col = 0; col < dim; ++col) {
    Walker start = walker_for(CVec::Unit(dim, col));
    apply_half_step(start, prop);
    CVec acc = CVec::Zero(dim);
    std::vector<cplx> field(nf);
    for (long c = 0; c < combos; ++c) {
      double weight = 1.0;
      long rest = c;
      for (int k = 0; k < nf; ++k) {
        field[k] = x(rest % nodes);
        weight *= w(rest % nodes);
        rest /= nodes;
      }
      Walker walker = start;
      apply_field_exponential(walker, prop, field);
      acc += weight * dense_state(space, walker);
    }
    Walker end = walker_for(acc);
    apply_half_step(end, prop);
    out.col(col) = dense_state(space, end) * prop.constant_factor;
  }
  return out;
}

}  // namespace qedafqmc::testing
