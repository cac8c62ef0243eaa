// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file pf_hamiltonian.hpp
 * @brief Pauli-Fierz Hamiltonian in Monte Carlo form.
 *
 * Pipeline: the dipole self-energy is folded into the electronic
 * integrals (fold_dse), the modified two-electron tensor is factorized by
 * pivoted Cholesky (cholesky_decompose), and the bilinear electron-photon
 * term is written as a sum of squares of one-body fermion+boson operators
 * (assemble_mc_hamiltonian), giving
 *
 *     H = T + 1/2 sum_g L_g^2 + H_ph + C.
 *
 * Operator conventions: E_pq = sum_sigma c+_{p sigma} c_{q sigma},
 * F_a = sum_pq g^a_pq E_pq and B_a = sqrt(omega_a / 2) (a+_a + a_a).
 */

#pragma once

#include "qedafqmc/model_io.hpp"
#include "qedafqmc/types.hpp"

#include <string_view>
#include <vector>

namespace qedafqmc {

struct DSEModifiedIntegrals {
  int n_orb = 0;
  int n_alpha = 0;
  int n_beta = 0;
  Mat h_tilde;
  Eri v_tilde;
  Mat q_alpha_sum;  ///< sum_a Q^a, Q^a_pq = -sum_s g^a_ps g^a_sq
  double core_energy = 0.0;
};

/// h~ = h - 1/2 sum_a Q^a and (pq|rs)~ = (pq|rs) + sum_a g^a_pq g^a_rs.
/// With `include_dse == false` the bare integrals are passed through.
/// Nuclear projections must already be folded (see fold_nuclear_projection).
DSEModifiedIntegrals fold_dse(const IntegralSet& integrals, const CavitySpec& cavity,
                              bool include_dse = true);

struct CholeskyFactors {
  std::vector<Mat> vectors;  ///< each symmetric M x M, (pq|rs) ~ sum_g L_g[p,q] L_g[r,s]
  double tolerance = 0.0;

  int count() const noexcept { return static_cast<int>(vectors.size()); }
};

inline constexpr double kDefaultCholeskyTolerance = 1e-8;

/// Pivoted incomplete Cholesky of the (pq),(rs) supermatrix. Stops once the
/// largest residual diagonal is <= tolerance.
CholeskyFactors cholesky_decompose(const Eri& v, double tolerance = kDefaultCholeskyTolerance);

/// max_pqrs |V_pqrs - sum_g L_g[p,q] L_g[r,s]|
double cholesky_reconstruction_error(const Eri& v, const CholeskyFactors& chol);

enum class DecouplingScheme { two_field, three_field };

DecouplingScheme parse_scheme(std::string_view text);
std::string_view to_string(DecouplingScheme scheme);

/// Which square of the decoupling identity a mixed field represents.
enum class MixedRole {
  sum,         ///< (F + B)    two-field: scaled by 1/sqrt(2)
  difference,  ///< i (F - B)  two-field only, scaled by 1/sqrt(2)
  fermion,     ///< i F        three-field only
  boson,       ///< i B        three-field only
};

/// L = sum_pq fermion_part[p,q] E_pq + boson_scale (a+_m + a_m), m = boson_mode.
struct MixedFieldDescriptor {
  CMat fermion_part;
  int boson_mode = 0;
  cplx boson_scale{0.0, 0.0};
  DecouplingScheme source_scheme = DecouplingScheme::two_field;
  MixedRole role = MixedRole::sum;
  int field_sign = +1;  ///< +1 when L^2 enters with a positive sign, -1 for the i-scaled fields
};

struct MCHamiltonian {
  int n_orb = 0;
  int n_alpha = 0;
  int n_beta = 0;
  Mat t_eff;
  CholeskyFactors electronic_fields;
  std::vector<MixedFieldDescriptor> mixed_fields;
  std::vector<double> omegas;
  std::vector<Vec> photon_energies;  ///< omega_a (n + 1/2), n = 0..n_max
  double constant = 0.0;
  DecouplingScheme scheme = DecouplingScheme::two_field;

  int n_modes() const noexcept { return static_cast<int>(omegas.size()); }
  int n_fields() const noexcept {
    return electronic_fields.count() + static_cast<int>(mixed_fields.size());
  }
};

/// Modes whose coupling max-norm is below this emit no mixed fields.
inline constexpr double kMixedFieldPruneThreshold = 1e-14;

MCHamiltonian assemble_mc_hamiltonian(const DSEModifiedIntegrals& dse, const CholeskyFactors& chol,
                                      const CavitySpec& cavity, DecouplingScheme scheme);

/// Truncated (a+ + a), tridiagonal with sqrt(n) off the diagonal.
Mat position_operator(int n_max);

}  // namespace qedafqmc
