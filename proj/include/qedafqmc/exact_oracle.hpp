// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file exact_oracle.hpp
 * @brief Reference solutions for small systems: Hartree-Fock on the
 *        DSE-modified integrals and dense diagonalization on the full
 *        electron x photon product space.
 *
 * Basis ordering of the product space: alpha string index major, then beta
 * string index, then photon occupations with mode 0 most significant.
 * Strings are bit-encoded occupations enumerated in ascending integer order.
 * Basis determinants are c+_{a1}...c+_{aN} c+_{b1}...c+_{bN}|0> with
 * ascending orbital indices inside each spin block.
 */

#pragma once

#include "qedafqmc/model_io.hpp"
#include "qedafqmc/pf_hamiltonian.hpp"
#include "qedafqmc/walker_engine.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qedafqmc {

struct ScfOptions {
  double convergence = 1e-8;  ///< max |FP - PF|
  int max_iterations = 1000;  ///< per attempt
  int diis_history = 8;
};

struct HartreeFockResult {
  double energy = 0.0;  ///< includes the core energy
  Mat orbitals_alpha;   ///< all M orbitals, occupied first, each block ascending
  Mat orbitals_beta;
  Vec energies_alpha;
  Vec energies_beta;
  int iterations = 0;
  bool restricted = true;

  const Mat& orbitals() const { return orbitals_alpha; }
};

/// Restricted closed-shell SCF with DIIS when n_alpha == n_beta; open-shell
/// inputs are solved with independent alpha and beta orbitals.
/// Throws Error when not converged.
HartreeFockResult restricted_hartree_fock(const DSEModifiedIntegrals& dse, int n_alpha, int n_beta,
                                          const ScfOptions& options = {});

inline constexpr long kDefaultDenseLimit = 20000;

struct FCISpace {
  int n_orb = 0;
  int n_alpha = 0;
  int n_beta = 0;
  std::vector<std::uint64_t> alpha_strings;
  std::vector<std::uint64_t> beta_strings;
  std::vector<int> photon_dims;

  long dim_electronic() const {
    return static_cast<long>(alpha_strings.size()) * static_cast<long>(beta_strings.size());
  }
  long dim_photon() const;
  long dim() const { return dim_electronic() * dim_photon(); }
  long photon_stride(int mode) const;

  /// Throws Error if the total dimension exceeds `limit`.
  static FCISpace build(int n_orb, int n_alpha, int n_beta, const CavitySpec& cavity,
                        long limit = kDefaultDenseLimit);
};

/// Occupation strings of `n` electrons in `m` orbitals, ascending.
std::vector<std::uint64_t> enumerate_strings(int m, int n);

/// Dense Pauli-Fierz Hamiltonian from DSE-modified integrals: electronic
/// part via second-quantized action on determinants, plus photons and the
/// bilinear coupling.
Mat pf_hamiltonian_matrix(const FCISpace& space, const DSEModifiedIntegrals& dse,
                          const CavitySpec& cavity);

/// Dense Pauli-Fierz Hamiltonian with the dipole self-energy kept as the
/// explicit operator 1/2 sum_a F_a^2 on bare integrals.
Mat pf_hamiltonian_matrix_unfolded(const FCISpace& space, const IntegralSet& integrals,
                                   const CavitySpec& cavity);

/// Dense operators of the Monte Carlo form on the product space.
struct DenseMCOperators {
  CMat one_body;             ///< T
  CMat photon;               ///< H_ph
  std::vector<CMat> fields;  ///< L_g, same order as the propagator
  double constant = 0.0;
};

DenseMCOperators mc_operators_dense(const FCISpace& space, const MCHamiltonian& mc);

/// T + 1/2 sum_g L_g^2 + H_ph + C, squares formed in the factor spaces.
CMat mc_hamiltonian_matrix(const FCISpace& space, const MCHamiltonian& mc);

struct FCIResult {
  double energy = 0.0;
  Vec state;
  FCISpace space;
};

FCIResult fci_ground_state(const DSEModifiedIntegrals& dse, const CavitySpec& cavity,
                           long limit = kDefaultDenseLimit);

/// Expands a product state into the dense basis.
CVec dense_state(const FCISpace& space, const CMat& slater_alpha, const CMat& slater_beta,
                 std::span<const CVec> photon_vectors);
CVec dense_state(const FCISpace& space, const Walker& walker);
CVec dense_state(const FCISpace& space, const TrialState& trial);

struct ImaginaryTimeCurve {
  std::vector<double> energies;
  double ground_overlap = 0.0;  ///< |<Psi_T|Psi_0>| / |Psi_T|
  bool small_overlap = false;   ///< ground_overlap < 1e-8
};

/// E(tau) = <Psi_T|H e^{-tau H}|Psi_T> / <Psi_T|e^{-tau H}|Psi_T>.
/// Throws Error when the trial is orthogonal to the ground state.
ImaginaryTimeCurve exact_imaginary_time_curve(const DSEModifiedIntegrals& dse,
                                              const CavitySpec& cavity, const TrialState& trial,
                                              std::span<const double> taus,
                                              long limit = kDefaultDenseLimit);

}  // namespace qedafqmc
