// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file model_io.hpp
 * @brief Electronic integrals, cavity modes, their text formats and the
 *        built-in model fixtures.
 *
 * Electronic integrals are read from FCIDUMP files (chemists' notation,
 * 1-based indices). Cavity modes use a small line format:
 *
 *     # comment
 *     NMODES <k> NORB <m>
 *     MODE omega=<real> nmax=<int> dnuc=<real>
 *     <p> <q> <g_pq>          (1-based, one triangle is enough)
 *     ...
 *
 * The coupling matrix g^a_pq of a mode already contains the coupling
 * strength and the polarization projection of the electronic dipole
 * integrals; `dnuc` is the matching projection of the nuclear dipole.
 */

#pragma once

#include "qedafqmc/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qedafqmc {

struct IntegralSet {
  int n_orb = 0;
  int n_alpha = 0;
  int n_beta = 0;
  double core_energy = 0.0;
  Mat oei;  ///< h_pq
  Eri eri;  ///< (pq|rs)
  bool basis_is_orthonormal = true;

  int n_electrons() const noexcept { return n_alpha + n_beta; }

  /// Throws Error when shapes or symmetries are broken. Systems without
  /// electrons are only accepted with `allow_empty`.
  void validate(bool allow_empty = false) const;
};

struct ModeSpec {
  double omega = 1.0;
  Mat coupling;  ///< g_pq, symmetric
  double nuclear_projection = 0.0;
  int n_max = 5;

  int fock_dim() const noexcept { return n_max + 1; }
};

struct CavitySpec {
  std::vector<ModeSpec> modes;
  int n_orb = 0;  ///< declared orbital count, 0 when not declared

  int n_modes() const noexcept { return static_cast<int>(modes.size()); }
  double zero_point_energy() const;
};

IntegralSet parse_fcidump(std::istream& in);
IntegralSet read_fcidump(const std::filesystem::path& path);
void write_fcidump(std::ostream& out, const IntegralSet& integrals);

CavitySpec parse_cavity(std::istream& in);
CavitySpec read_cavity(const std::filesystem::path& path);
void write_cavity(std::ostream& out, const CavitySpec& cavity);

/// A mode whose coupling is `g_diag` times the identity.
ModeSpec make_diagonal_mode(int n_orb, double omega, int n_max, double g_diag,
                            double nuclear_projection = 0.0);

struct Fixture {
  IntegralSet integrals;
  CavitySpec cavity;
};

/**
 * Built-in model systems.
 *
 *  - hubbard_dimer(t, U [, n_elec=2]): two sites, hopping -t, on-site U.
 *  - single_level(h, u [, n_elec=2]):  one orbital, h_00 = h, (00|00) = u.
 *  - photon_only(omega): one empty orbital, no electrons, one uncoupled
 *    mode of frequency omega with n_max = 5.
 *
 * The two electronic fixtures come with an empty cavity.
 */
Fixture build_fixture(std::string_view name, std::span<const double> params);

/// Throws Error when the cavity modes do not match the orbital count.
void check_compatible(const IntegralSet& integrals, const CavitySpec& cavity);

/// Moves every nuclear projection d into the electronic coupling,
/// g_pq <- g_pq + (d / N_e) delta_pq, which is exact at fixed particle
/// number. The returned cavity has all nuclear projections equal to zero.
CavitySpec fold_nuclear_projection(const CavitySpec& cavity, int n_electrons);

}  // namespace qedafqmc
