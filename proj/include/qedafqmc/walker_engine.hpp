// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file walker_engine.hpp
 * @brief Walkers, trial state and the Trotterized auxiliary-field step.
 *
 * A walker is a product state: one Slater block per spin times one photon
 * vector per mode. One step applies
 *
 *     e^{-dt/2 T} e^{-dt/2 H_ph}  e^{sqrt(-dt) sum_g x_g L_g}  e^{-dt/2 H_ph} e^{-dt/2 T}
 *
 * where the fields x_g = xi_g - xbar_g are standard normal draws shifted by
 * the force bias. Fermion and boson parts of every L_g commute, so the
 * field exponential factorizes into one M x M matrix exponential acting on
 * the Slater blocks and one (n_max+1) x (n_max+1) exponential per mode.
 */

#pragma once

#include "qedafqmc/pf_hamiltonian.hpp"
#include "qedafqmc/types.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace qedafqmc {

struct TrialState {
  CMat orbitals_alpha;  ///< M x N_alpha
  CMat orbitals_beta;   ///< M x N_beta
  std::vector<Vec> photon_amplitudes;
};

struct Walker {
  CMat slater_alpha;
  CMat slater_beta;
  std::vector<CVec> photon_vectors;
  double weight = 1.0;
  cplx phase{1.0, 0.0};  ///< unit phase of the weight; stays 1 under the phaseless constraint
  cplx overlap{1.0, 0.0};
  int steps_since_orth = 0;
  cplx log_absorbed{0.0, 0.0};  ///< accumulated log of factors removed by reorthogonalize

  bool alive() const noexcept { return weight > 0.0; }
  void kill() noexcept { weight = 0.0; }
  cplx complex_weight() const noexcept { return weight * phase; }
};

/// Trial electronic part from Hartree-Fock on the DSE-modified integrals.
/// `photon_occupation[a]` selects the Fock state of mode a (default vacuum).
TrialState build_trial(const DSEModifiedIntegrals& dse, const CavitySpec& cavity,
                       std::span<const int> photon_occupation = {});

/// A walker identical to the trial state with unit weight.
Walker make_walker(const TrialState& trial);

/// <Psi_T|phi> as a product of the two determinants and the photon overlaps.
cplx overlap(const Walker& walker, const TrialState& trial);

struct BosonQuadrature {
  Mat vectors;  ///< U, orthogonal
  Vec values;   ///< D, (a+ + a) = U diag(D) U^T
};

/// One auxiliary field in propagator form.
struct FieldOperator {
  CMat fermion;  ///< empty for pure boson fields
  int mode = -1;  ///< -1 for electronic Cholesky fields
  cplx boson_scale{0.0, 0.0};
};

struct Propagator {
  double dtau = 0.0;
  CMat exp_half_T;
  std::vector<Vec> photon_half_decay;  ///< e^{-dt/2 omega (n + 1/2)}
  std::vector<Mat> photon_half_step;   ///< applied per mode; equals diag(photon_half_decay) without background
  std::vector<BosonQuadrature> boson_quadrature;
  std::vector<FieldOperator> fields;  ///< Cholesky fields first, then mixed fields by mode
  CVec background;  ///< per-field trial expectation subtracted from L_g, zero when disabled
  double constant = 0.0;  ///< C, minus 1/2 sum_g background_g^2 when subtracted
  double energy_shift = 0.0;
  double constant_factor = 1.0;  ///< e^{-dt (constant - energy_shift)}
  double bias_cap = 1.0;

  int n_fields() const noexcept { return static_cast<int>(fields.size()); }
};

inline constexpr double kDefaultBiasCap = 1.0;

/// `energy_shift` is a reference energy subtracted from C in the weight
/// factor; it only rescales all weights by a common factor.
///
/// With a `background` trial, every field is propagated as L_g - <L_g>_T:
/// the linear remainder sum_g <L_g>_T L_g moves into the one-body half
/// steps (electronic and photonic) and -1/2 sum_g <L_g>_T^2 into the
/// constant, so the represented Hamiltonian is unchanged.
Propagator build_propagator(const MCHamiltonian& mc, double dtau, double energy_shift = 0.0,
                            double bias_cap = kDefaultBiasCap,
                            const TrialState* background = nullptr);

struct FieldSample {
  Vec draws;        ///< xi_g ~ N(0, 1)
  CVec force_bias;  ///< xbar_g
  cplx log_importance{0.0, 0.0};
};

/// xbar_g = -sqrt(-dt) (<L_g>_mixed - background_g), each component
/// clamped to |xbar_g| <= bias_cap.
CVec compute_force_bias(const Walker& walker, const TrialState& trial, const Propagator& prop);

/// Counter-based random stream. The state is a pure function of
/// (seed, stream, counter), so draws do not depend on thread scheduling.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();  ///< [0, 1)
  double normal();

 private:
  std::uint64_t state_;
};

enum class Constraint { free, phaseless };

Constraint parse_constraint(std::string_view text);
std::string_view to_string(Constraint c);

/// Applies the field-dependent half of the step, e^{sqrt(-dt) sum_g x_g L_g},
/// for given field values x_g. The walker's overlap cache is not updated.
void apply_field_exponential(Walker& walker, const Propagator& prop, std::span<const cplx> fields);

/// Applies the one-body half steps e^{-dt/2 T} e^{-dt/2 H_ph}, including
/// the background terms when present.
void apply_half_step(Walker& walker, const Propagator& prop);

/// One full importance-sampled step. Dead walkers are left untouched.
FieldSample propagate_step(Walker& walker, const Propagator& prop, const TrialState& trial,
                           RngStream& rng, Constraint constraint);

inline constexpr int kDefaultOrthStride = 10;

/// QR-orthonormalizes the Slater blocks and normalizes photon vectors. The
/// removed factors are divided out of the overlap cache and accumulated in
/// `log_absorbed`; the weight is untouched because estimators only depend
/// on phi / <Psi_T|phi>.
void reorthogonalize(Walker& walker);

}  // namespace qedafqmc
