// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "qedafqmc/model_io.hpp"
#include "qedafqmc/pf_hamiltonian.hpp"
#include "qedafqmc/walker_engine.hpp"

#include <span>
#include <vector>

namespace qedafqmc {

/// Mixed one-body density G_pq = <Psi_T| c+_p c_q |phi> / <Psi_T|phi> per spin.
struct GreensFunction {
  CMat g_alpha;
  CMat g_beta;
};

/// Throws Error on a singular overlap matrix.
GreensFunction greens_function(const Walker& walker, const TrialState& trial);

/// Mixed photon expectations of one mode.
struct PhotonMoments {
  cplx position{0.0, 0.0};  ///< <a+ + a>
  cplx number{0.0, 0.0};    ///< <a+ a>
};

PhotonMoments photon_moments(const CVec& walker_vector, const Vec& trial_vector);

struct EnergyBreakdown {
  cplx e_one_body{0.0, 0.0};
  cplx e_two_body{0.0, 0.0};
  cplx e_photon{0.0, 0.0};
  cplx e_bilinear{0.0, 0.0};
  cplx e_constant{0.0, 0.0};
  cplx total{0.0, 0.0};
};

/// Mixed estimate of the DSE-modified Pauli-Fierz Hamiltonian. The two-body
/// part is contracted through the Cholesky vectors of v_tilde.
EnergyBreakdown local_energy(const Walker& walker, const TrialState& trial,
                             const DSEModifiedIntegrals& dse, const CholeskyFactors& chol,
                             const CavitySpec& cavity);

/// Comb resampling: N equal-weight copies with weight W/N, copy counts
/// proportional to |w_i|. The unit phase of each walker is carried over.
/// Throws Error when the total weight is not positive.
std::vector<Walker> stochastic_reconfiguration(std::span<const Walker> population, RngStream& rng);

/// Same comb, exposed as indices for testing: the parent of every new slot.
std::vector<int> comb_resample(std::span<const double> weights, double offset);

struct EnergySample {
  int step = 0;
  double tau = 0.0;
  cplx numerator{0.0, 0.0};  ///< sum_i w_i E_L,i
  double denominator = 0.0;  ///< sum_i w_i (real part for free projection)
};

struct EnergyTrace {
  std::vector<EnergySample> samples;
  int stride = 1;
};

struct ErrorEstimate {
  double mean = 0.0;
  double error = 0.0;
  double tau_int = 0.5;
  int n_used = 0;
  bool zero_variance = false;
};

/// Windowing constant of the self-consistent autocorrelation window.
inline constexpr double kAutocorrWindow = 6.0;

/// Mean and error of an evenly spaced series; tau_int from the
/// self-consistent window sum_{t<=W} rho(t), smallest W >= c tau_int.
ErrorEstimate autocorrelation_error(std::span<const double> series);

/// Drops the leading `equilibration_fraction` of samples, takes the
/// weighted mean sum Re(num) / sum den and the error of the ratio series.
/// Throws Error with fewer than 20 remaining samples.
ErrorEstimate autocorrelation_error(const EnergyTrace& trace, double equilibration_fraction = 0.25);

/// Flyvbjerg-Petersen blocking: the largest blocked error estimate among
/// levels that keep at least 32 blocks.
double blocking_error(std::span<const double> series);

}  // namespace qedafqmc
