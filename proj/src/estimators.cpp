// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "qedafqmc/estimators.hpp"

#include <cmath>
#include <numeric>

namespace qedafqmc {

namespace {

CMat block_greens(const CMat& trial, const CMat& slater) {
  const auto m = slater.rows();
  if (slater.cols() == 0) return CMat::Zero(m, m);
  const CMat o = trial.adjoint() * slater;
  const Eigen::FullPivLU<CMat> lu(o);
  if (!lu.isInvertible()) throw Error("greens_function: singular overlap matrix");
  // theta = phi (Psi^+ phi)^-1 Psi^+, G_pq = theta_qp
  const CMat theta = slater * lu.solve(trial.adjoint());
  return theta.transpose();
}

}  // namespace

GreensFunction greens_function(const Walker& w, const TrialState& trial) {
  return {block_greens(trial.orbitals_alpha, w.slater_alpha),
          block_greens(trial.orbitals_beta, w.slater_beta)};
}

PhotonMoments photon_moments(const CVec& phi, const Vec& psi) {
  const auto n = phi.size();
  cplx denom{0.0, 0.0}, pos{0.0, 0.0}, num{0.0, 0.0};
  for (Eigen::Index k = 0; k < n; ++k) {
    denom += psi(k) * phi(k);
    num += psi(k) * static_cast<double>(k) * phi(k);
    cplx x_phi{0.0, 0.0};
    if (k > 0) x_phi += std::sqrt(static_cast<double>(k)) * phi(k - 1);
    if (k + 1 < n) x_phi += std::sqrt(static_cast<double>(k + 1)) * phi(k + 1);
    pos += psi(k) * x_phi;
  }
  if (denom == cplx(0.0, 0.0)) throw Error("photon_moments: zero photon overlap");
  return {pos / denom, num / denom};
}

EnergyBreakdown local_energy(const Walker& w, const TrialState& trial,
                             const DSEModifiedIntegrals& dse, const CholeskyFactors& chol,
                             const CavitySpec& cav) {
  const auto g = greens_function(w, trial);
  const CMat gsum = g.g_alpha + g.g_beta;
  const CMat theta_a = g.g_alpha.transpose();
  const CMat theta_b = g.g_beta.transpose();

  EnergyBreakdown e;
  e.e_one_body = dse.h_tilde.cast<cplx>().cwiseProduct(gsum).sum();

  cplx two{0.0, 0.0};
  for (const auto& lr : chol.vectors) {
    const CMat l = lr.cast<cplx>();
    const CMat la = l * theta_a;
    const CMat lb = l * theta_b;
    const cplx coulomb = la.trace() + lb.trace();
    const cplx exchange =
        la.cwiseProduct(la.transpose()).sum() + lb.cwiseProduct(lb.transpose()).sum();
    two += coulomb * coulomb - exchange;
  }
  e.e_two_body = 0.5 * two;

  for (int a = 0; a < cav.n_modes(); ++a) {
    const auto& mode = cav.modes[a];
    const auto mom = photon_moments(w.photon_vectors[a], trial.photon_amplitudes[a]);
    e.e_photon += mode.omega * (mom.number + 0.5);
    const cplx dipole = mode.coupling.cast<cplx>().cwiseProduct(gsum).sum() + mode.nuclear_projection;
    e.e_bilinear += std::sqrt(mode.omega / 2.0) * dipole * mom.position;
  }
  e.e_constant = dse.core_energy;
  e.total = e.e_one_body + e.e_two_body + e.e_photon + e.e_bilinear + e.e_constant;
  return e;
}

std::vector<int> comb_resample(std::span<const double> weights, double offset) {
  const int n = static_cast<int>(weights.size());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> parents(n);
  int i = 0;
  double cumulative = n > 0 ? weights[0] : 0.0;
  for (int k = 0; k < n; ++k) {
    const double pos = (k + offset) * total / n;
    while (cumulative <= pos && i < n - 1) cumulative += weights[++i];
    // roundoff at the top edge can leave i on a zero-weight tail slot
    while (weights[i] <= 0.0 && i > 0) --i;
    parents[k] = i;
  }
  return parents;
}

std::vector<Walker> stochastic_reconfiguration(std::span<const Walker> population, RngStream& rng) {
  std::vector<double> weights;
  weights.reserve(population.size());
  for (const auto& w : population) weights.push_back(w.weight);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total))
    throw Error("stochastic_reconfiguration: population collapse (total weight " +
                std::to_string(total) + ")");

  const auto parents = comb_resample(weights, rng.uniform());
  const double each = total / static_cast<double>(population.size());
  std::vector<Walker> out;
  out.reserve(population.size());
  for (int p : parents) {
    out.push_back(population[p]);
    out.back().weight = each;
  }
  return out;
}

ErrorEstimate autocorrelation_error(std::span<const double> x) {
  const auto n = static_cast<int>(x.size());
  if (n < 2) throw Error("autocorrelation_error: need at least 2 samples");
  ErrorEstimate est;
  est.n_used = n;
  est.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;

  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = x[i] - est.mean;
  auto cov = [&](int t) {
    double s = 0.0;
    for (int i = 0; i + t < n; ++i) s += d[i] * d[i + t];
    return s / n;
  };
  const double c0 = cov(0);
  if (!(c0 > 1e-300) || c0 <= 1e-28 * est.mean * est.mean) {
    est.zero_variance = true;
    est.error = 0.0;
    return est;
  }

  double tau = 0.5;
  for (int t = 1; t < n; ++t) {
    tau += cov(t) / c0;
    if (t >= kAutocorrWindow * tau) break;
  }
  if (!(tau > 0.0)) tau = 0.5;
  est.tau_int = tau;
  const double sample_var = c0 * n / (n - 1.0);
  est.error = std::sqrt(sample_var * 2.0 * tau / n);
  return est;
}

ErrorEstimate autocorrelation_error(const EnergyTrace& trace, double equilibration_fraction) {
  if (equilibration_fraction < 0.0 || equilibration_fraction >= 1.0)
    throw Error("autocorrelation_error: equilibration fraction must be in [0, 1)");
  const auto total = trace.samples.size();
  const auto skip = static_cast<std::size_t>(std::floor(equilibration_fraction * total));
  if (total - skip < 20)
    throw Error("autocorrelation_error: too few samples after equilibration (" +
                std::to_string(total - skip) + " < 20)");

  std::vector<double> ratios;
  double num = 0.0, den = 0.0;
  for (std::size_t i = skip; i < total; ++i) {
    const auto& s = trace.samples[i];
    if (!(s.denominator > 0.0)) throw Error("autocorrelation_error: non-positive denominator");
    ratios.push_back(s.numerator.real() / s.denominator);
    num += s.numerator.real();
    den += s.denominator;
  }
  auto est = autocorrelation_error(ratios);
  est.mean = num / den;
  return est;
}

double blocking_error(std::span<const double> series) {
  std::vector<double> x(series.begin(), series.end());
  double best = 0.0;
  while (x.size() >= 32) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    best = std::max(best, std::sqrt(var / (n - 1.0)));
    std::vector<double> next(x.size() / 2);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = 0.5 * (x[2 * i] + x[2 * i + 1]);
    x = std::move(next);
  }
  return best;
}

}  // namespace qedafqmc
