// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "qedafqmc/walker_engine.hpp"

#include "qedafqmc/estimators.hpp"
#include "qedafqmc/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace qedafqmc {

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

cplx block_overlap(const CMat& trial, const CMat& slater) {
  if (slater.cols() == 0) return {1.0, 0.0};
  return (trial.adjoint() * slater).determinant();
}

// exp(v) * phi by Taylor series, summed until the next term is negligible.
void apply_exponential(const CMat& v, CMat& phi) {
  if (phi.cols() == 0) return;
  CMat term = phi;
  for (int k = 1; k <= 64; ++k) {
    term = v * term / static_cast<double>(k);
    phi += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-16 * phi.cwiseAbs().maxCoeff()) break;
  }
}

}  // namespace

TrialState build_trial(const DSEModifiedIntegrals& dse, const CavitySpec& cav,
                       std::span<const int> photon_occupation) {
  if (!photon_occupation.empty() && static_cast<int>(photon_occupation.size()) != cav.n_modes())
    throw Error("build_trial: one photon occupation per mode expected");
  const auto hf = restricted_hartree_fock(dse, dse.n_alpha, dse.n_beta);

  TrialState trial;
  trial.orbitals_alpha = hf.orbitals_alpha.leftCols(dse.n_alpha).cast<cplx>();
  trial.orbitals_beta = hf.orbitals_beta.leftCols(dse.n_beta).cast<cplx>();
  for (int a = 0; a < cav.n_modes(); ++a) {
    const int n = photon_occupation.empty() ? 0 : photon_occupation[a];
    if (n < 0 || n > cav.modes[a].n_max)
      throw Error("build_trial: photon occupation " + std::to_string(n) + " exceeds n_max of mode " +
                  std::to_string(a));
    Vec amp = Vec::Zero(cav.modes[a].n_max + 1);
    amp(n) = 1.0;
    trial.photon_amplitudes.push_back(std::move(amp));
  }
  return trial;
}

Walker make_walker(const TrialState& trial) {
  Walker w;
  w.slater_alpha = trial.orbitals_alpha;
  w.slater_beta = trial.orbitals_beta;
  for (const auto& amp : trial.photon_amplitudes) w.photon_vectors.push_back(amp.cast<cplx>());
  w.overlap = overlap(w, trial);
  return w;
}

cplx overlap(const Walker& w, const TrialState& trial) {
  cplx o = block_overlap(trial.orbitals_alpha, w.slater_alpha) *
           block_overlap(trial.orbitals_beta, w.slater_beta);
  for (std::size_t a = 0; a < w.photon_vectors.size(); ++a)
    o *= trial.photon_amplitudes[a].cast<cplx>().dot(w.photon_vectors[a]);
  return o;
}

namespace {

// Mixed expectation <L_g> of every field.
CVec field_means(const Walker& w, const TrialState& trial, const Propagator& prop) {
  const auto g = greens_function(w, trial);
  const CMat gsum = g.g_alpha + g.g_beta;
  std::vector<cplx> position(w.photon_vectors.size());
  for (std::size_t a = 0; a < w.photon_vectors.size(); ++a)
    position[a] = photon_moments(w.photon_vectors[a], trial.photon_amplitudes[a]).position;
  CVec mean(prop.n_fields());
  for (int k = 0; k < prop.n_fields(); ++k) {
    const auto& f = prop.fields[k];
    mean(k) = 0.0;
    if (f.fermion.size() > 0) mean(k) += f.fermion.cwiseProduct(gsum).sum();
    if (f.mode >= 0) mean(k) += f.boson_scale * position[f.mode];
  }
  return mean;
}

Mat real_part_checked(const CMat& m, const char* what) {
  if (m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw Error(std::string("build_propagator: ") + what + " is not real");
  return m.real();
}

}  // namespace

Propagator build_propagator(const MCHamiltonian& mc, double dtau, double energy_shift,
                            double bias_cap, const TrialState* background) {
  if (!(dtau > 0.0)) throw Error("build_propagator: dtau must be positive");
  Propagator prop;
  prop.dtau = dtau;
  prop.energy_shift = energy_shift;
  prop.bias_cap = bias_cap;

  for (const auto& l : mc.electronic_fields.vectors) prop.fields.push_back({l.cast<cplx>(), -1, 0.0});
  for (const auto& mf : mc.mixed_fields) {
    FieldOperator op;
    if (mf.fermion_part.size() > 0 && mf.fermion_part.cwiseAbs().maxCoeff() > 0.0)
      op.fermion = mf.fermion_part;
    op.mode = mf.boson_mode;
    op.boson_scale = mf.boson_scale;
    prop.fields.push_back(std::move(op));
  }

  // one-body remainder sum_g lbar_g L_g of the background subtraction
  const int m = mc.n_orb;
  CMat t_shift = CMat::Zero(m, m);
  std::vector<cplx> x_shift(mc.n_modes(), cplx(0.0, 0.0));
  cplx c_shift{0.0, 0.0};
  prop.background = CVec::Zero(prop.n_fields());
  if (background) {
    prop.background = field_means(make_walker(*background), *background, prop);
    for (int k = 0; k < prop.n_fields(); ++k) {
      const auto& f = prop.fields[k];
      const cplx lbar = prop.background(k);
      if (f.fermion.size() > 0) t_shift += lbar * f.fermion;
      if (f.mode >= 0) x_shift[f.mode] += lbar * f.boson_scale;
      c_shift -= 0.5 * lbar * lbar;
    }
  }
  if (std::abs(c_shift.imag()) > 1e-10 * (1.0 + std::abs(c_shift)))
    throw Error("build_propagator: background constant is not real");
  prop.constant = mc.constant + c_shift.real();
  prop.constant_factor = std::exp(-dtau * (prop.constant - energy_shift));
  if (!std::isfinite(prop.constant_factor))
    throw Error("build_propagator: constant factor overflows, adjust the energy shift");

  const Mat t = mc.t_eff + real_part_checked(t_shift, "background one-body term");
  const Eigen::SelfAdjointEigenSolver<Mat> tsolve(t);
  const Vec decay = (-0.5 * dtau * tsolve.eigenvalues().array()).exp();
  prop.exp_half_T =
      (tsolve.eigenvectors() * decay.asDiagonal() * tsolve.eigenvectors().transpose()).cast<cplx>();

  for (int a = 0; a < mc.n_modes(); ++a) {
    const int n_max = static_cast<int>(mc.photon_energies[a].size()) - 1;
    prop.photon_half_decay.push_back((-0.5 * dtau * mc.photon_energies[a].array()).exp().matrix());
    const Mat x = position_operator(n_max);
    const Eigen::SelfAdjointEigenSolver<Mat> xsolve(x);
    prop.boson_quadrature.push_back({xsolve.eigenvectors(), xsolve.eigenvalues()});

    if (std::abs(x_shift[a].imag()) > 1e-10 * (1.0 + std::abs(x_shift[a])))
      throw Error("build_propagator: background photon term is not real");
    if (x_shift[a].real() == 0.0) {
      prop.photon_half_step.push_back(prop.photon_half_decay[a].asDiagonal());
    } else {
      const Mat hph = Mat(mc.photon_energies[a].asDiagonal()) + x_shift[a].real() * x;
      const Eigen::SelfAdjointEigenSolver<Mat> psolve(hph);
      const Vec pd = (-0.5 * dtau * psolve.eigenvalues().array()).exp();
      prop.photon_half_step.push_back(psolve.eigenvectors() * pd.asDiagonal() *
                                      psolve.eigenvectors().transpose());
    }
  }
  return prop;
}

CVec compute_force_bias(const Walker& w, const TrialState& trial, const Propagator& prop) {
  const CVec mean = field_means(w, trial, prop);
  const cplx sqrt_mdt = kI * std::sqrt(prop.dtau);
  CVec bias(prop.n_fields());
  for (int k = 0; k < prop.n_fields(); ++k) {
    cplx xbar = -sqrt_mdt * (mean(k) - prop.background(k));
    if (const double mag = std::abs(xbar); mag > prop.bias_cap) xbar *= prop.bias_cap / mag;
    bias(k) = xbar;
  }
  return bias;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix(s);
  h ^= stream * 0xD1B54A32D192ED03ULL;
  h = splitmix(h);
  h ^= counter * 0x8CB92BA72F3D8DD7ULL;
  state_ = splitmix(h);
}

RngStream::result_type RngStream::operator()() { return splitmix(state_); }

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(*this);
}

Constraint parse_constraint(std::string_view text) {
  if (text == "free") return Constraint::free;
  if (text == "phaseless") return Constraint::phaseless;
  throw Error("unknown constraint '" + std::string(text) + "'");
}

std::string_view to_string(Constraint c) { return c == Constraint::free ? "free" : "phaseless"; }

void apply_half_step(Walker& w, const Propagator& prop) {
  w.slater_alpha = prop.exp_half_T * w.slater_alpha;
  w.slater_beta = prop.exp_half_T * w.slater_beta;
  for (std::size_t a = 0; a < w.photon_vectors.size(); ++a)
    w.photon_vectors[a] = prop.photon_half_step[a].cast<cplx>() * w.photon_vectors[a];
}

void apply_field_exponential(Walker& w, const Propagator& prop, std::span<const cplx> x) {
  if (static_cast<int>(x.size()) != prop.n_fields())
    throw Error("apply_field_exponential: wrong number of fields");
  const int m = static_cast<int>(w.slater_alpha.rows());
  const cplx sqrt_mdt = kI * std::sqrt(prop.dtau);

  CMat v = CMat::Zero(m, m);
  std::vector<cplx> boson_exponent(w.photon_vectors.size(), cplx(0.0, 0.0));
  bool any_fermion = false;
  for (int k = 0; k < prop.n_fields(); ++k) {
    const auto& f = prop.fields[k];
    if (f.fermion.size() > 0) {
      v += (sqrt_mdt * x[k]) * f.fermion;
      any_fermion = true;
    }
    if (f.mode >= 0) boson_exponent[f.mode] += sqrt_mdt * x[k] * f.boson_scale;
  }
  if (any_fermion) {
    apply_exponential(v, w.slater_alpha);
    apply_exponential(v, w.slater_beta);
  }
  for (std::size_t a = 0; a < w.photon_vectors.size(); ++a) {
    if (boson_exponent[a] == cplx(0.0, 0.0)) continue;
    const auto& quad = prop.boson_quadrature[a];
    const CMat u = quad.vectors.cast<cplx>();
    const CVec e = (boson_exponent[a] * quad.values.cast<cplx>().array()).exp().matrix();
    w.photon_vectors[a] = u * e.cwiseProduct(u.transpose() * w.photon_vectors[a]);
  }
}

FieldSample propagate_step(Walker& w, const Propagator& prop, const TrialState& trial,
                           RngStream& rng, Constraint constraint) {
  FieldSample sample;
  if (!w.alive()) return sample;

  apply_half_step(w, prop);
  try {
    sample.force_bias = compute_force_bias(w, trial, prop);
  } catch (const Error&) {
    w.kill();
    return sample;
  }

  const int nf = prop.n_fields();
  sample.draws.resize(nf);
  std::vector<cplx> x(nf);
  const cplx sqrt_mdt = kI * std::sqrt(prop.dtau);
  cplx log_shift{0.0, 0.0}, log_background{0.0, 0.0};
  for (int k = 0; k < nf; ++k) {
    const double xi = rng.normal();
    const cplx xbar = sample.force_bias(k);
    sample.draws(k) = xi;
    x[k] = xi - xbar;
    log_shift += xi * xbar - 0.5 * xbar * xbar;
    // scalar part e^{-sqrt(-dt) x_g lbar_g} of the background-subtracted field
    log_background -= sqrt_mdt * x[k] * prop.background(k);
  }
  apply_field_exponential(w, prop, x);
  apply_half_step(w, prop);

  const cplx new_overlap = overlap(w, trial);
  const cplx log_ratio = std::log(new_overlap / w.overlap) + log_background;
  const cplx ratio = std::exp(log_ratio);
  sample.log_importance = log_ratio + log_shift;
  const cplx importance = std::exp(sample.log_importance) * prop.constant_factor;
  if (!std::isfinite(std::abs(importance)) || !std::isfinite(std::abs(new_overlap)) ||
      new_overlap == cplx(0.0, 0.0)) {
    w.kill();
    return sample;
  }

  if (constraint == Constraint::phaseless) {
    const double cos_phase = std::cos(std::arg(ratio));
    // hybrid energy clamped to shift +- sqrt(2/dtau) so node-adjacent walkers
    // cannot blow up the population
    const double bound = std::sqrt(2.0 / prop.dtau);
    const double hybrid = -std::log(std::abs(importance)) / prop.dtau + prop.energy_shift;
    const double clamped = std::clamp(hybrid, prop.energy_shift - bound, prop.energy_shift + bound);
    w.weight *= std::exp(-prop.dtau * (clamped - prop.energy_shift)) * std::max(0.0, cos_phase);
  } else {
    const cplx cw = w.complex_weight() * importance;
    w.weight = std::abs(cw);
    w.phase = w.weight > 0.0 ? cw / w.weight : cplx(1.0, 0.0);
  }
  if (!std::isfinite(w.weight)) w.kill();
  w.overlap = new_overlap;
  ++w.steps_since_orth;
  return sample;
}

void reorthogonalize(Walker& w) {
  if (!w.alive()) return;
  cplx log_factor{0.0, 0.0};
  for (CMat* block : {&w.slater_alpha, &w.slater_beta}) {
    const auto n = block->cols();
    if (n == 0) continue;
    const Eigen::HouseholderQR<CMat> qr(*block);
    CMat q = qr.householderQ() * CMat::Identity(block->rows(), n);
    const CMat r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    double rmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) rmax = std::max(rmax, std::abs(r(i, i)));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::abs(r(i, i));
      if (!(mag > 1e-13 * rmax)) {
        w.kill();
        return;
      }
      // positive real diagonal of R fixes the column phases of Q
      const cplx phase = r(i, i) / mag;
      q.col(i) *= phase;
      log_factor += std::log(mag);
    }
    *block = std::move(q);
  }
  for (auto& vec : w.photon_vectors) {
    const double nrm = vec.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      w.kill();
      return;
    }
    vec /= nrm;
    log_factor += std::log(nrm);
  }
  w.overlap /= std::exp(log_factor);
  w.log_absorbed += log_factor;
  w.steps_since_orth = 0;
}

}  // namespace qedafqmc
