// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "qedafqmc/exact_oracle.hpp"

#include <bit>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>

namespace qedafqmc {

namespace {

// ---------------------------------------------------------------------------
// Hartree-Fock

Mat coulomb(const Eri& v, const Mat& p) {
  const int m = v.n_orb();
  Mat j = Mat::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double s = 0.0;
      for (int r = 0; r < m; ++r)
        for (int t = 0; t < m; ++t) s += v(a, b, r, t) * p(r, t);
      j(a, b) = s;
    }
  return j;
}

Mat exchange(const Eri& v, const Mat& p) {
  const int m = v.n_orb();
  Mat k = Mat::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double s = 0.0;
      for (int r = 0; r < m; ++r)
        for (int t = 0; t < m; ++t) s += v(a, r, t, b) * p(r, t);
      k(a, b) = s;
    }
  return k;
}

Mat density(const Mat& orbitals, int n) {
  const Mat c = orbitals.leftCols(n);
  return c * c.transpose();
}

class Diis {
 public:
  explicit Diis(int history) : history_(history) {}

  Mat extrapolate(const Mat& f, const Mat& err) {
    focks_.push_back(f);
    errors_.push_back(err);
    if (static_cast<int>(focks_.size()) > history_) {
      focks_.pop_front();
      errors_.pop_front();
    }
    const int n = static_cast<int>(focks_.size());
    if (n < 2) return f;
    Mat b = Mat::Zero(n + 1, n + 1);
    Vec rhs = Vec::Zero(n + 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = errors_[i].cwiseProduct(errors_[j]).sum();
    b.row(n).head(n).setConstant(-1.0);
    b.col(n).head(n).setConstant(-1.0);
    rhs(n) = -1.0;
    const Vec c = b.colPivHouseholderQr().solve(rhs);
    if (!c.allFinite()) return f;
    Mat out = Mat::Zero(f.rows(), f.cols());
    for (int i = 0; i < n; ++i) out += c(i) * focks_[i];
    return out;
  }

 private:
  int history_;
  std::deque<Mat> focks_;
  std::deque<Mat> errors_;
};

// ---------------------------------------------------------------------------
// Determinant algebra on bit strings

// Applies a creation (create=true) or annihilation operator at bit k.
// Returns false when the result vanishes; the sign is accumulated in `sign`.
bool apply_op(std::uint64_t& state, int k, bool create, int& sign) {
  const std::uint64_t bit = std::uint64_t{1} << k;
  if (create == static_cast<bool>(state & bit)) return false;
  if (std::popcount(state & (bit - 1)) & 1) sign = -sign;
  state ^= bit;
  return true;
}

// <j| c+_p c_q |i> for bit positions p, q.
std::optional<std::pair<std::uint64_t, int>> hop(std::uint64_t state, int p, int q) {
  int sign = 1;
  if (!apply_op(state, q, false, sign)) return std::nullopt;
  if (!apply_op(state, p, true, sign)) return std::nullopt;
  return std::make_pair(state, sign);
}

std::unordered_map<std::uint64_t, long> index_map(const std::vector<std::uint64_t>& strings) {
  std::unordered_map<std::uint64_t, long> map;
  for (std::size_t i = 0; i < strings.size(); ++i) map.emplace(strings[i], static_cast<long>(i));
  return map;
}

// Electronic space with alpha orbitals at bits 0..M-1 and beta at M..2M-1.
struct ElectronicSpace {
  int m;
  std::vector<std::uint64_t> alpha, beta;
  std::unordered_map<std::uint64_t, long> alpha_index, beta_index;

  explicit ElectronicSpace(const FCISpace& s)
      : m(s.n_orb), alpha(s.alpha_strings), beta(s.beta_strings),
        alpha_index(index_map(s.alpha_strings)), beta_index(index_map(s.beta_strings)) {}

  long dim() const { return static_cast<long>(alpha.size() * beta.size()); }
  std::uint64_t combined(long i) const {
    const auto nb = static_cast<long>(beta.size());
    return alpha[i / nb] | (beta[i % nb] << m);
  }
  long index(std::uint64_t state) const {
    const std::uint64_t mask = (std::uint64_t{1} << m) - 1;
    return alpha_index.at(state & mask) * static_cast<long>(beta.size()) +
           beta_index.at(state >> m);
  }
};

// Spin-summed one-body operator sum_pq f_pq E_pq on the electronic space.
Mat one_body_matrix(const ElectronicSpace& es, const Mat& f) {
  const long d = es.dim();
  Mat out = Mat::Zero(d, d);
  for (long i = 0; i < d; ++i) {
    const auto state = es.combined(i);
    for (int spin = 0; spin < 2; ++spin)
      for (int p = 0; p < es.m; ++p)
        for (int q = 0; q < es.m; ++q) {
          if (f(p, q) == 0.0) continue;
          if (auto r = hop(state, p + spin * es.m, q + spin * es.m))
            out(es.index(r->first), i) += r->second * f(p, q);
        }
  }
  return out;
}

// 1/2 sum (pq|rs) c+_{p s} c+_{r t} c_{s t} c_{q s}.
Mat two_body_matrix(const ElectronicSpace& es, const Eri& v) {
  const long d = es.dim();
  const int m = es.m;
  Mat out = Mat::Zero(d, d);
  for (long i = 0; i < d; ++i) {
    const auto state = es.combined(i);
    for (int s1 = 0; s1 < 2; ++s1)
      for (int s2 = 0; s2 < 2; ++s2)
        for (int q = 0; q < m; ++q) {
          std::uint64_t st1 = state;
          int sg1 = 1;
          if (!apply_op(st1, q + s1 * m, false, sg1)) continue;
          for (int s = 0; s < m; ++s) {
            std::uint64_t st2 = st1;
            int sg2 = sg1;
            if (!apply_op(st2, s + s2 * m, false, sg2)) continue;
            for (int r = 0; r < m; ++r) {
              std::uint64_t st3 = st2;
              int sg3 = sg2;
              if (!apply_op(st3, r + s2 * m, true, sg3)) continue;
              for (int p = 0; p < m; ++p) {
                const double val = v(p, q, r, s);
                if (val == 0.0) continue;
                std::uint64_t st4 = st3;
                int sg4 = sg3;
                if (!apply_op(st4, p + s1 * m, true, sg4)) continue;
                out(es.index(st4), i) += 0.5 * sg4 * val;
              }
            }
          }
        }
  }
  return out;
}

// One-body operator on a single spin sector (strings of one spin only).
CMat spin_block_matrix(const std::vector<std::uint64_t>& strings, const CMat& f, int m) {
  const auto idx = index_map(strings);
  const auto d = static_cast<long>(strings.size());
  CMat out = CMat::Zero(d, d);
  for (long i = 0; i < d; ++i)
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        if (f(p, q) == cplx(0.0, 0.0)) continue;
        if (auto r = hop(strings[i], p, q)) out(idx.at(r->first), i) += static_cast<double>(r->second) * f(p, q);
      }
  return out;
}

template <typename A, typename B>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(const A& a, const B& b) {
  Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                        a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Photon-space operators on the multi-mode product basis.
Mat photon_energy_matrix(const FCISpace& space, const CavitySpec& cav) {
  const long dp = space.dim_photon();
  Vec diag = Vec::Zero(dp);
  for (long u = 0; u < dp; ++u)
    for (int a = 0; a < cav.n_modes(); ++a) {
      const long n = (u / space.photon_stride(a)) % space.photon_dims[a];
      diag(u) += cav.modes[a].omega * (static_cast<double>(n) + 0.5);
    }
  return diag.asDiagonal();
}

Mat photon_position_matrix(const FCISpace& space, int mode) {
  const long dp = space.dim_photon();
  const long stride = space.photon_stride(mode);
  const int dim = space.photon_dims[mode];
  Mat x = Mat::Zero(dp, dp);
  for (long u = 0; u < dp; ++u) {
    const long n = (u / stride) % dim;
    if (n + 1 < dim) {
      const double amp = std::sqrt(static_cast<double>(n + 1));
      x(u + stride, u) = amp;
      x(u, u + stride) = amp;
    }
  }
  return x;
}

Mat assemble_pf(const FCISpace& space, const Mat& h_el, const CavitySpec& cav,
                const ElectronicSpace& es) {
  const long de = space.dim_electronic();
  const long dp = space.dim_photon();
  Mat h = kron(h_el, Mat::Identity(dp, dp));
  h += kron(Mat::Identity(de, de), photon_energy_matrix(space, cav));
  for (int a = 0; a < cav.n_modes(); ++a) {
    const auto& mode = cav.modes[a];
    const Mat dipole =
        one_body_matrix(es, mode.coupling) + mode.nuclear_projection * Mat::Identity(de, de);
    h += kron(dipole, Mat(std::sqrt(mode.omega / 2.0) * photon_position_matrix(space, a)));
  }
  return h;
}

CMat electronic_kron(const FCISpace& space, const CMat& f) {
  const CMat fa = spin_block_matrix(space.alpha_strings, f, space.n_orb);
  const CMat fb = spin_block_matrix(space.beta_strings, f, space.n_orb);
  const auto da = static_cast<long>(space.alpha_strings.size());
  const auto db = static_cast<long>(space.beta_strings.size());
  return kron(fa, CMat(CMat::Identity(db, db))) + kron(CMat(CMat::Identity(da, da)), fb);
}

}  // namespace

namespace {

// One SCF attempt. A positive level shift raises the virtual block, which
// damps occupied/virtual rotations; the fixed points are unchanged.
std::optional<HartreeFockResult> scf_attempt(const DSEModifiedIntegrals& dse, int n_alpha, int n_beta,
                                             const ScfOptions& options, double level_shift, bool use_diis) {
  const int m = dse.n_orb;
  const Mat& h = dse.h_tilde;
  const bool restricted = n_alpha == n_beta;
  const Eigen::SelfAdjointEigenSolver<Mat> guess(h);
  Mat ca = guess.eigenvectors(), cb = guess.eigenvectors();

  Diis diis_a(options.diis_history), diis_b(options.diis_history);
  const Mat eye = Mat::Identity(m, m);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Mat pa = density(ca, n_alpha);
    const Mat pb = density(cb, n_beta);
    const Mat j = coulomb(dse.v_tilde, pa + pb);
    const Mat fa = h + j - exchange(dse.v_tilde, pa);
    const Mat fb = restricted ? fa : Mat(h + j - exchange(dse.v_tilde, pb));
    const Mat erra = fa * pa - pa * fa;
    const Mat errb = fb * pb - pb * fb;
    const double err = std::max(erra.cwiseAbs().maxCoeff(), errb.cwiseAbs().maxCoeff());
    if (err <= options.convergence) {
      // F commutes with P here, so a large shift orders occupied orbitals first
      const double sep = 1.0 + 2.0 * std::max(fa.cwiseAbs().sum(), fb.cwiseAbs().sum());
      const Eigen::SelfAdjointEigenSolver<Mat> sa(fa + sep * (eye - pa)), sb(fb + sep * (eye - pb));
      HartreeFockResult res;
      res.restricted = restricted;
      res.energy = 0.5 * ((h + fa).cwiseProduct(pa).sum() + (h + fb).cwiseProduct(pb).sum()) +
                   dse.core_energy;
      res.orbitals_alpha = sa.eigenvectors();
      res.orbitals_beta = restricted ? sa.eigenvectors() : sb.eigenvectors();
      res.energies_alpha = (res.orbitals_alpha.transpose() * fa * res.orbitals_alpha).diagonal();
      res.energies_beta = (res.orbitals_beta.transpose() * fb * res.orbitals_beta).diagonal();
      res.iterations = it;
      return res;
    }
    const Mat ga = fa + level_shift * (eye - pa);
    const Eigen::SelfAdjointEigenSolver<Mat> sa(use_diis ? diis_a.extrapolate(ga, erra) : ga);
    ca = sa.eigenvectors();
    if (restricted) {
      cb = ca;
    } else {
      const Mat gb = fb + level_shift * (eye - pb);
      const Eigen::SelfAdjointEigenSolver<Mat> sb(use_diis ? diis_b.extrapolate(gb, errb) : gb);
      cb = sb.eigenvectors();
    }
  }
  return std::nullopt;
}

}  // namespace

HartreeFockResult restricted_hartree_fock(const DSEModifiedIntegrals& dse, int n_alpha, int n_beta,
                                          const ScfOptions& options) {
  const int m = dse.n_orb;
  if (n_alpha < 0 || n_beta < 0 || n_alpha > m || n_beta > m)
    throw Error("restricted_hartree_fock: electron count does not fit the orbital space");
  if (n_alpha + n_beta == 0) {
    const Eigen::SelfAdjointEigenSolver<Mat> guess(dse.h_tilde);
    return {dse.core_energy, guess.eigenvectors(), guess.eigenvectors(), guess.eigenvalues(),
            guess.eigenvalues(), 0, n_alpha == n_beta};
  }
  if (auto res = scf_attempt(dse, n_alpha, n_beta, options, 0.0, true)) return *res;
  // oscillating Aufbau: retry with increasing level shifts
  for (double shift : {0.5, 2.0, 8.0})
    if (auto res = scf_attempt(dse, n_alpha, n_beta, options, shift, false)) return *res;
  throw Error("restricted_hartree_fock: SCF not converged in " +
              std::to_string(options.max_iterations) + " iterations");
}

long FCISpace::dim_photon() const {
  long d = 1;
  for (int n : photon_dims) d *= n;
  return d;
}

long FCISpace::photon_stride(int mode) const {
  long s = 1;
  for (std::size_t a = mode + 1; a < photon_dims.size(); ++a) s *= photon_dims[a];
  return s;
}

std::vector<std::uint64_t> enumerate_strings(int m, int n) {
  if (m < 0 || n < 0 || n > m || m > 62) throw Error("enumerate_strings: invalid (m, n)");
  std::vector<std::uint64_t> out;
  if (n == 0) return {0};
  const std::uint64_t limit = std::uint64_t{1} << m;
  for (std::uint64_t v = (std::uint64_t{1} << n) - 1; v < limit;) {
    out.push_back(v);
    // next integer with the same popcount
    const std::uint64_t t = v | (v - 1);
    v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
  }
  return out;
}

FCISpace FCISpace::build(int n_orb, int n_alpha, int n_beta, const CavitySpec& cav, long limit) {
  if (2 * n_orb > 63) throw Error("FCISpace: too many orbitals for the dense oracle");
  FCISpace s;
  s.n_orb = n_orb;
  s.n_alpha = n_alpha;
  s.n_beta = n_beta;
  s.alpha_strings = enumerate_strings(n_orb, n_alpha);
  s.beta_strings = enumerate_strings(n_orb, n_beta);
  double dim = static_cast<double>(s.dim_electronic());
  for (const auto& mode : cav.modes) {
    s.photon_dims.push_back(mode.fock_dim());
    dim *= mode.fock_dim();
  }
  if (dim > static_cast<double>(limit))
    throw Error("dense oracle dimension " + std::to_string(static_cast<long long>(dim)) +
                " exceeds the limit " + std::to_string(limit));
  return s;
}

Mat pf_hamiltonian_matrix(const FCISpace& space, const DSEModifiedIntegrals& dse,
                          const CavitySpec& cav) {
  const ElectronicSpace es(space);
  Mat h_el = one_body_matrix(es, dse.h_tilde) + two_body_matrix(es, dse.v_tilde);
  h_el.diagonal().array() += dse.core_energy;
  return assemble_pf(space, h_el, cav, es);
}

Mat pf_hamiltonian_matrix_unfolded(const FCISpace& space, const IntegralSet& ints,
                                   const CavitySpec& cav) {
  const ElectronicSpace es(space);
  const long de = es.dim();
  Mat h_el = one_body_matrix(es, ints.oei) + two_body_matrix(es, ints.eri);
  h_el.diagonal().array() += ints.core_energy;
  for (const auto& mode : cav.modes) {
    const Mat dipole =
        one_body_matrix(es, mode.coupling) + mode.nuclear_projection * Mat::Identity(de, de);
    h_el += 0.5 * dipole * dipole;
  }
  return assemble_pf(space, h_el, cav, es);
}

DenseMCOperators mc_operators_dense(const FCISpace& space, const MCHamiltonian& mc) {
  const long de = space.dim_electronic();
  const long dp = space.dim_photon();
  const CMat id_el = CMat::Identity(de, de);
  const CMat id_ph = CMat::Identity(dp, dp);

  DenseMCOperators ops;
  ops.constant = mc.constant;
  ops.one_body = kron(electronic_kron(space, mc.t_eff.cast<cplx>()), id_ph);
  CMat ph = CMat::Zero(dp, dp);
  for (long u = 0; u < dp; ++u)
    for (int a = 0; a < mc.n_modes(); ++a)
      ph(u, u) += mc.photon_energies[a]((u / space.photon_stride(a)) % space.photon_dims[a]);
  ops.photon = kron(id_el, ph);
  for (const auto& l : mc.electronic_fields.vectors)
    ops.fields.push_back(kron(electronic_kron(space, l.cast<cplx>()), id_ph));
  for (const auto& mf : mc.mixed_fields) {
    CMat op = CMat::Zero(de * dp, de * dp);
    if (mf.fermion_part.size() > 0) op += kron(electronic_kron(space, mf.fermion_part), id_ph);
    const CMat x = photon_position_matrix(space, mf.boson_mode).cast<cplx>();
    op += kron(id_el, CMat(mf.boson_scale * x));
    ops.fields.push_back(std::move(op));
  }
  return ops;
}

CMat mc_hamiltonian_matrix(const FCISpace& space, const MCHamiltonian& mc) {
  const long de = space.dim_electronic();
  const long dp = space.dim_photon();
  const CMat id_el = CMat::Identity(de, de);
  const CMat id_ph = CMat::Identity(dp, dp);

  CMat el = electronic_kron(space, mc.t_eff.cast<cplx>());
  for (const auto& l : mc.electronic_fields.vectors) {
    const CMat f = electronic_kron(space, l.cast<cplx>());
    el += 0.5 * f * f;
  }
  CMat ph = CMat::Zero(dp, dp);
  for (long u = 0; u < dp; ++u)
    for (int a = 0; a < mc.n_modes(); ++a) {
      const long n = (u / space.photon_stride(a)) % space.photon_dims[a];
      ph(u, u) += mc.photon_energies[a](n);
    }
  ph.diagonal().array() += mc.constant;

  CMat cross = CMat::Zero(de * dp, de * dp);
  for (const auto& mf : mc.mixed_fields) {
    const CMat x = photon_position_matrix(space, mf.boson_mode).cast<cplx>();
    ph += 0.5 * mf.boson_scale * mf.boson_scale * (x * x);
    if (mf.fermion_part.size() > 0) {
      const CMat f = electronic_kron(space, mf.fermion_part);
      el += 0.5 * f * f;
      // (F + bX)^2 = F^2 + 2 b F X + b^2 X^2 with commuting factors
      cross += kron(f, CMat(mf.boson_scale * x));
    }
  }
  return kron(el, id_ph) + kron(id_el, ph) + cross;
}

FCIResult fci_ground_state(const DSEModifiedIntegrals& dse, const CavitySpec& cav, long limit) {
  FCIResult res;
  res.space = FCISpace::build(dse.n_orb, dse.n_alpha, dse.n_beta, cav, limit);
  const Mat h = pf_hamiltonian_matrix(res.space, dse, cav);
  const Eigen::SelfAdjointEigenSolver<Mat> solver(h);
  if (solver.info() != Eigen::Success) throw Error("fci_ground_state: diagonalization failed");
  res.energy = solver.eigenvalues()(0);
  res.state = solver.eigenvectors().col(0);
  return res;
}

CVec dense_state(const FCISpace& space, const CMat& slater_alpha, const CMat& slater_beta,
                 std::span<const CVec> photon_vectors) {
  auto minors = [&](const std::vector<std::uint64_t>& strings, const CMat& phi) {
    CVec out(strings.size());
    const auto n = phi.cols();
    for (std::size_t i = 0; i < strings.size(); ++i) {
      if (n == 0) {
        out(i) = 1.0;
        continue;
      }
      CMat sub(n, n);
      Eigen::Index row = 0;
      for (int p = 0; p < space.n_orb; ++p)
        if (strings[i] >> p & 1) sub.row(row++) = phi.row(p);
      out(i) = sub.determinant();
    }
    return out;
  };
  const CVec ca = minors(space.alpha_strings, slater_alpha);
  const CVec cb = minors(space.beta_strings, slater_beta);
  const long dp = space.dim_photon();
  CVec cp(dp);
  for (long u = 0; u < dp; ++u) {
    cplx amp{1.0, 0.0};
    for (std::size_t a = 0; a < photon_vectors.size(); ++a)
      amp *= photon_vectors[a]((u / space.photon_stride(static_cast<int>(a))) % space.photon_dims[a]);
    cp(u) = amp;
  }
  return kron(CMat(kron(CMat(ca), CMat(cb))), CMat(cp));
}

CVec dense_state(const FCISpace& space, const Walker& w) {
  return dense_state(space, w.slater_alpha, w.slater_beta, w.photon_vectors);
}

CVec dense_state(const FCISpace& space, const TrialState& trial) {
  std::vector<CVec> photons;
  for (const auto& v : trial.photon_amplitudes) photons.push_back(v.cast<cplx>());
  return dense_state(space, trial.orbitals_alpha, trial.orbitals_beta, photons);
}

ImaginaryTimeCurve exact_imaginary_time_curve(const DSEModifiedIntegrals& dse,
                                              const CavitySpec& cav, const TrialState& trial,
                                              std::span<const double> taus, long limit) {
  const auto space = FCISpace::build(dse.n_orb, dse.n_alpha, dse.n_beta, cav, limit);
  const Eigen::SelfAdjointEigenSolver<Mat> solver(pf_hamiltonian_matrix(space, dse, cav));
  const Vec& e = solver.eigenvalues();
  const CVec psi = dense_state(space, trial);
  const CVec c = solver.eigenvectors().transpose().cast<cplx>() * psi;
  const Vec w = c.cwiseAbs2();

  ImaginaryTimeCurve curve;
  // weight of the (possibly degenerate) ground manifold
  double ground = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k)
    if (e(k) - e(0) < 1e-10) ground += w(k);
  curve.ground_overlap = std::sqrt(ground / psi.squaredNorm());
  if (curve.ground_overlap < 1e-12)
    throw Error("exact_imaginary_time_curve: trial state is orthogonal to the ground state");
  curve.small_overlap = curve.ground_overlap < 1e-8;
  for (double tau : taus) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index k = 0; k < e.size(); ++k) {
      const double f = w(k) * std::exp(-tau * (e(k) - e(0)));
      num += f * e(k);
      den += f;
    }
    curve.energies.push_back(num / den);
  }
  return curve;
}

}  // namespace qedafqmc
