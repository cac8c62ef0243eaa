// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "qedafqmc/pf_hamiltonian.hpp"

#include <cmath>
#include <string>

namespace qedafqmc {

DSEModifiedIntegrals fold_dse(const IntegralSet& ints, const CavitySpec& cav, bool include_dse) {
  check_compatible(ints, cav);
  const int m = ints.n_orb;

  DSEModifiedIntegrals out;
  out.n_orb = m;
  out.n_alpha = ints.n_alpha;
  out.n_beta = ints.n_beta;
  out.core_energy = ints.core_energy;
  out.h_tilde = ints.oei;
  out.v_tilde = ints.eri;
  out.q_alpha_sum = Mat::Zero(m, m);
  if (!include_dse) return out;

  for (const auto& mode : cav.modes) {
    if (mode.nuclear_projection != 0.0)
      throw Error("fold_dse: nuclear projection must be folded into the coupling first");
    const Mat& g = mode.coupling;
    out.q_alpha_sum -= g * g;
    auto vm = out.v_tilde.as_matrix();
    const Eigen::Map<const Vec> gv(g.data(), m * m);
    // Column-major flattening of a symmetric g matches the (pq) = p*M+q index.
    vm += gv * gv.transpose();
  }
  out.h_tilde -= 0.5 * out.q_alpha_sum;
  return out;
}

CholeskyFactors cholesky_decompose(const Eri& v, double tolerance) {
  if (!(tolerance > 0.0)) throw Error("cholesky_decompose: tolerance must be positive");
  const int m = v.n_orb();
  const int n = m * m;
  const auto vm = v.as_matrix();

  CholeskyFactors out;
  out.tolerance = tolerance;
  Vec diag = vm.diagonal();
  std::vector<Vec> cols;  // flattened vectors, (pq) = p*M+q

  while (static_cast<int>(cols.size()) < n) {
    Eigen::Index pivot = 0;
    const double dmax = diag.maxCoeff(&pivot);
    const double dmin = diag.minCoeff();
    if (dmin < -10.0 * tolerance) {
      Eigen::Index bad = 0;
      diag.minCoeff(&bad);
      throw Error("cholesky_decompose: tensor not positive semi-definite (pivot (" +
                  std::to_string(bad / m) + "," + std::to_string(bad % m) +
                  "), residual " + std::to_string(dmin) + ")");
    }
    if (dmax <= tolerance) break;

    Vec col = vm.col(pivot);
    for (const auto& c : cols) col -= c(pivot) * c;
    col /= std::sqrt(dmax);
    diag -= col.cwiseAbs2();
    diag(pivot) = 0.0;
    cols.push_back(std::move(col));
  }

  out.vectors.reserve(cols.size());
  for (const auto& c : cols) {
    // stored (pq) = p*M+q, i.e. row-major, so transpose the column-major map
    Mat l = Eigen::Map<const Mat>(c.data(), m, m).transpose();
    out.vectors.push_back(0.5 * (l + l.transpose()));
  }
  return out;
}

double cholesky_reconstruction_error(const Eri& v, const CholeskyFactors& chol) {
  const int m = v.n_orb();
  Mat approx = Mat::Zero(m * m, m * m);
  for (const auto& l : chol.vectors) {
    Vec flat(m * m);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) flat(p * m + q) = l(p, q);
    approx += flat * flat.transpose();
  }
  if (m == 0) return 0.0;
  return (v.as_matrix() - approx).cwiseAbs().maxCoeff();
}

DecouplingScheme parse_scheme(std::string_view text) {
  if (text == "two" || text == "two_field" || text == "2") return DecouplingScheme::two_field;
  if (text == "three" || text == "three_field" || text == "3") return DecouplingScheme::three_field;
  throw Error("unknown decoupling scheme '" + std::string(text) + "'");
}

std::string_view to_string(DecouplingScheme s) {
  return s == DecouplingScheme::two_field ? "two_field" : "three_field";
}

Mat position_operator(int n_max) {
  Mat x = Mat::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) x(n, n - 1) = x(n - 1, n) = std::sqrt(static_cast<double>(n));
  return x;
}

MCHamiltonian assemble_mc_hamiltonian(const DSEModifiedIntegrals& dse, const CholeskyFactors& chol,
                                      const CavitySpec& cav, DecouplingScheme scheme) {
  const int m = dse.n_orb;
  for (const auto& l : chol.vectors)
    if (l.rows() != m || l.cols() != m) throw Error("assemble_mc_hamiltonian: Cholesky shape");
  for (const auto& mode : cav.modes)
    if (mode.coupling.rows() != m) throw Error("assemble_mc_hamiltonian: cavity NORB mismatch");

  MCHamiltonian mc;
  mc.n_orb = m;
  mc.n_alpha = dse.n_alpha;
  mc.n_beta = dse.n_beta;
  mc.scheme = scheme;
  mc.electronic_fields = chol;
  mc.constant = dse.core_energy;

  // T = h~ - 1/2 sum_g L_g L_g (symmetric L)
  mc.t_eff = dse.h_tilde;
  for (const auto& l : chol.vectors) mc.t_eff -= 0.5 * l * l;

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < cav.n_modes(); ++a) {
    const auto& mode = cav.modes[a];
    mc.omegas.push_back(mode.omega);
    Vec e(mode.n_max + 1);
    for (int n = 0; n <= mode.n_max; ++n) e(n) = mode.omega * (n + 0.5);
    mc.photon_energies.push_back(std::move(e));

    const bool coupled = m > 0 && mode.coupling.cwiseAbs().maxCoeff() >= kMixedFieldPruneThreshold;
    if (!coupled) continue;

    const CMat g = mode.coupling.cast<cplx>();
    const cplx b(std::sqrt(mode.omega / 2.0), 0.0);
    auto push = [&](CMat f, cplx bs, MixedRole role, int sign) {
      mc.mixed_fields.push_back({std::move(f), a, bs, scheme, role, sign});
    };
    if (scheme == DecouplingScheme::two_field) {
      // F B = 1/2 [ ((F+B)/sqrt2)^2 + (i(F-B)/sqrt2)^2 ]
      push(inv_sqrt2 * g, inv_sqrt2 * b, MixedRole::sum, +1);
      push(kI * inv_sqrt2 * g, -kI * inv_sqrt2 * b, MixedRole::difference, -1);
    } else {
      // F B = 1/2 [ (F+B)^2 + (iF)^2 + (iB)^2 ]
      push(g, b, MixedRole::sum, +1);
      push(kI * g, cplx(0.0, 0.0), MixedRole::fermion, -1);
      push(CMat::Zero(m, m), kI * b, MixedRole::boson, -1);
    }
  }
  return mc;
}

}  // namespace qedafqmc
