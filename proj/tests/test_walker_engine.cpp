// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

using namespace qedafqmc;
using Catch::Matchers::WithinAbs;

namespace {

struct Setup {
  IntegralSet ints;
  CavitySpec cav;
  DSEModifiedIntegrals dse;
  CholeskyFactors chol;
  MCHamiltonian mc;
  TrialState trial;
};

Setup make_setup(const std::string& fixture, std::vector<double> params, std::vector<ModeSpec> modes,
                 DecouplingScheme scheme = DecouplingScheme::two_field) {
  Setup s;
  auto fx = build_fixture(fixture, params);
  s.ints = fx.integrals;
  s.cav.modes = std::move(modes);
  s.dse = fold_dse(s.ints, s.cav);
  s.chol = cholesky_decompose(s.dse.v_tilde);
  s.mc = assemble_mc_hamiltonian(s.dse, s.chol, s.cav, scheme);
  s.trial = build_trial(s.dse, s.cav);
  return s;
}

Setup single_level_mode(double g = 0.1, int n_max = 4) {
  return make_setup("single_level", {-1.0, 0.5}, {make_diagonal_mode(1, 1.0, n_max, g)});
}

double mixed_energy(std::span<const Walker> walkers, const Setup& s) {
  cplx num{0.0, 0.0}, den{0.0, 0.0};
  for (const auto& w : walkers) {
    if (!w.alive()) continue;
    num += w.complex_weight() * local_energy(w, s.trial, s.dse, s.chol, s.cav).total;
    den += w.complex_weight();
  }
  return num.real() / den.real();
}

}  // namespace

TEST_CASE("trial orbitals", "[walker_engine]") {
  const auto level = make_setup("single_level", {-1.0, 0.5}, {});
  CHECK_THAT(std::abs(level.trial.orbitals_alpha(0, 0)), WithinAbs(1.0, 1e-12));
  CHECK_THAT(std::abs(level.trial.orbitals_beta(0, 0)), WithinAbs(1.0, 1e-12));

  const auto dimer = make_setup("hubbard_dimer", {1.0, 4.0}, {});
  REQUIRE(dimer.trial.orbitals_alpha.cols() == 1);
  const CVec bonding = CVec::Constant(2, 1.0 / std::sqrt(2.0));
  CHECK_THAT(std::abs(bonding.dot(dimer.trial.orbitals_alpha.col(0))), WithinAbs(1.0, 1e-10));
  CHECK_THAT(std::abs(bonding.dot(dimer.trial.orbitals_beta.col(0))), WithinAbs(1.0, 1e-10));

  CavitySpec cav;
  cav.modes.push_back(make_diagonal_mode(1, 1.0, 5, 0.1));
  const auto dse = fold_dse(level.ints, cav);
  const std::vector<int> occupation{1};
  const auto excited = build_trial(dse, cav, occupation);
  CHECK(excited.photon_amplitudes[0] == Vec::Unit(6, 1));
  const std::vector<int> too_high{6};
  CHECK_THROWS(build_trial(dse, cav, too_high));
}

TEST_CASE("propagator factors", "[walker_engine]") {
  auto s = single_level_mode(0.1, 2);
  const double dt = 0.01;
  const auto prop = build_propagator(s.mc, dt);
  CHECK_THAT(prop.photon_half_decay[0](0), WithinAbs(std::exp(-dt / 4), 1e-15));
  CHECK_THAT(prop.photon_half_decay[0](1), WithinAbs(std::exp(-3 * dt / 4), 1e-15));
  CHECK_THAT(prop.photon_half_decay[0](2), WithinAbs(std::exp(-5 * dt / 4), 1e-15));

  const auto& q = prop.boson_quadrature[0];
  CHECK((q.vectors * q.values.asDiagonal() * q.vectors.transpose() - position_operator(2))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  s.mc.t_eff.setZero();
  const auto flat = build_propagator(s.mc, dt);
  CHECK((flat.exp_half_T - CMat::Identity(1, 1)).cwiseAbs().maxCoeff() <= 1e-15);

  const auto ints = testing::random_integrals(4, 2, 2, 3);
  const auto dse = fold_dse(ints, CavitySpec{});
  const auto mc = assemble_mc_hamiltonian(dse, cholesky_decompose(dse.v_tilde), CavitySpec{},
                                          DecouplingScheme::two_field);
  const auto p4 = build_propagator(mc, 0.05);
  const Mat reference = (-0.025 * mc.t_eff).exp();
  CHECK((p4.exp_half_T - reference.cast<cplx>()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(p4.n_fields() == mc.n_fields());
  CHECK_THROWS(build_propagator(mc, 0.0));
}

TEST_CASE("field-averaged step has third-order local error", "[walker_engine]") {
  const auto s = single_level_mode(0.1, 4);
  const auto space = FCISpace::build(1, 1, 1, s.cav);
  const Mat h = pf_hamiltonian_matrix(space, s.dse, s.cav);
  std::vector<double> errors;
  for (double dt : {0.04, 0.02}) {
    const auto prop = build_propagator(s.mc, dt);
    const CMat step = testing::averaged_step_matrix(space, prop, s.trial);
    const Mat exact = (-dt * h).exp();
    const Eigen::JacobiSVD<CMat> svd(step - exact.cast<cplx>());
    errors.push_back(svd.singularValues()(0));
  }
  const double ratio = errors[0] / errors[1];
  INFO("errors " << errors[0] << " " << errors[1]);
  CHECK(ratio > 7.0);
  CHECK(ratio < 9.0);
}

TEST_CASE("force bias", "[walker_engine]") {
  SECTION("vanishes at the trial without coupling") {
    const auto s = make_setup("hubbard_dimer", {1.0, 4.0}, {make_diagonal_mode(2, 1.0, 4, 0.0)});
    const auto prop = build_propagator(s.mc, 0.01, 0.0, 1.0, &s.trial);
    const CVec bias = compute_force_bias(make_walker(s.trial), s.trial, prop);
    CHECK(bias.size() == s.chol.count());
    CHECK(bias.cwiseAbs().maxCoeff() <= 1e-14);
  }
  SECTION("matches a dense expectation on one level") {
    const auto s = single_level_mode(0.1, 4);
    const double dt = 0.01;
    const auto prop = build_propagator(s.mc, dt);
    const auto space = FCISpace::build(1, 1, 1, s.cav);
    const auto ops = mc_operators_dense(space, s.mc);
    const CVec psi = dense_state(space, s.trial);
    const CVec bias = compute_force_bias(make_walker(s.trial), s.trial, prop);
    REQUIRE(bias.size() == static_cast<Eigen::Index>(ops.fields.size()));
    for (std::size_t k = 0; k < ops.fields.size(); ++k) {
      const cplx expect = -kI * std::sqrt(dt) * psi.dot(ops.fields[k] * psi) / psi.squaredNorm();
      CHECK(std::abs(bias(k) - expect) <= 1e-12);
    }
    // the electronic field: -sqrt(-dt) sum_pq L_pq G_pq with G the trial projector (both spins)
    const double l = s.chol.vectors[0](0, 0);
    CHECK(std::abs(bias(0) - (-kI * std::sqrt(dt) * 2.0 * l)) <= 1e-12);
  }
  SECTION("is clamped to the cap") {
    const auto s = single_level_mode(0.1, 4);
    const auto prop = build_propagator(s.mc, 100.0, 0.0, 1.0);
    const CVec bias = compute_force_bias(make_walker(s.trial), s.trial, prop);
    CHECK_THAT(std::abs(bias(0)), WithinAbs(1.0, 1e-14));
    const auto loose = build_propagator(s.mc, 100.0, 0.0, 1e9);
    CHECK(std::abs(compute_force_bias(make_walker(s.trial), s.trial, loose)(0)) > 10.0);
  }
}

TEST_CASE("rng streams", "[walker_engine]") {
  RngStream a(1, 2, 3), b(1, 2, 3), c(1, 2, 4), d(2, 2, 3);
  const auto a0 = a();
  CHECK(a0 == b());
  CHECK(a0 != c());
  CHECK(a0 != d());
  RngStream n(5, 0, 0);
  double sum = 0, sq = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double x = n.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / count) < 0.01);
  CHECK(std::abs(sq / count - 1.0) < 0.01);
  RngStream u(9, 9, 9);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
  }
}

TEST_CASE("propagation is deterministic", "[walker_engine]") {
  const auto s = make_setup("hubbard_dimer", {1.0, 4.0}, {make_diagonal_mode(2, 1.0, 5, 0.1)});
  const auto prop = build_propagator(s.mc, 0.01, 0.0, 1.0, &s.trial);
  for (auto constraint : {Constraint::free, Constraint::phaseless}) {
    Walker a = make_walker(s.trial), b = make_walker(s.trial);
    for (int step = 0; step < 20; ++step) {
      RngStream ra(42, 0, step), rb(42, 0, step);
      propagate_step(a, prop, s.trial, ra, constraint);
      propagate_step(b, prop, s.trial, rb, constraint);
    }
    CHECK(a.slater_alpha == b.slater_alpha);
    CHECK(a.photon_vectors[0] == b.photon_vectors[0]);
    CHECK(a.weight == b.weight);
    CHECK(a.overlap == b.overlap);
  }
}

TEST_CASE("zero coupling propagates electrons exactly as without the cavity", "[walker_engine]") {
  const auto bare = make_setup("hubbard_dimer", {1.0, 4.0}, {});
  const auto qed = make_setup("hubbard_dimer", {1.0, 4.0}, {make_diagonal_mode(2, 1.3, 5, 0.0)});
  const auto pb = build_propagator(bare.mc, 0.01, 0.0, 1.0, &bare.trial);
  const auto pq = build_propagator(qed.mc, 0.01, 0.0, 1.0, &qed.trial);
  Walker wb = make_walker(bare.trial), wq = make_walker(qed.trial);
  for (int step = 0; step < 30; ++step) {
    RngStream rb(7, 3, step), rq(7, 3, step);
    propagate_step(wb, pb, bare.trial, rb, Constraint::phaseless);
    propagate_step(wq, pq, qed.trial, rq, Constraint::phaseless);
    if (step % 10 == 9) {
      reorthogonalize(wb);
      reorthogonalize(wq);
    }
  }
  CHECK(wb.slater_alpha == wq.slater_alpha);
  CHECK(wb.slater_beta == wq.slater_beta);
  const CVec photon = wq.photon_vectors[0];
  CHECK(photon.tail(photon.size() - 1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(photon(0)) > 0.0);
}

TEST_CASE("one free step matches dense short-time projection", "[walker_engine]") {
  const auto s = single_level_mode(0.1, 4);
  const double dt = 0.02;
  const auto prop = build_propagator(s.mc, dt);
  const int n = 100000;
  std::vector<Walker> walkers(n, make_walker(s.trial));
  std::vector<double> e(n);
  cplx wsum{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    RngStream rng(2718, i, 1);
    propagate_step(walkers[i], prop, s.trial, rng, Constraint::free);
    wsum += walkers[i].complex_weight();
  }
  const double estimate = mixed_energy(walkers, s);
  // standard error of the ratio estimator by the delta method
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double el = local_energy(walkers[i], s.trial, s.dse, s.chol, s.cav).total.real();
    const double wi = walkers[i].complex_weight().real();
    var += std::pow(wi * (el - estimate), 2);
  }
  const double se = std::sqrt(var) / wsum.real();
  const std::vector<double> taus{dt};
  const double reference = exact_imaginary_time_curve(s.dse, s.cav, s.trial, taus).energies[0];
  INFO("estimate " << estimate << " reference " << reference << " se " << se);
  CHECK(std::abs(estimate - reference) <= 3.0 * se);
}

TEST_CASE("reorthogonalization keeps the state", "[walker_engine]") {
  const auto ints = testing::random_integrals(4, 2, 2, 77);
  CavitySpec cav;
  cav.modes.push_back(testing::random_mode(4, 1.0, 4, 0.1, 0.0, 5));
  const auto dse = fold_dse(ints, cav);
  const auto chol = cholesky_decompose(dse.v_tilde);
  const auto trial = build_trial(dse, cav);

  SECTION("orthonormal blocks are left alone") {
    Walker w = make_walker(trial);
    const cplx before = w.overlap;
    reorthogonalize(w);
    CHECK(std::abs(w.overlap - before) <= 1e-14);
    CHECK((w.slater_alpha * w.slater_alpha.adjoint() - trial.orbitals_alpha * trial.orbitals_alpha.adjoint())
              .cwiseAbs()
              .maxCoeff() <= 1e-14);
  }
  SECTION("a scaled block is absorbed") {
    Walker w = make_walker(trial);
    w.slater_alpha *= 7.0;
    w.slater_beta *= 7.0;
    w.overlap = overlap(w, trial);
    reorthogonalize(w);
    CHECK_THAT(w.log_absorbed.real(), WithinAbs(4.0 * std::log(7.0), 1e-12));
    CHECK(std::abs(w.overlap - overlap(w, trial)) <= 1e-12);
    CHECK((w.slater_alpha * w.slater_alpha.adjoint() - trial.orbitals_alpha * trial.orbitals_alpha.adjoint())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
  SECTION("mixed energy is unchanged") {
    const auto mc = assemble_mc_hamiltonian(dse, chol, cav, DecouplingScheme::two_field);
    const auto prop = build_propagator(mc, 0.05, 0.0, 1.0, &trial);
    Walker w = make_walker(trial);
    for (int step = 0; step < 25; ++step) {
      RngStream rng(1, 1, step);
      propagate_step(w, prop, trial, rng, Constraint::free);
    }
    const cplx before = local_energy(w, trial, dse, chol, cav).total;
    const CVec dense_before = dense_state(FCISpace::build(4, 2, 2, cav), w);
    const cplx scale_before = w.overlap;
    reorthogonalize(w);
    CHECK(w.steps_since_orth == 0);
    CHECK(std::abs(local_energy(w, trial, dse, chol, cav).total - before) <= 1e-10);
    CHECK(std::abs(w.overlap - overlap(w, trial)) <= 1e-10 * std::abs(w.overlap));
    const CVec dense_after = dense_state(FCISpace::build(4, 2, 2, cav), w);
    // same ray, rescaled by the absorbed factor
    const cplx ratio = scale_before / w.overlap;
    CHECK((dense_before - ratio * dense_after).cwiseAbs().maxCoeff() <= 1e-10 * dense_before.norm());
  }
}

TEST_CASE("a global trial phase changes nothing", "[walker_engine]") {
  const auto s = make_setup("hubbard_dimer", {1.0, 2.0}, {make_diagonal_mode(2, 1.0, 4, 0.2)});
  TrialState rotated = s.trial;
  rotated.orbitals_alpha *= std::polar(1.0, 0.7);
  const auto pa = build_propagator(s.mc, 0.01, 0.0, 1.0, &s.trial);
  const auto pb = build_propagator(s.mc, 0.01, 0.0, 1.0, &rotated);
  Walker a = make_walker(s.trial), b = make_walker(rotated);
  for (int step = 0; step < 40; ++step) {
    RngStream ra(3, 0, step), rb(3, 0, step);
    propagate_step(a, pa, s.trial, ra, Constraint::phaseless);
    propagate_step(b, pb, rotated, rb, Constraint::phaseless);
  }
  CHECK_THAT(b.weight, WithinAbs(a.weight, 1e-10 * a.weight));
  const cplx ea = local_energy(a, s.trial, s.dse, s.chol, s.cav).total;
  const cplx eb = local_energy(b, rotated, s.dse, s.chol, s.cav).total;
  CHECK(std::abs(ea - eb) <= 1e-10);
}

TEST_CASE("constraint names", "[walker_engine]") {
  CHECK(parse_constraint("free") == Constraint::free);
  CHECK(parse_constraint("phaseless") == Constraint::phaseless);
  CHECK(to_string(Constraint::phaseless) == "phaseless");
  CHECK_THROWS(parse_constraint("constrained"));
}
