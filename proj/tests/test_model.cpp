#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "tpe/evolution.hpp"
#include "tpe/model.hpp"
#include "tpe/steady.hpp"

using namespace tpe;
using Catch::Approx;

namespace {
double max_abs(const DenseMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
}  // namespace

TEST_CASE("two-level Hamiltonian matrix elements", "[model]") {
  const SpaceSpec s(2, 2, 4);
  const TwoLevelParams p;
  const Operator h = build_h_two_level(p, s);
  const Index e00 = s.index({excited, 0, 0});
  CHECK(h.element(s.index({ground, 1, 0}), e00).real() == Approx(p.g1));
  CHECK(h.element(s.index({ground, 0, 2}), e00).real() == Approx(std::sqrt(2.0) * p.g2));
  CHECK(h.hermitian());
  CHECK(h.hermiticity_defect() < 1e-12);

  const oracle::TwoLevel t = oracle::two_level_ops(2, 4);
  CHECK(max_abs(h.dense() - oracle::hamiltonian(t, {})) < 1e-14);
}

TEST_CASE("M1 block eigenvalues", "[model]") {
  const SpaceSpec s(2, 1, 2);
  const DenseMatrix h = build_h_two_level(TwoLevelParams{}, s).dense();
  const Index idx[3] = {s.index({excited, 0, 0}), s.index({ground, 1, 0}), s.index({ground, 0, 2})};
  Eigen::Matrix3cd m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = h(idx[r], idx[c]);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(m);
  CHECK(es.eigenvalues()(0) == Approx(-1.00995).epsilon(1e-5));
  CHECK(std::abs(es.eigenvalues()(1)) < 1e-14);
  CHECK(es.eigenvalues()(2) == Approx(1.00995).epsilon(1e-5));
}

TEST_CASE("lab frame adds the bare energies", "[model]") {
  const SpaceSpec s(2, 1, 2);
  TwoLevelParams p;
  CHECK_THROWS_AS(build_h_two_level(p, s, Frame::lab), Error);
  p.omega0 = 400.0;
  const Operator d = build_h_two_level(p, s, Frame::lab) - build_h_two_level(p, s);
  // e,0,0 -> +w/2 ; g,1,0 -> -w/2 + w ; g,0,2 -> -w/2 + w
  CHECK(d.element(s.index({excited, 0, 0}), s.index({excited, 0, 0})).real() == Approx(200.0));
  CHECK(d.element(s.index({ground, 1, 0}), s.index({ground, 1, 0})).real() == Approx(200.0));
  CHECK(d.element(s.index({ground, 0, 2}), s.index({ground, 0, 2})).real() == Approx(200.0));
}

TEST_CASE("three-level Hamiltonian", "[model]") {
  const SpaceSpec s(3, 1, 3);
  const ThreeLevelParams p;
  const Operator h = build_h_three_level(p, s);
  CHECK(h.element(s.index({intermediate, 0, 0}), s.index({intermediate, 0, 0})).real() == Approx(p.delta));
  CHECK(h.element(s.index({ground, 0, 1}), s.index({intermediate, 0, 0})).real() == Approx(p.g3));
  CHECK(h.element(s.index({intermediate, 0, 1}), s.index({excited, 0, 0})).real() == Approx(p.g4));
  CHECK(h.hermiticity_defect() < 1e-12);
  CHECK_THROWS_AS(build_h_three_level(p, SpaceSpec(2, 1, 2)), Error);
}

TEST_CASE("transform generator S", "[model]") {
  const SpaceSpec s(3, 1, 4);
  ThreeLevelParams p;
  p.g1 = 0.1;
  const Operator S = transform_generator_S(p, s);
  CHECK(max_abs((S + S.adjoint()).dense()) == 0.0);
  CHECK(S.element(s.index({intermediate, 0, 1}), s.index({excited, 0, 0})).real() == Approx(p.g4 / p.delta));
  ThreeLevelParams z = p;
  z.g3 = z.g4 = 0.0;
  CHECK(transform_generator_S(z, s).max_abs() == 0.0);
  z.delta = 0.0;
  CHECK_THROWS_AS(transform_generator_S(z, s), Error);

  // e^S H3 e^-S: the |e,0,0> <-> |g,0,2> element approaches sqrt(2) g2 and the
  // direct |e,0,0> <-> |i,0,1> coupling is removed to first order.
  const DenseMatrix sd = S.dense();
  const DenseMatrix u = sd.exp();
  const DenseMatrix uinv = (-sd).exp();
  const DenseMatrix ht = u * build_h_three_level(p, s).dense() * uinv;
  const double g2 = effective_g2(p.g3, p.g4, p.delta);
  const double el = ht(s.index({ground, 0, 2}), s.index({excited, 0, 0})).real();
  CHECK(el == Approx(std::sqrt(2.0) * g2).epsilon(1e-3));
  CHECK(std::abs(ht(s.index({intermediate, 0, 1}), s.index({excited, 0, 0}))) < 0.05 * p.g4);
}

TEST_CASE("effective g2", "[model]") {
  CHECK(effective_g2(1.0, 1.0, 100.0) == Approx(-0.01));
  CHECK(effective_g2(0.0, 0.0, 5.0) == 0.0);
  CHECK(effective_g2(1.0, 2.0, 10.0) == Approx(-0.15));
  CHECK_THROWS_AS(effective_g2(1.0, 1.0, 0.0), Error);
  // operating point: |g2|/g1 = 0.1 at g1 = 0.1 g', delta = 100 g'
  CHECK(std::abs(effective_g2(1.0, 1.0, 100.0)) / 0.1 == Approx(0.1));
}

TEST_CASE("collapse operators", "[model]") {
  const SpaceSpec s(2, 3, 6);
  TwoLevelParams p;
  p.pump = 0.0;
  CHECK(build_collapse_ops(p, s).size() == 3);
  p.pump = 0.005;
  const auto cs = build_collapse_ops(p, s);
  REQUIRE(cs.size() == 4);
  CHECK(cs[0].channel == Channel::a_photon);
  Eigen::JacobiSVD<DenseMatrix> svd(cs[0].op.dense());
  CHECK(svd.singularValues()(0) == Approx(std::sqrt(0.02) * std::sqrt(3.0)));

  // three-level: only |g><e| and |e><g| act on the atom
  const SpaceSpec s3(3, 1, 2);
  const auto c3 = build_collapse_ops(ThreeLevelParams{}, s3);
  REQUIRE(c3.size() == 4);
  for (const auto& c : c3) {
    if (c.channel != Channel::decay && c.channel != Channel::pump) continue;
    const DenseMatrix m = c.op.dense();
    for (Index i = 0; i < s3.dim(); ++i)
      if (s3.label(i).atom == intermediate) {
        CHECK(m.row(i).cwiseAbs().maxCoeff() == 0.0);
        CHECK(m.col(i).cwiseAbs().maxCoeff() == 0.0);
      }
  }
}

TEST_CASE("effective Hamiltonian", "[model]") {
  const SpaceSpec s(2, 3, 6);
  const TwoLevelParams p;
  const Operator he = build_h_effective(p, s);
  const DenseMatrix anti = (he.dense() - build_h_two_level(p, s).dense());
  for (Index i = 0; i < s.dim(); ++i) {
    const BasisLabel l = s.label(i);
    const double expected = -0.5 * (p.kappa1 * l.a + p.kappa2 * l.b + (l.atom == ground ? p.pump : p.gamma));
    CHECK(anti(i, i).imag() == Approx(expected).margin(1e-15));
    CHECK(std::abs(anti(i, i).real()) < 1e-15);
  }
  CHECK(max_abs(anti - DenseMatrix(anti.diagonal().asDiagonal())) == 0.0);

  TwoLevelParams z = p;
  z.kappa1 = z.kappa2 = z.pump = z.gamma = 0.0;
  CHECK(max_abs(build_h_effective(z, s).dense() - build_h_two_level(z, s).dense()) == 0.0);
}

TEST_CASE("excitation number is conserved by H and H_e", "[model][property]") {
  for (const SpaceSpec s : {SpaceSpec(2, 1, 2), SpaceSpec(2, 3, 6), SpaceSpec(2, 5, 9)}) {
    const Operator n = excitation_number(s);
    for (double g2 : {0.1, -0.3, 0.0}) {
      TwoLevelParams p;
      p.g2 = g2;
      CHECK(commutator(build_h_two_level(p, s), n).max_abs() < 1e-12);
      CHECK(commutator(build_h_effective(p, s), n).max_abs() < 1e-12);
    }
  }
}

TEST_CASE("Liouvillian matches the brute-force superoperator", "[model]") {
  const oracle::TwoLevel t = oracle::two_level_ops(1, 2);
  const oracle::Rates r;
  const oracle::Mat ref = oracle::liouvillian_by_columns(oracle::hamiltonian(t, r), oracle::jumps(t, r));
  const Liouvillian l = build_liouvillian(TwoLevelParams{}, SpaceSpec(2, 1, 2));
  CHECK(max_abs(DenseMatrix(l.matrix()) - ref) < 1e-14);
  CHECK(std::string(Liouvillian::vectorization) == "column-stacking");
}

TEST_CASE("Liouvillian trace preservation", "[model][property]") {
  for (const SpaceSpec s : {SpaceSpec(2, 1, 2), SpaceSpec(2, 3, 6)}) {
    CHECK(build_liouvillian(TwoLevelParams{}, s).trace_preservation_defect() < 1e-10);
  }
  CHECK(build_liouvillian(ThreeLevelParams{}, SpaceSpec(3, 2, 4)).trace_preservation_defect() < 1e-10);
}

TEST_CASE("bare atom decay follows exp(-gamma t)", "[model]") {
  // H = 0 and a single decay channel on the two-level atom with the cavity modes idle.
  const SpaceSpec s(2, 1, 2);
  TwoLevelParams p;
  p.g1 = 1.0;
  p.g2 = 0.0;
  p.kappa1 = p.kappa2 = p.pump = 0.0;
  p.gamma = 0.3;
  const Liouvillian l = build_liouvillian(Operator::zero(s.dim()), build_collapse_ops(p, s), s);
  const DensityOperator rho0 = DensityOperator::from_state(basis_state(s, {excited, 0, 0}));
  const auto series = evolve_expectations(l, rho0, {atom_op(excited, excited, s)}, 0.5, 11, 0.01);
  for (std::size_t k = 0; k < series.time.size(); ++k)
    CHECK(series.values[0][k] == Approx(std::exp(-p.gamma * series.time[k])).epsilon(1e-9));
}

TEST_CASE("steady state is in the Liouvillian kernel", "[model]") {
  const SpaceSpec s(2, 3, 6);
  const Liouvillian l = build_liouvillian(TwoLevelParams{}, s);
  const DensityOperator rho = solve_steady_state(l);
  CHECK((l.matrix() * vectorize(rho.entries())).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("observables depend on g2 only through |g2|", "[model][property]") {
  const SpaceSpec s(2, 2, 4);
  TwoLevelParams p;
  const SteadyReport plus = steady_report(p, s);
  p.g2 = -p.g2;
  const SteadyReport minus = steady_report(p, s);
  CHECK(plus.eta == Approx(minus.eta).epsilon(1e-10));
  CHECK(plus.n_a == Approx(minus.n_a).epsilon(1e-10));
  CHECK(plus.n_b == Approx(minus.n_b).epsilon(1e-10));
}

TEST_CASE("steady state is frame independent", "[model][property]") {
  const SpaceSpec s(2, 2, 4);
  TwoLevelParams p;
  p.omega0 = 40.0;
  const Liouvillian rot = build_liouvillian(build_h_two_level(p, s), build_collapse_ops(p, s), s);
  const Liouvillian lab = build_liouvillian(build_h_two_level(p, s, Frame::lab), build_collapse_ops(p, s), s);
  const SteadyReport a = observables(solve_steady_state(rot), p, s);
  const SteadyReport b = observables(solve_steady_state(lab), p, s);
  CHECK(std::abs(a.eta - b.eta) < 1e-9);
  CHECK(std::abs(a.n_a - b.n_a) < 1e-9);
  CHECK(std::abs(a.n_b - b.n_b) < 1e-9);
  CHECK(std::abs(a.pop_e - b.pop_e) < 1e-9);
}

TEST_CASE("parameter validation", "[model]") {
  TwoLevelParams p;
  p.kappa1 = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.g1 = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.g2 = 2.0;
  CHECK(p.validity_warnings().size() == 1);
  ThreeLevelParams q;
  q.delta = 5.0;
  CHECK(q.validity_warnings().size() == 1);
  CHECK(ThreeLevelParams{}.validity_warnings().empty());
}
