#include <catch_amalgamated.hpp>

#include <set>

#include "oracles.hpp"
#include "tpe/model.hpp"

using namespace tpe;
using Catch::Approx;

TEST_CASE("space spec invariants", "[hilbert]") {
  CHECK(SpaceSpec(2, 3, 6).dim() == 2 * 4 * 7);
  CHECK(SpaceSpec(3, 1, 2).dim() == 18);
  CHECK_THROWS_AS(SpaceSpec(4, 1, 2), Error);
  CHECK_THROWS_AS(SpaceSpec(2, 0, 2), Error);
  CHECK_THROWS_AS(SpaceSpec(2, 1, 1), Error);
  try {
    SpaceSpec(2, 1, 1);
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::invalid_space);
  }
}

TEST_CASE("basis ordering round trip", "[hilbert][property]") {
  for (const SpaceSpec s : {SpaceSpec(2, 1, 2), SpaceSpec(2, 3, 6), SpaceSpec(3, 2, 5)}) {
    std::set<BasisLabel> seen;
    for (Index i = 0; i < s.dim(); ++i) {
      const BasisLabel l = s.label(i);
      CHECK(s.index(l) == i);
      seen.insert(l);
    }
    CHECK(static_cast<Index>(seen.size()) == s.dim());
  }
  const SpaceSpec s(2, 1, 2);
  CHECK(s.index({ground, 0, 0}) == 0);
  CHECK(s.index({ground, 0, 1}) == 1);   // mode b fastest
  CHECK(s.index({ground, 1, 0}) == 3);
  CHECK(s.index({excited, 0, 0}) == 6);  // atom slowest
}

TEST_CASE("mode annihilator", "[hilbert]") {
  const Operator a = mode_annihilator(3);
  CHECK(a.element(1, 2).real() == Approx(1.41421356).epsilon(1e-8));
  CHECK(a.element(0, 1).real() == Approx(1.0));
  for (Index r = 0; r < 3; ++r) CHECK(a.element(r, 0) == cplx(0.0));
  CHECK_THROWS_AS(mode_annihilator(1), Error);

  // [a, a^dag] = I - dim |dim-1><dim-1|, compared with a brute-force product.
  const oracle::Mat ao = oracle::ladder(4);
  const oracle::Mat comm = ao * ao.adjoint() - ao.adjoint() * ao;
  const DenseMatrix c = commutator(mode_annihilator(4), mode_annihilator(4).adjoint()).dense();
  CHECK((c - comm).cwiseAbs().maxCoeff() < 1e-14);
  DenseMatrix expected = DenseMatrix::Identity(4, 4);
  expected(3, 3) = 1.0 - 4.0;
  CHECK((c - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("number operators are exact diagonals", "[hilbert][property]") {
  for (Index dim : {3, 5, 9}) {
    const Operator a = mode_annihilator(dim);
    const DenseMatrix n = (a.adjoint() * a).dense();
    for (Index i = 0; i < dim; ++i)
      for (Index j = 0; j < dim; ++j) CHECK(std::abs(n(i, j) - cplx(i == j ? static_cast<double>(i) : 0.0)) < 4e-16 * dim);
    const DenseMatrix nb = number_op(Slot::mode_b, SpaceSpec(2, 1, dim - 1)).dense();
    for (Index i = 0; i < nb.rows(); ++i) CHECK(nb(i, i).real() == static_cast<double>(i % dim));
  }
}

TEST_CASE("embed", "[hilbert]") {
  const SpaceSpec s(2, 2, 3);
  for (Slot slot : {Slot::atom, Slot::mode_a, Slot::mode_b}) {
    const Operator id = embed(Operator::identity(s.slot_dim(slot)), slot, s);
    CHECK((id.dense() - DenseMatrix::Identity(s.dim(), s.dim())).cwiseAbs().maxCoeff() == 0.0);
  }
  const Operator prod = embed(sigma_minus(), Slot::atom, s) * embed(sigma_plus(), Slot::atom, s);
  CHECK((prod.dense() - embed(atom_transition(ground, ground, 2), Slot::atom, s).dense()).cwiseAbs().maxCoeff() == 0.0);

  const Operator x = embed(mode_annihilator(3).adjoint(), Slot::mode_a, s) * embed(sigma_minus(), Slot::atom, s);
  const StateVector out = x.matrix() * basis_state(s, {excited, 0, 0});
  // <g,1,0| = index (0*3 + 1)*4 + 0 = 4
  CHECK(out(4) == cplx(1.0));
  CHECK(out.norm() == Approx(1.0));

  CHECK_THROWS_AS(embed(mode_annihilator(4), Slot::mode_a, s), Error);
  try {
    embed(mode_annihilator(4), Slot::mode_a, s);
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::invalid_embedding);
  }
}

TEST_CASE("embed agrees with a brute-force Kronecker product", "[hilbert]") {
  const SpaceSpec s(2, 2, 3);
  const oracle::Mat ref = oracle::kron(oracle::kron(oracle::eye(2), oracle::eye(3)), oracle::ladder(4));
  CHECK((embed(mode_annihilator(4), Slot::mode_b, s).dense() - ref).cwiseAbs().maxCoeff() == 0.0);
  const oracle::Mat refa = oracle::kron(oracle::kron(oracle::eye(2), oracle::ladder(3)), oracle::eye(4));
  CHECK((lowering(Slot::mode_a, s).dense() - refa).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed preserves spectra with multiplicity", "[hilbert][property]") {
  const SpaceSpec s(2, 2, 3);  // D = 24
  DenseMatrix m(3, 3);
  m << 1.0, cplx(0.5, 0.2), 0.0, cplx(0.5, -0.2), -2.0, 0.3, 0.0, 0.3, 0.7;
  const Operator op = Operator::from_dense(m, true);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> small(m);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> big(embed(op, Slot::mode_a, s).dense());
  const Index mult = s.dim() / 3;
  for (Index k = 0; k < 3; ++k) {
    int count = 0;
    for (Index j = 0; j < s.dim(); ++j)
      if (std::abs(big.eigenvalues()(j) - small.eigenvalues()(k)) < 1e-10) ++count;
    CHECK(count == mult);
  }
}

TEST_CASE("excitation number", "[hilbert]") {
  const SpaceSpec s(2, 2, 4);
  const Operator n = excitation_number(s);
  auto value = [&](BasisLabel l) { return n.element(s.index(l), s.index(l)).real(); };
  CHECK(value({excited, 0, 0}) == 1.0);
  CHECK(value({ground, 0, 1}) == 0.5);
  CHECK(value({ground, 1, 2}) == 2.0);
  CHECK(n.is_diagonal());
  CHECK_THROWS_AS(excitation_number(SpaceSpec(3, 1, 2)), Error);
  try {
    excitation_number(SpaceSpec(3, 1, 2));
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::unsupported);
  }
}

TEST_CASE("expectation", "[hilbert]") {
  const SpaceSpec s(2, 1, 2);
  const DensityOperator mixed = DensityOperator::maximally_mixed(s.dim());
  CHECK(expectation(Operator::identity(s.dim()), mixed).real() == Approx(1.0));
  CHECK(std::abs(expectation(Operator::identity(s.dim()), mixed).imag()) < 1e-15);
  // maximally mixed on D = 12: <a^dag a> = (0 + 1)/2
  CHECK(expectation(number_op(Slot::mode_a, s), mixed).real() == Approx(0.5));
  const DensityOperator vac = DensityOperator::from_state(basis_state(s, {ground, 0, 0}));
  CHECK(expectation(atom_op(ground, ground, s), vac).real() == Approx(1.0));
  CHECK(mixed.valid());
  CHECK_THROWS_AS(expectation(Operator::identity(5), mixed), Error);
}

TEST_CASE("dense view matches sparse storage", "[hilbert]") {
  const SpaceSpec s(2, 3, 6);
  const Operator h = build_h_two_level(TwoLevelParams{}, s);
  const DenseMatrix d = h.dense();
  const Operator back = Operator::from_dense(d, true);
  CHECK((back.dense() - d).cwiseAbs().maxCoeff() == 0.0);
  CHECK(h.hermiticity_defect() < 1e-12);
}
