#pragma once

#include <cmath>
#include <complex>
#include <compare>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include "tpe/errors.hpp"

namespace tpe {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using DenseMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr double hermiticity_tol = 1e-12;

enum class Slot { atom, mode_a, mode_b };

// Atom level labels. The third level only exists in three-level spaces.
enum Level : int { ground = 0, excited = 1, intermediate = 2 };

struct BasisLabel {
  int atom = 0;
  int a = 0;
  int b = 0;
  auto operator<=>(const BasisLabel&) const = default;
};

// Truncated atom x mode a x mode b space. Basis index is
// (atom * (na_max+1) + a) * (nb_max+1) + b, i.e. atom slowest and mode b fastest.
class SpaceSpec {
 public:
  SpaceSpec(int atom_levels, int na_max, int nb_max)
      : atom_levels_(atom_levels), na_max_(na_max), nb_max_(nb_max) {
    if (atom_levels != 2 && atom_levels != 3)
      fail(ErrorClass::invalid_space, "atom_levels must be 2 or 3, got " + std::to_string(atom_levels));
    if (na_max < 1) fail(ErrorClass::invalid_space, "na_max must be >= 1, got " + std::to_string(na_max));
    if (nb_max < 2) fail(ErrorClass::invalid_space, "nb_max must be >= 2, got " + std::to_string(nb_max));
  }

  int atom_levels() const noexcept { return atom_levels_; }
  int na_max() const noexcept { return na_max_; }
  int nb_max() const noexcept { return nb_max_; }

  Index dim() const noexcept {
    return static_cast<Index>(atom_levels_) * (na_max_ + 1) * (nb_max_ + 1);
  }

  Index slot_dim(Slot s) const noexcept {
    switch (s) {
      case Slot::atom: return atom_levels_;
      case Slot::mode_a: return na_max_ + 1;
      case Slot::mode_b: return nb_max_ + 1;
    }
    return 0;
  }

  Index index(const BasisLabel& l) const {
    if (l.atom < 0 || l.atom >= atom_levels_ || l.a < 0 || l.a > na_max_ || l.b < 0 || l.b > nb_max_)
      fail(ErrorClass::invalid_space, "basis label out of range");
    return (static_cast<Index>(l.atom) * (na_max_ + 1) + l.a) * (nb_max_ + 1) + l.b;
  }

  BasisLabel label(Index i) const {
    if (i < 0 || i >= dim()) fail(ErrorClass::invalid_space, "basis index out of range");
    const Index nb = nb_max_ + 1;
    const Index na = na_max_ + 1;
    return {static_cast<int>(i / (na * nb)), static_cast<int>((i / nb) % na), static_cast<int>(i % nb)};
  }

  std::string to_string() const {
    return "(" + std::to_string(atom_levels_) + "," + std::to_string(na_max_) + "," +
           std::to_string(nb_max_) + ")";
  }

  bool operator==(const SpaceSpec&) const = default;

 private:
  int atom_levels_;
  int na_max_;
  int nb_max_;
};

class Operator {
 public:
  Operator() = default;

  explicit Operator(SparseMatrix m, bool hermitian = false) : m_(std::move(m)), hermitian_(hermitian) {
    if (m_.rows() != m_.cols()) fail(ErrorClass::dimension_mismatch, "operator must be square");
    m_.makeCompressed();
    if (hermitian_ && hermiticity_defect() > hermiticity_tol)
      fail(ErrorClass::numerical_failure, "operator flagged Hermitian is not");
  }

  static Operator from_dense(const DenseMatrix& d, bool hermitian = false) {
    return Operator(SparseMatrix(d.sparseView(0.0, 0.0)), hermitian);
  }

  static Operator identity(Index dim) {
    SparseMatrix m(dim, dim);
    m.setIdentity();
    return Operator(std::move(m), true);
  }

  static Operator zero(Index dim) { return Operator(SparseMatrix(dim, dim), true); }

  Index dim() const noexcept { return m_.rows(); }
  const SparseMatrix& matrix() const noexcept { return m_; }
  DenseMatrix dense() const { return DenseMatrix(m_); }
  bool hermitian() const noexcept { return hermitian_; }
  cplx element(Index row, Index col) const { return m_.coeff(row, col); }

  Operator adjoint() const { return Operator(SparseMatrix(m_.adjoint()), hermitian_); }

  double max_abs() const {
    double r = 0.0;
    for (Index k = 0; k < m_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m_, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
  }

  double hermiticity_defect() const {
    return Operator(SparseMatrix(m_ - SparseMatrix(m_.adjoint()))).max_abs();
  }

  bool is_diagonal() const {
    for (Index k = 0; k < m_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m_, k); it; ++it)
        if (it.row() != it.col() && it.value() != cplx(0.0)) return false;
    return true;
  }

  friend Operator operator+(const Operator& x, const Operator& y) {
    check_same(x, y);
    return Operator(SparseMatrix(x.m_ + y.m_), x.hermitian_ && y.hermitian_);
  }
  friend Operator operator-(const Operator& x, const Operator& y) {
    check_same(x, y);
    return Operator(SparseMatrix(x.m_ - y.m_), x.hermitian_ && y.hermitian_);
  }
  friend Operator operator*(const Operator& x, const Operator& y) {
    check_same(x, y);
    return Operator(SparseMatrix(x.m_ * y.m_));
  }
  friend Operator operator*(double s, const Operator& x) { return Operator(SparseMatrix(s * x.m_), x.hermitian_); }
  friend Operator operator*(cplx s, const Operator& x) {
    return Operator(SparseMatrix(s * x.m_), x.hermitian_ && s.imag() == 0.0);
  }

 private:
  static void check_same(const Operator& x, const Operator& y) {
    if (x.dim() != y.dim()) fail(ErrorClass::dimension_mismatch, "operator dimensions differ");
  }

  SparseMatrix m_;
  bool hermitian_ = false;
};

inline Operator commutator(const Operator& x, const Operator& y) { return x * y - y * x; }

struct DensityDiagnostics {
  double hermiticity = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
};

class DensityOperator {
 public:
  DensityOperator() = default;
  explicit DensityOperator(DenseMatrix entries) : rho_(std::move(entries)) {
    if (rho_.rows() != rho_.cols()) fail(ErrorClass::dimension_mismatch, "density operator must be square");
  }

  static DensityOperator from_state(const StateVector& psi) {
    const double n = psi.squaredNorm();
    if (!(n > 0.0)) fail(ErrorClass::invalid_parameter, "zero state vector");
    return DensityOperator(psi * psi.adjoint() / n);
  }

  static DensityOperator maximally_mixed(Index dim) {
    return DensityOperator(DenseMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  Index dim() const noexcept { return rho_.rows(); }
  const DenseMatrix& entries() const noexcept { return rho_; }

  DensityDiagnostics diagnostics() const {
    DensityDiagnostics d;
    d.hermiticity = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    d.trace_error = std::abs(rho_.trace() - cplx(1.0));
    const DenseMatrix h = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
  }

  // Checks the invariants: Hermitian and unit trace within 1e-10, eigenvalues >= -1e-8.
  bool valid() const {
    const auto d = diagnostics();
    return d.hermiticity < 1e-10 && d.trace_error < 1e-10 && d.min_eigenvalue >= -1e-8;
  }

 private:
  DenseMatrix rho_;
};

inline StateVector basis_state(const SpaceSpec& spec, const BasisLabel& l) {
  StateVector v = StateVector::Zero(spec.dim());
  v(spec.index(l)) = 1.0;
  return v;
}

inline Operator mode_annihilator(Index dim) {
  if (dim < 2) fail(ErrorClass::invalid_space, "mode dimension must be >= 2");
  SparseMatrix m(dim, dim);
  m.reserve(Eigen::VectorXi::Constant(dim, 1));
  for (Index n = 1; n < dim; ++n) m.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(std::move(m));
}

// |to><from| on an atom with the given number of levels.
inline Operator atom_transition(int to, int from, int levels) {
  if (to < 0 || to >= levels || from < 0 || from >= levels)
    fail(ErrorClass::invalid_space, "atom level out of range");
  SparseMatrix m(levels, levels);
  m.insert(to, from) = 1.0;
  return Operator(std::move(m), to == from);
}

inline Operator sigma_minus(int levels = 2) { return atom_transition(ground, excited, levels); }
inline Operator sigma_plus(int levels = 2) { return atom_transition(excited, ground, levels); }
inline Operator sigma_z(int levels = 2) {
  return atom_transition(excited, excited, levels) - atom_transition(ground, ground, levels);
}

inline Operator embed(const Operator& op, Slot slot, const SpaceSpec& spec) {
  if (op.dim() != spec.slot_dim(slot))
    fail(ErrorClass::invalid_embedding, "operator dimension " + std::to_string(op.dim()) +
                                            " does not match slot dimension " +
                                            std::to_string(spec.slot_dim(slot)));
  auto eye = [](Index n) {
    SparseMatrix m(n, n);
    m.setIdentity();
    return m;
  };
  const SparseMatrix ia = eye(spec.slot_dim(Slot::atom));
  const SparseMatrix ima = eye(spec.slot_dim(Slot::mode_a));
  const SparseMatrix imb = eye(spec.slot_dim(Slot::mode_b));
  const SparseMatrix& o = op.matrix();
  SparseMatrix inner;
  SparseMatrix full;
  switch (slot) {
    case Slot::atom:
      inner = Eigen::kroneckerProduct(ima, imb);
      full = Eigen::kroneckerProduct(o, inner);
      break;
    case Slot::mode_a:
      inner = Eigen::kroneckerProduct(o, imb);
      full = Eigen::kroneckerProduct(ia, inner);
      break;
    case Slot::mode_b:
      inner = Eigen::kroneckerProduct(ima, o);
      full = Eigen::kroneckerProduct(ia, inner);
      break;
  }
  return Operator(std::move(full), op.hermitian());
}

// Mode lowering operator lifted to the full space.
inline Operator lowering(Slot mode, const SpaceSpec& spec) {
  if (mode == Slot::atom) fail(ErrorClass::invalid_embedding, "lowering() takes a mode slot");
  return embed(mode_annihilator(spec.slot_dim(mode)), mode, spec);
}

inline Operator atom_op(int to, int from, const SpaceSpec& spec) {
  return embed(atom_transition(to, from, spec.atom_levels()), Slot::atom, spec);
}

// Exact integer diagonal, rather than the rounded product a^dag a.
inline Operator number_op(Slot mode, const SpaceSpec& spec) {
  if (mode == Slot::atom) fail(ErrorClass::invalid_embedding, "number_op() takes a mode slot");
  SparseMatrix m(spec.dim(), spec.dim());
  m.reserve(Eigen::VectorXi::Constant(spec.dim(), 1));
  for (Index i = 0; i < spec.dim(); ++i) {
    const BasisLabel l = spec.label(i);
    const int n = mode == Slot::mode_a ? l.a : l.b;
    if (n != 0) m.insert(i, i) = static_cast<double>(n);
  }
  return Operator(std::move(m), true);
}

// N = |e><e| + a^dag a + b^dag b / 2, two-level spaces only.
inline Operator excitation_number(const SpaceSpec& spec) {
  if (spec.atom_levels() != 2)
    fail(ErrorClass::unsupported, "excitation number is defined for the two-level model only");
  SparseMatrix m(spec.dim(), spec.dim());
  m.reserve(Eigen::VectorXi::Constant(spec.dim(), 1));
  for (Index i = 0; i < spec.dim(); ++i) {
    const BasisLabel l = spec.label(i);
    const double n = (l.atom == excited ? 1.0 : 0.0) + l.a + 0.5 * l.b;
    if (n != 0.0) m.insert(i, i) = n;
  }
  return Operator(std::move(m), true);
}

// Tr[op rho].
inline cplx expectation(const Operator& op, const DensityOperator& rho) {
  if (op.dim() != rho.dim()) fail(ErrorClass::dimension_mismatch, "expectation: dimension mismatch");
  const SparseMatrix& m = op.matrix();
  const DenseMatrix& r = rho.entries();
  cplx acc = 0.0;
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) acc += it.value() * r(it.col(), it.row());
  return acc;
}

inline cplx expectation(const Operator& op, const StateVector& psi) {
  if (op.dim() != psi.size()) fail(ErrorClass::dimension_mismatch, "expectation: dimension mismatch");
  return psi.dot(op.matrix() * psi);
}

}  // namespace tpe
