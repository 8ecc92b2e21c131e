#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tpe/hilbert.hpp"

namespace tpe {

enum class Frame { rotating, lab };

struct TwoLevelParams {
  double g1 = 1.0;
  double g2 = 0.1;
  double kappa1 = 0.02;
  double kappa2 = 1.0;
  double pump = 0.005;
  double gamma = 0.016;
  std::optional<double> omega0;

  void validate() const {
    auto check = [](double v, const char* name) {
      if (!std::isfinite(v) || v < 0.0)
        fail(ErrorClass::invalid_parameter, std::string(name) + " must be finite and >= 0");
    };
    if (!std::isfinite(g1) || g1 <= 0.0) fail(ErrorClass::invalid_parameter, "g1 must be > 0");
    if (!std::isfinite(g2)) fail(ErrorClass::invalid_parameter, "g2 must be finite");
    check(kappa1, "kappa1");
    check(kappa2, "kappa2");
    check(pump, "pump");
    check(gamma, "gamma");
    if (omega0) check(*omega0, "omega0");
  }

  // The b^dag^2 coupling comes from adiabatic elimination of a far-detuned
  // level, which keeps |g2| below g1.
  std::vector<std::string> validity_warnings() const {
    std::vector<std::string> w;
    if (std::abs(g2) > g1) w.push_back("|g2| > g1: outside the validity range of the effective two-photon model");
    return w;
  }

  bool operator==(const TwoLevelParams&) const = default;
};

// Rates in units of g' (the g3 = g4 coupling).
struct ThreeLevelParams {
  double g1 = 0.1;
  double g3 = 1.0;
  double g4 = 1.0;
  double delta = 100.0;
  double kappa1 = 0.002;
  double kappa2 = 0.1;
  double pump = 0.0005;
  double gamma = 0.0016;
  std::optional<double> omega0;

  void validate() const {
    auto check = [](double v, const char* name) {
      if (!std::isfinite(v) || v < 0.0)
        fail(ErrorClass::invalid_parameter, std::string(name) + " must be finite and >= 0");
    };
    check(g1, "g1");
    check(g3, "g3");
    check(g4, "g4");
    if (!std::isfinite(delta)) fail(ErrorClass::invalid_parameter, "delta must be finite");
    check(kappa1, "kappa1");
    check(kappa2, "kappa2");
    check(pump, "pump");
    check(gamma, "gamma");
    if (omega0) check(*omega0, "omega0");
  }

  std::vector<std::string> validity_warnings() const {
    std::vector<std::string> w;
    const double gmax = std::max({g1, g3, g4});
    if (std::abs(delta) < 10.0 * gmax) w.push_back("|delta| < 10 max(g1, g3, g4): adiabatic elimination is poorly justified");
    return w;
  }

  bool operator==(const ThreeLevelParams&) const = default;
};

enum class Channel { a_photon = 0, b_photon = 1, decay = 2, pump = 3 };

inline const char* channel_name(Channel c) noexcept {
  switch (c) {
    case Channel::a_photon: return "A_PHOTON";
    case Channel::b_photon: return "B_PHOTON";
    case Channel::decay: return "DECAY";
    case Channel::pump: return "PUMP";
  }
  return "?";
}

struct CollapseChannel {
  Channel channel;
  double rate;
  Operator op;  // already scaled by sqrt(rate)
};

inline double effective_g2(double g3, double g4, double delta) {
  if (delta == 0.0) fail(ErrorClass::invalid_parameter, "delta must be nonzero");
  return (g3 * g3 + g4 * g4 - 4.0 * g3 * g4) / (2.0 * delta);
}

inline Operator build_h_two_level(const TwoLevelParams& p, const SpaceSpec& spec, Frame frame = Frame::rotating) {
  if (spec.atom_levels() != 2) fail(ErrorClass::unsupported, "two-level Hamiltonian needs atom_levels = 2");
  if (spec.nb_max() < 2) fail(ErrorClass::invalid_space, "nb_max must be >= 2");
  const Operator a = lowering(Slot::mode_a, spec);
  const Operator b = lowering(Slot::mode_b, spec);
  const Operator sm = atom_op(ground, excited, spec);
  const Operator b2 = b * b;
  Operator h = p.g1 * (a.adjoint() * sm + a * sm.adjoint()) + p.g2 * (b2.adjoint() * sm + b2 * sm.adjoint());
  if (frame == Frame::lab) {
    if (!p.omega0) fail(ErrorClass::invalid_parameter, "lab frame requires omega0");
    const double w = *p.omega0;
    h = h + (0.5 * w) * embed(sigma_z(2), Slot::atom, spec) + w * number_op(Slot::mode_a, spec) +
        (0.5 * w) * number_op(Slot::mode_b, spec);
  }
  return Operator(h.matrix(), true);
}

// |i> carries zero frame phase, so delta|i><i| survives in the rotating frame.
inline Operator build_h_three_level(const ThreeLevelParams& p, const SpaceSpec& spec, Frame frame = Frame::rotating) {
  if (spec.atom_levels() != 3) fail(ErrorClass::unsupported, "three-level Hamiltonian needs atom_levels = 3");
  const Operator a = lowering(Slot::mode_a, spec);
  const Operator b = lowering(Slot::mode_b, spec);
  const Operator ge = atom_op(ground, excited, spec);
  const Operator gi = atom_op(ground, intermediate, spec);
  const Operator ie = atom_op(intermediate, excited, spec);
  Operator h = p.delta * atom_op(intermediate, intermediate, spec) + p.g1 * (a.adjoint() * ge + a * ge.adjoint()) +
               p.g3 * (b.adjoint() * gi + b * gi.adjoint()) + p.g4 * (b.adjoint() * ie + b * ie.adjoint());
  if (frame == Frame::lab) {
    if (!p.omega0) fail(ErrorClass::invalid_parameter, "lab frame requires omega0");
    const double w = *p.omega0;
    h = h + (0.5 * w) * (atom_op(excited, excited, spec) - atom_op(ground, ground, spec)) +
        w * number_op(Slot::mode_a, spec) + (0.5 * w) * number_op(Slot::mode_b, spec);
  }
  return Operator(h.matrix(), true);
}

namespace detail {
inline std::vector<CollapseChannel> collapse_ops(double kappa1, double kappa2, double gamma, double pump,
                                                 const SpaceSpec& spec) {
  std::vector<CollapseChannel> out;
  auto add = [&](Channel c, double rate, const Operator& op) {
    if (rate > 0.0) out.push_back({c, rate, std::sqrt(rate) * op});
  };
  add(Channel::a_photon, kappa1, lowering(Slot::mode_a, spec));
  add(Channel::b_photon, kappa2, lowering(Slot::mode_b, spec));
  add(Channel::decay, gamma, atom_op(ground, excited, spec));
  add(Channel::pump, pump, atom_op(excited, ground, spec));
  return out;
}
}  // namespace detail

inline std::vector<CollapseChannel> build_collapse_ops(const TwoLevelParams& p, const SpaceSpec& spec) {
  return detail::collapse_ops(p.kappa1, p.kappa2, p.gamma, p.pump, spec);
}

// The |i>-coupled transitions carry no decay channel.
inline std::vector<CollapseChannel> build_collapse_ops(const ThreeLevelParams& p, const SpaceSpec& spec) {
  return detail::collapse_ops(p.kappa1, p.kappa2, p.gamma, p.pump, spec);
}

inline Operator effective_hamiltonian(const Operator& h, const std::vector<CollapseChannel>& collapse) {
  SparseMatrix m = h.matrix();
  for (const auto& c : collapse) m -= cplx(0.0, 0.5) * SparseMatrix(c.op.matrix().adjoint() * c.op.matrix());
  return Operator(std::move(m));
}

inline Operator build_h_effective(const TwoLevelParams& p, const SpaceSpec& spec) {
  return effective_hamiltonian(build_h_two_level(p, spec), build_collapse_ops(p, spec));
}

inline ComplexVector vectorize(const DenseMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline DenseMatrix unvectorize(const ComplexVector& v, Index dim) {
  if (v.size() != dim * dim) fail(ErrorClass::dimension_mismatch, "unvectorize: size mismatch");
  return Eigen::Map<const DenseMatrix>(v.data(), dim, dim);
}

class Liouvillian {
 public:
  static constexpr const char* vectorization = "column-stacking";

  Liouvillian(SpaceSpec spec, SparseMatrix matrix) : spec_(spec), m_(std::move(matrix)) {
    if (m_.rows() != spec_.dim() * spec_.dim() || m_.cols() != m_.rows())
      fail(ErrorClass::dimension_mismatch, "Liouvillian size does not match its space");
    m_.makeCompressed();
  }

  const SpaceSpec& spec() const noexcept { return spec_; }
  const SparseMatrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return spec_.dim(); }

  ComplexVector apply(const ComplexVector& v) const { return m_ * v; }

  // max |vec(I)^T L|
  double trace_preservation_defect() const {
    const Index d = dim();
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(d * d);
    for (Index k = 0; k < m_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m_, k); it; ++it)
        if (it.row() % (d + 1) == 0) row(it.col()) += it.value();
    return row.cwiseAbs().maxCoeff();
  }

 private:
  SpaceSpec spec_;
  SparseMatrix m_;
};

// d vec(rho)/dt = L vec(rho) with column stacking, vec(A X B) = (B^T kron A) vec(X).
// A channel c at rate r contributes r (c rho c^dag - {c^dag c, rho}/2); c is pre-scaled.
inline Liouvillian build_liouvillian(const Operator& h, const std::vector<CollapseChannel>& collapse,
                                     const SpaceSpec& spec) {
  const Index d = h.dim();
  if (d != spec.dim()) fail(ErrorClass::dimension_mismatch, "Hamiltonian does not match the space");
  SparseMatrix id(d, d);
  id.setIdentity();
  const SparseMatrix& hm = h.matrix();
  SparseMatrix ht = hm.transpose();
  SparseMatrix l = cplx(0.0, -1.0) * (SparseMatrix(Eigen::kroneckerProduct(id, hm)) -
                                       SparseMatrix(Eigen::kroneckerProduct(ht, id)));
  for (const auto& c : collapse) {
    if (c.op.dim() != d) fail(ErrorClass::dimension_mismatch, "collapse operator does not match the space");
    const SparseMatrix& cm = c.op.matrix();
    const SparseMatrix cbar = cm.conjugate();
    const SparseMatrix cdc = cm.adjoint() * cm;
    const SparseMatrix cdct = cdc.transpose();
    l += SparseMatrix(Eigen::kroneckerProduct(cbar, cm));
    l -= 0.5 * SparseMatrix(Eigen::kroneckerProduct(id, cdc));
    l -= 0.5 * SparseMatrix(Eigen::kroneckerProduct(cdct, id));
  }
  l.prune(cplx(0.0), 0.0);
  return Liouvillian(spec, std::move(l));
}

inline Liouvillian build_liouvillian(const TwoLevelParams& p, const SpaceSpec& spec) {
  return build_liouvillian(build_h_two_level(p, spec), build_collapse_ops(p, spec), spec);
}

inline Liouvillian build_liouvillian(const ThreeLevelParams& p, const SpaceSpec& spec) {
  return build_liouvillian(build_h_three_level(p, spec), build_collapse_ops(p, spec), spec);
}

// S = (g4/delta) b^dag |i><e| - (g3/delta) b^dag |g><i| - h.c.
inline Operator transform_generator_S(const ThreeLevelParams& p, const SpaceSpec& spec) {
  if (spec.atom_levels() != 3) fail(ErrorClass::unsupported, "S needs atom_levels = 3");
  if (p.delta == 0.0) fail(ErrorClass::invalid_parameter, "delta must be nonzero");
  const Operator bd = lowering(Slot::mode_b, spec).adjoint();
  const Operator x = (p.g4 / p.delta) * (bd * atom_op(intermediate, excited, spec)) -
                     (p.g3 / p.delta) * (bd * atom_op(ground, intermediate, spec));
  return x - x.adjoint();
}

}  // namespace tpe
