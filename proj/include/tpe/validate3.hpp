#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tpe/steady.hpp"

namespace tpe {

// Two-level model seen by the three-level system: same rates, g2 from the elimination formula.
inline TwoLevelParams effective_two_level(const ThreeLevelParams& p) {
  TwoLevelParams q;
  q.g1 = p.g1;
  q.g2 = effective_g2(p.g3, p.g4, p.delta);
  q.kappa1 = p.kappa1;
  q.kappa2 = p.kappa2;
  q.pump = p.pump;
  q.gamma = p.gamma;
  q.omega0 = p.omega0;
  return q;
}

// The two-level Hamiltonian written on a three-level space; |i> only carries delta|i><i|.
inline Operator build_h_model_three_level(const ThreeLevelParams& p, const SpaceSpec& spec) {
  if (spec.atom_levels() != 3) fail(ErrorClass::unsupported, "needs atom_levels = 3");
  const double g2 = effective_g2(p.g3, p.g4, p.delta);
  const Operator a = lowering(Slot::mode_a, spec);
  const Operator b = lowering(Slot::mode_b, spec);
  const Operator ge = atom_op(ground, excited, spec);
  const Operator b2 = b * b;
  const Operator h = p.delta * atom_op(intermediate, intermediate, spec) + p.g1 * (a.adjoint() * ge + a * ge.adjoint()) +
                     g2 * (b2.adjoint() * ge + b2 * ge.adjoint());
  return Operator(h.matrix(), true);
}

// Maps a two-level state onto the three-level space, zero on |i> sectors.
inline StateVector embed_two_level_state(const StateVector& psi, const SpaceSpec& spec2, const SpaceSpec& spec3) {
  if (spec2.atom_levels() != 2 || spec3.atom_levels() != 3 || spec2.na_max() > spec3.na_max() ||
      spec2.nb_max() > spec3.nb_max())
    fail(ErrorClass::invalid_embedding, "two-level space does not fit in the three-level space");
  StateVector out = StateVector::Zero(spec3.dim());
  for (Index i = 0; i < spec2.dim(); ++i) out(spec3.index(spec2.label(i))) = psi(i);
  return out;
}

struct FidelitySeries {
  std::vector<double> time;
  std::vector<double> fidelity;
  double min_fidelity = 1.0;
  double norm_drift = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {
// e^{-iHt} psi0 for Hermitian H via its eigendecomposition.
class ClosedEvolution {
 public:
  ClosedEvolution(const Operator& h, const StateVector& psi0) : es_(h.dense()) {
    if (es_.info() != Eigen::Success) fail(ErrorClass::numerical_failure, "eigendecomposition failed");
    coeff_ = es_.eigenvectors().adjoint() * psi0;
  }
  StateVector at(double t) const {
    ComplexVector ph(coeff_.size());
    for (Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -es_.eigenvalues()(k) * t) * coeff_(k);
    return es_.eigenvectors() * ph;
  }

 private:
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es_;
  ComplexVector coeff_;
};
}  // namespace detail

// F(t) = |<psi3(t)|psi_m(t)>|^2 for closed evolution from |e,0,0>; all rates ignored.
inline FidelitySeries fidelity_series(const ThreeLevelParams& p, double t_max = 50.0, double dt = 0.05,
                                      const SpaceSpec& spec3 = SpaceSpec(3, 1, 2)) {
  p.validate();
  if (!(t_max > 0.0) || !(dt > 0.0)) fail(ErrorClass::invalid_parameter, "fidelity grid needs t_max, dt > 0");
  FidelitySeries f;
  f.warnings = p.validity_warnings();
  const SpaceSpec spec2(2, spec3.na_max(), spec3.nb_max());
  const TwoLevelParams q = effective_two_level(p);
  const detail::ClosedEvolution e3(build_h_three_level(p, spec3), basis_state(spec3, {excited, 0, 0}));
  const detail::ClosedEvolution e2(build_h_two_level(q, spec2), basis_state(spec2, {excited, 0, 0}));
  const auto n = static_cast<std::size_t>(std::llround(t_max / dt));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const StateVector s3 = e3.at(t);
    const StateVector s2 = embed_two_level_state(e2.at(t), spec2, spec3);
    f.norm_drift = std::max({f.norm_drift, std::abs(s3.norm() - 1.0), std::abs(s2.norm() - 1.0)});
    const double fid = std::norm(s3.dot(s2));
    f.time.push_back(t);
    f.fidelity.push_back(fid);
    f.min_fidelity = std::min(f.min_fidelity, fid);
  }
  return f;
}

inline std::optional<double> deviation_percent(double x3, double x2) {
  if (x2 == 0.0) return std::nullopt;
  return 100.0 * (x3 - x2) / x2;
}

struct MapdPoint {
  double kappa2_over_g1 = 0.0;
  std::optional<double> d_eta, d_tpe, d_ope, d_loss;
  SteadyReport three;
  SteadyReport two;
};

inline MapdPoint mapd_point(double kappa2_over_g1, const SteadyReport& three, const SteadyReport& two) {
  MapdPoint m;
  m.kappa2_over_g1 = kappa2_over_g1;
  m.three = three;
  m.two = two;
  m.d_eta = deviation_percent(three.eta, two.eta);
  m.d_tpe = deviation_percent(three.tpe_rate, two.tpe_rate);
  m.d_ope = deviation_percent(three.ope_rate, two.ope_rate);
  m.d_loss = deviation_percent(three.loss_rate, two.loss_rate);
  return m;
}

struct MapdReport {
  std::vector<MapdPoint> points;

  // Largest |D_X| over all points and observables.
  double max_abs_deviation() const {
    double m = 0.0;
    for (const auto& p : points)
      for (const auto& d : {p.d_eta, p.d_tpe, p.d_ope, p.d_loss})
        if (d) m = std::max(m, std::abs(*d));
    return m;
  }
};

struct MapdOptions {
  SpaceSpec spec2{2, 3, 6};
  SpaceSpec spec3{3, 3, 7};  // one extra b quantum: the |i> sector borrows a photon
  bool auto_convergence = false;
  ConvergenceOptions convergence;
  int threads = 1;
};

// D_X = 100 (X3 - X2) / X2 at kappa2 = r g1 for each r in the grid.
inline MapdReport mapd_sweep(const ThreeLevelParams& base, const std::vector<double>& kappa2_over_g1,
                             const MapdOptions& opt = {}) {
  MapdReport rep;
  rep.points.resize(kappa2_over_g1.size());
  parallel_for(kappa2_over_g1.size(), opt.threads, [&](std::size_t i) {
    ThreeLevelParams p = base;
    p.kappa2 = kappa2_over_g1[i] * base.g1;
    const TwoLevelParams q = effective_two_level(p);
    SteadyReport r3, r2;
    if (opt.auto_convergence) {
      r3 = run_truncation_convergence(p, opt.spec3, opt.convergence).report;
      r2 = run_truncation_convergence(q, opt.spec2, opt.convergence).report;
    } else {
      r3 = steady_report(p, opt.spec3, opt.convergence.steady);
      r2 = steady_report(q, opt.spec2, opt.convergence.steady);
    }
    rep.points[i] = mapd_point(kappa2_over_g1[i], r3, r2);
  });
  return rep;
}

}  // namespace tpe
