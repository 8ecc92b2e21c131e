#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "tpe/model.hpp"
#include "tpe/parallel.hpp"

namespace tpe {

enum class LinearSolver { automatic, dense_lu, sparse_lu };

struct SteadyOptions {
  LinearSolver solver = LinearSolver::automatic;
  Index dense_max_dim = 16;  // automatic picks the dense path for D <= this
  double residual_tol = 1e-9;
  double psd_tol = 1e-8;
};

namespace detail {

// L with row 0 replaced by vec(I)^T, so that A vec(rho) = e0 fixes the trace.
inline SparseMatrix trace_constrained(const Liouvillian& liou) {
  const Index d = liou.dim();
  const SparseMatrix& l = liou.matrix();
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(l.nonZeros() + d));
  for (Index k = 0; k < l.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(l, k); it; ++it)
      if (it.row() != 0) trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (Index i = 0; i < d; ++i) trip.emplace_back(0, static_cast<int>(i * (d + 1)), cplx(1.0));
  SparseMatrix a(d * d, d * d);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

inline bool kernel_is_degenerate(const Liouvillian& liou) {
  const Index n = liou.matrix().rows();
  Eigen::FullPivLU<DenseMatrix> lu{DenseMatrix(liou.matrix())};
  lu.setThreshold(1e-10);
  return lu.rank() < n - 1;
}

}  // namespace detail

inline DensityOperator solve_steady_state(const Liouvillian& liou, const SteadyOptions& opt = {}) {
  const Index d = liou.dim();
  const Index n = d * d;
  const SparseMatrix a = detail::trace_constrained(liou);
  ComplexVector rhs = ComplexVector::Zero(n);
  rhs(0) = 1.0;
  ComplexVector x;

  const bool dense = opt.solver == LinearSolver::dense_lu ||
                     (opt.solver == LinearSolver::automatic && d <= opt.dense_max_dim);
  if (dense) {
    Eigen::FullPivLU<DenseMatrix> lu{DenseMatrix(a)};
    lu.setThreshold(1e-10);
    if (lu.rank() < n) {
      if (detail::kernel_is_degenerate(liou))
        fail(ErrorClass::non_unique_steady_state, "Liouvillian kernel has dimension > 1");
      fail(ErrorClass::numerical_failure, "trace-constrained Liouvillian is singular");
    }
    x = lu.solve(rhs);
  } else {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) {
      if (d <= 48 && detail::kernel_is_degenerate(liou))
        fail(ErrorClass::non_unique_steady_state, "Liouvillian kernel has dimension > 1");
      fail(ErrorClass::numerical_failure, "sparse LU factorization failed: " + lu.lastErrorMessage());
    }
    x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) fail(ErrorClass::numerical_failure, "sparse LU solve failed");
  }
  if (!x.allFinite()) fail(ErrorClass::numerical_failure, "steady-state solve produced non-finite values");

  DenseMatrix rho = unvectorize(x, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const cplx tr = rho.trace();
  if (!(std::abs(tr) > 0.0)) fail(ErrorClass::numerical_failure, "steady state has zero trace");
  rho /= tr.real();

  const double residual = (liou.matrix() * vectorize(rho)).cwiseAbs().maxCoeff();
  if (!(residual < opt.residual_tol)) {
    if (d <= 48 && detail::kernel_is_degenerate(liou))
      fail(ErrorClass::non_unique_steady_state, "Liouvillian kernel has dimension > 1");
    fail(ErrorClass::numerical_failure, "steady-state residual " + std::to_string(residual) + " above tolerance");
  }
  DensityOperator out(std::move(rho));
  if (out.diagnostics().min_eigenvalue < -opt.psd_tol)
    fail(ErrorClass::numerical_failure, "steady state is not positive semidefinite");
  return out;
}

struct SteadyReport {
  double eta = 0.0;        // percent
  double tpe_rate = 0.0;   // T
  double ope_rate = 0.0;   // O
  double loss_rate = 0.0;  // L
  double n_a = 0.0;
  double n_b = 0.0;
  double pop_g = 0.0;
  double pop_e = 0.0;
  double pop_i = 0.0;  // three-level only
  double b2b2 = 0.0;   // <b^dag^2 b^2>
  std::optional<double> g2zero;
  std::optional<double> mandel_q;
  double balance_residual = 0.0;
  double liouvillian_residual = 0.0;
  double min_eigenvalue = 0.0;
  SpaceSpec truncation{2, 1, 2};
};

namespace detail {

inline SteadyReport observables_impl(const DensityOperator& rho, double kappa1, double kappa2, double pump,
                                     double gamma, const SpaceSpec& spec) {
  if (rho.dim() != spec.dim()) fail(ErrorClass::dimension_mismatch, "observables: rho does not match the space");
  const Operator b = lowering(Slot::mode_b, spec);
  const Operator bd2b2 = Operator(SparseMatrix(b.adjoint().matrix() * b.adjoint().matrix() * b.matrix() * b.matrix()));
  auto ex = [&](const Operator& op) { return expectation(op, rho).real(); };
  auto clip = [](double v) { return std::max(0.0, v); };

  SteadyReport r;
  r.truncation = spec;
  r.n_a = clip(ex(number_op(Slot::mode_a, spec)));
  r.n_b = clip(ex(number_op(Slot::mode_b, spec)));
  r.pop_g = clip(ex(atom_op(ground, ground, spec)));
  r.pop_e = clip(ex(atom_op(excited, excited, spec)));
  if (spec.atom_levels() == 3) r.pop_i = clip(ex(atom_op(intermediate, intermediate, spec)));
  r.b2b2 = clip(ex(bd2b2));
  r.tpe_rate = 0.5 * kappa2 * r.n_b;
  r.ope_rate = kappa1 * r.n_a;
  r.loss_rate = gamma * r.pop_e;
  const double influx = pump * r.pop_g;
  r.eta = influx > 0.0 ? 100.0 * r.tpe_rate / influx : 0.0;
  const double outflux = r.tpe_rate + r.ope_rate + r.loss_rate;
  r.balance_residual = influx > 0.0 ? std::abs(influx - outflux) / influx : std::abs(outflux);
  if (r.n_b > 1e-15) {
    r.g2zero = r.b2b2 / (r.n_b * r.n_b);
    r.mandel_q = (r.b2b2 - r.n_b * r.n_b) / r.n_b;
  }
  r.min_eigenvalue = rho.diagnostics().min_eigenvalue;
  return r;
}

}  // namespace detail

// T = kappa2 <b^dag b>/2, O = kappa1 <a^dag a>, L = gamma <ee>, eta = 100 T / (P <gg>).
inline SteadyReport observables(const DensityOperator& rho, const TwoLevelParams& p, const SpaceSpec& spec) {
  return detail::observables_impl(rho, p.kappa1, p.kappa2, p.pump, p.gamma, spec);
}

inline SteadyReport observables(const DensityOperator& rho, const ThreeLevelParams& p, const SpaceSpec& spec) {
  return detail::observables_impl(rho, p.kappa1, p.kappa2, p.pump, p.gamma, spec);
}

template <class Params>
SteadyReport steady_report(const Params& p, const SpaceSpec& spec, const SteadyOptions& opt = {}) {
  p.validate();
  const Liouvillian liou = build_liouvillian(p, spec);
  const DensityOperator rho = solve_steady_state(liou, opt);
  SteadyReport r = observables(rho, p, spec);
  r.liouvillian_residual = (liou.matrix() * vectorize(rho.entries())).cwiseAbs().maxCoeff();
  return r;
}

// Values below 1e-14 are solver noise around an exact zero (e.g. every rate at P = 0).
inline double relative_change(double x0, double x1) {
  const double scale = std::max(std::abs(x0), std::abs(x1));
  return scale > 1e-14 ? std::abs(x1 - x0) / scale : 0.0;
}

// Largest relative change among eta, T, O, L.
inline double max_relative_change(const SteadyReport& r0, const SteadyReport& r1) {
  return std::max({relative_change(r0.eta, r1.eta), relative_change(r0.tpe_rate, r1.tpe_rate),
                   relative_change(r0.ope_rate, r1.ope_rate), relative_change(r0.loss_rate, r1.loss_rate)});
}

struct ConvergenceOptions {
  double tol = 1e-3;
  int max_na = 40;
  int max_nb = 24;
  SteadyOptions steady;
};

struct ConvergenceStep {
  SpaceSpec spec;
  SteadyReport report;
  double change_from_base = 0.0;  // vs the spec it extends; 0 for the start
};

struct ConvergenceResult {
  SpaceSpec converged{2, 1, 2};
  SteadyReport report;
  std::vector<ConvergenceStep> evaluated;
};

// Per-mode ladder: extend mode a by one quantum while that moves any of eta, T, O, L
// by >= tol, then try mode b by two quanta; stop when neither extension matters.
template <class Params>
ConvergenceResult run_truncation_convergence(const Params& p, const SpaceSpec& start,
                                             const ConvergenceOptions& opt = {}) {
  if (!(opt.tol > 0.0)) fail(ErrorClass::invalid_parameter, "convergence tolerance must be > 0");
  if (start.na_max() + 1 > opt.max_na || start.nb_max() + 2 > opt.max_nb)
    fail(ErrorClass::invalid_parameter, "truncation ceiling (" + std::to_string(opt.max_na) + "," +
                                            std::to_string(opt.max_nb) + ") leaves no step above " + start.to_string());
  ConvergenceResult res;
  SpaceSpec s = start;
  SteadyReport rs = steady_report(p, s, opt.steady);
  res.evaluated.push_back({s, rs, 0.0});
  auto drift = [](const SteadyReport& r0, const SteadyReport& r1) {
    return std::vector<std::pair<std::string, double>>{{"eta", relative_change(r0.eta, r1.eta)},
                                                       {"T", relative_change(r0.tpe_rate, r1.tpe_rate)},
                                                       {"O", relative_change(r0.ope_rate, r1.ope_rate)},
                                                       {"L", relative_change(r0.loss_rate, r1.loss_rate)}};
  };
  std::vector<std::pair<std::string, double>> last_drift;
  for (;;) {
    if (s.na_max() + 1 > opt.max_na || s.nb_max() + 2 > opt.max_nb)
      throw ConvergenceError("truncation ladder reached its ceiling at " + s.to_string(), last_drift);
    const SpaceSpec sa(s.atom_levels(), s.na_max() + 1, s.nb_max());
    const SteadyReport ra = steady_report(p, sa, opt.steady);
    const double da = max_relative_change(rs, ra);
    res.evaluated.push_back({sa, ra, da});
    last_drift = drift(rs, ra);
    if (da >= opt.tol) {
      s = sa;
      rs = ra;
      continue;
    }
    const SpaceSpec sb(s.atom_levels(), s.na_max(), s.nb_max() + 2);
    const SteadyReport rb = steady_report(p, sb, opt.steady);
    const double db = max_relative_change(rs, rb);
    res.evaluated.push_back({sb, rb, db});
    last_drift = drift(rs, rb);
    if (db >= opt.tol) {
      s = sb;
      rs = rb;
      continue;
    }
    res.converged = s;
    res.report = rs;
    return res;
  }
}

template <class Params>
SpaceSpec truncation_convergence(const Params& p, const SpaceSpec& start, double tol = 1e-3) {
  ConvergenceOptions opt;
  opt.tol = tol;
  return run_truncation_convergence(p, start, opt).converged;
}

enum class SweepAxis { g1, g2, kappa1, kappa2, pump, gamma };

inline const char* axis_name(SweepAxis a) noexcept {
  switch (a) {
    case SweepAxis::g1: return "g1";
    case SweepAxis::g2: return "g2";
    case SweepAxis::kappa1: return "kappa1";
    case SweepAxis::kappa2: return "kappa2";
    case SweepAxis::pump: return "P";
    case SweepAxis::gamma: return "gamma";
  }
  return "?";
}

inline std::optional<SweepAxis> parse_axis(const std::string& s) {
  if (s == "g1") return SweepAxis::g1;
  if (s == "g2") return SweepAxis::g2;
  if (s == "kappa1") return SweepAxis::kappa1;
  if (s == "kappa2") return SweepAxis::kappa2;
  if (s == "P" || s == "pump") return SweepAxis::pump;
  if (s == "gamma") return SweepAxis::gamma;
  return std::nullopt;
}

inline TwoLevelParams with_axis(TwoLevelParams p, SweepAxis a, double v) {
  switch (a) {
    case SweepAxis::g1: p.g1 = v; break;
    case SweepAxis::g2: p.g2 = v; break;
    case SweepAxis::kappa1: p.kappa1 = v; break;
    case SweepAxis::kappa2: p.kappa2 = v; break;
    case SweepAxis::pump: p.pump = v; break;
    case SweepAxis::gamma: p.gamma = v; break;
  }
  return p;
}

struct SweepOptions {
  SpaceSpec spec{2, 3, 6};
  bool auto_convergence = false;
  ConvergenceOptions convergence;
  int threads = 1;
};

// One report per grid value, in grid order.
inline std::vector<SteadyReport> steady_sweep(const TwoLevelParams& base, SweepAxis axis,
                                              const std::vector<double>& grid, const SweepOptions& opt = {}) {
  std::vector<SteadyReport> out(grid.size());
  parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
    const TwoLevelParams p = with_axis(base, axis, grid[i]);
    out[i] = opt.auto_convergence ? run_truncation_convergence(p, opt.spec, opt.convergence).report
                                  : steady_report(p, opt.spec, opt.convergence.steady);
  });
  return out;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) / (n - 1));
  return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return g;
}

}  // namespace tpe
