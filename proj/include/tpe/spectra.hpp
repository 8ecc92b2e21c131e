#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tpe/evolution.hpp"
#include "tpe/model.hpp"

namespace tpe {

enum class Mode { a, b };

inline const char* mode_name(Mode m) noexcept { return m == Mode::a ? "a" : "b"; }

struct TauGrid {
  double dtau = 0.05;
  std::size_t count = 0;  // tau_k = k dtau, k < count
  double t_max() const noexcept { return count > 1 ? static_cast<double>(count - 1) * dtau : 0.0; }
};

inline TauGrid make_tau_grid(double t_max, double dtau) {
  if (!(t_max > 0.0) || !(dtau > 0.0)) fail(ErrorClass::invalid_parameter, "tau grid needs t_max, dtau > 0");
  return {dtau, static_cast<std::size_t>(std::llround(t_max / dtau)) + 1};
}

// 20 / min(kappa1 + gamma, kappa2): resolves the narrowest lines.
inline double default_tau_max(const TwoLevelParams& p) {
  const double r = std::min(p.kappa1 + p.gamma, p.kappa2);
  if (!(r > 0.0)) fail(ErrorClass::invalid_parameter, "default tau_max needs kappa1 + gamma > 0 and kappa2 > 0");
  return 20.0 / r;
}

// C(tau) = Tr[x^dag e^{L tau}(x rho_ss)], stepping the master equation on x rho_ss.
inline std::vector<cplx> two_time_correlation(const Liouvillian& liou, const DensityOperator& rho_ss, Mode mode,
                                              const TauGrid& grid, double dt_max = 0.05) {
  const double residual = (liou.matrix() * vectorize(rho_ss.entries())).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8)) fail(ErrorClass::numerical_failure, "rho_ss is not a converged steady state");
  const SpaceSpec& spec = liou.spec();
  const Operator x = lowering(mode == Mode::a ? Slot::mode_a : Slot::mode_b, spec);
  const Operator xd = x.adjoint();
  const DenseMatrix x_rho = x.matrix() * rho_ss.entries();
  std::vector<cplx> c(grid.count);
  evolve_on_grid(liou, vectorize(x_rho), grid.dtau, grid.count, dt_max, [&](std::size_t k, const ComplexVector& v) {
    c[k] = expectation(xd, DensityOperator(unvectorize(v, spec.dim())));
  });
  return c;
}

struct SpectrumOptions {
  double omega_max = 3.0;                   // detuning range, g1 units
  std::optional<double> window_rate;        // exp(-rate tau) window, off by default
  std::optional<double> expected_linewidth; // enables the unresolved-peak warning
};

struct SpectrumResult {
  Mode mode = Mode::b;
  std::vector<double> detunings;
  std::vector<double> values;  // max-normalized, clipped at 0
  double resolution = 0.0;     // 2 pi / t_max
  double min_raw = 0.0;        // most negative normalized value before clipping
  std::vector<std::string> warnings;
};

// S(w) = 2 Re int_0^tmax C(tau) e^{-i w tau} dtau by the trapezoid rule on the grid w_k = k 2pi/t_max.
inline SpectrumResult emission_spectrum(const std::vector<cplx>& corr, const TauGrid& grid, Mode mode,
                                        const SpectrumOptions& opt = {}) {
  if (corr.size() != grid.count || grid.count < 2)
    fail(ErrorClass::invalid_parameter, "correlation does not match its tau grid");
  SpectrumResult s;
  s.mode = mode;
  const double tmax = grid.t_max();
  s.resolution = 2.0 * std::numbers::pi / tmax;
  if (std::abs(corr.back()) > 1e-4 * std::abs(corr.front()))
    s.warnings.push_back("correlation not decayed below 1e-4 of C(0) at tau_max");
  if (opt.expected_linewidth && s.resolution > 0.5 * *opt.expected_linewidth)
    s.warnings.push_back("unresolved peak: bin width exceeds half the expected linewidth");

  std::vector<cplx> w(corr);
  if (opt.window_rate)
    for (std::size_t k = 0; k < w.size(); ++k) w[k] *= std::exp(-*opt.window_rate * grid.dtau * static_cast<double>(k));

  const auto kmax = static_cast<long long>(std::floor(opt.omega_max / s.resolution));
  double vmax = 0.0;
  for (long long j = -kmax; j <= kmax; ++j) {
    const double omega = static_cast<double>(j) * s.resolution;
    const cplx z = std::polar(1.0, -omega * grid.dtau);
    cplx ph = 1.0;
    cplx acc = 0.5 * w.front();
    for (std::size_t k = 1; k < w.size(); ++k) {
      ph *= z;
      acc += (k + 1 == w.size() ? 0.5 : 1.0) * w[k] * ph;
    }
    const double v = 2.0 * (acc * grid.dtau).real();
    s.detunings.push_back(omega);
    s.values.push_back(v);
    vmax = std::max(vmax, v);
  }
  if (!(vmax > 0.0)) fail(ErrorClass::numerical_failure, "spectrum has no positive weight");
  for (auto& v : s.values) {
    v /= vmax;
    s.min_raw = std::min(s.min_raw, v);
  }
  if (s.min_raw < -1e-6) s.warnings.push_back("spectrum negative beyond -1e-6 before clipping");
  for (auto& v : s.values) v = std::max(0.0, v);
  return s;
}

struct Peak {
  double detuning;
  double height;
};

// Local maxima at or above min_height, tallest first.
inline std::vector<Peak> find_peaks(const SpectrumResult& s, double min_height = 0.0) {
  std::vector<Peak> p;
  const auto& v = s.values;
  for (std::size_t k = 1; k + 1 < v.size(); ++k)
    if (v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] >= min_height) p.push_back({s.detunings[k], v[k]});
  std::sort(p.begin(), p.end(), [](const Peak& x, const Peak& y) { return x.height > y.height; });
  return p;
}

// Value at the bin nearest to a detuning.
inline double value_at(const SpectrumResult& s, double detuning) {
  if (s.values.empty()) fail(ErrorClass::invalid_parameter, "empty spectrum");
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.detunings.size(); ++k)
    if (std::abs(s.detunings[k] - detuning) < std::abs(s.detunings[best] - detuning)) best = k;
  return s.values[best];
}

struct DressedPeaks {
  double splitting = 0.0;          // sqrt(g1^2 + 2 g2^2)
  std::vector<double> mode_a;      // {-splitting, +splitting}
  std::vector<double> mode_b;      // {-splitting, 0, +splitting}
  double suppression_ratio = 0.0;  // |<g,1,0|m>| / |<g,0,2|m>| for the middle M1 eigenstate m
};

// From the M1 block {|e,0,0>, |g,1,0>, |g,0,2>} of the rotating-frame Hamiltonian.
inline DressedPeaks dressed_peaks(const TwoLevelParams& p) {
  const SpaceSpec spec(2, 1, 2);
  const DenseMatrix h = build_h_two_level(p, spec).dense();
  const Index idx[3] = {spec.index({excited, 0, 0}), spec.index({ground, 1, 0}), spec.index({ground, 0, 2})};
  Eigen::Matrix3cd m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = h(idx[r], idx[c]);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(m);
  DressedPeaks d;
  d.splitting = 0.5 * (es.eigenvalues()(2) - es.eigenvalues()(0));
  d.mode_a = {-d.splitting, d.splitting};
  d.mode_b = {-d.splitting, 0.0, d.splitting};
  const auto mid = es.eigenvectors().col(1);
  d.suppression_ratio = std::abs(mid(2)) > 0.0 ? std::abs(mid(1)) / std::abs(mid(2)) : 0.0;
  return d;
}

// Peak offset in units of omega0; mode a lines sit at omega0 + detuning, mode b at omega0/2 + detuning.
inline double offset_over_omega0(double detuning, const TwoLevelParams& p) {
  if (!p.omega0 || !(*p.omega0 > 0.0)) fail(ErrorClass::invalid_parameter, "omega0 required for absolute labels");
  return detuning / *p.omega0;
}

}  // namespace tpe
