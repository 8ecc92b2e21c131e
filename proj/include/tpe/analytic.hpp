#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tpe/model.hpp"

namespace tpe {

struct AnalyticStats {
  std::optional<double> xi;
  std::optional<double> nu;
  std::optional<double> phi;
  double tpe_rate = 0.0;
  double ope_rate = 0.0;
  double loss_rate = 0.0;
  double eta = 0.0;  // percent
  // 100 T / (P (1 - L/gamma)), the efficiency implied by the rate expressions
  // themselves; differs from eta, whose expression carries an extra factor.
  std::optional<double> eta_from_rates;
  std::vector<std::string> warnings;
};

namespace detail {
inline void check_analytic(const TwoLevelParams& p) {
  p.validate();
  if (p.kappa2 + 0.5 * p.kappa1 <= 0.0)
    fail(ErrorClass::degenerate_parameters, "kappa2 + kappa1/2 must be > 0");
}
}  // namespace detail

// Manifold-approximation closed forms.
inline AnalyticStats closed_form_stats(const TwoLevelParams& p) {
  detail::check_analytic(p);
  const double g1 = p.g1, g2 = p.g2, k1 = p.kappa1, k2 = p.kappa2, P = p.pump, gm = p.gamma;
  AnalyticStats s;
  const double kk = k2 + 0.5 * k1;
  const double xi = 2.0 * g1 + 2.0 * k1 * g2 * g2 / (kk * g1) + k1 * (k1 + P + gm) / (2.0 * g1);
  if (xi == 0.0) fail(ErrorClass::degenerate_parameters, "xi vanishes");
  const double nu = 1.0 - k1 * g1 / (kk * xi);
  s.xi = xi;
  s.nu = nu;
  if (g2 == 0.0) {
    // phi diverges like 1/g2; T and eta vanish in the limit.
    const double x = 2.0 * k1 * g1 + (gm + P) * xi;
    s.ope_rate = 2.0 * g1 * k1 * P / x;
    s.loss_rate = gm * P * xi / x;
    return s;
  }
  const double phi = k2 / (2.0 * g2) * (k2 + 0.5 * P + 0.5 * gm + 2.0 * g1 * g1 / (2.0 * k2 + k1)) -
                     k2 * k1 * g1 * g2 / (kk * kk * xi);
  s.phi = phi;
  const double denom_t = phi / xi * (2.0 * k1 * g1 + (gm + P) * xi) + 2.0 * g2 * nu * nu * k2;
  if (denom_t == 0.0) fail(ErrorClass::degenerate_parameters, "closed-form denominator vanishes");
  s.tpe_rate = 2.0 * k2 * g2 * nu * P / denom_t;
  s.loss_rate = gm * P * phi / denom_t;
  s.ope_rate = 2.0 * g1 * k1 * P * (phi - k2 * g2 * nu / kk) /
               (phi * (xi * (P + gm) + 2.0 * k1 * g1) + 2.0 * g2 * nu * nu * k2 * xi);
  const double x0 = 2.0 * k1 * g1 + gm * xi;
  const double xp = 2.0 * k1 * g1 + (gm + P) * xi;
  s.eta = 100.0 * 2.0 * k2 * g2 * nu / (phi / xi * x0 + 2.0 * g2 * nu * nu * k2 * x0 / xp);
  if (gm > 0.0 && P > 0.0) s.eta_from_rates = 100.0 * s.tpe_rate / (P * (1.0 - s.loss_rate / gm));
  return s;
}

// Low-pump simplification: diagnostics only, it overshoots near kappa2 = g1.
inline AnalyticStats low_pump_stats(const TwoLevelParams& p) {
  p.validate();
  const double g1 = p.g1, g2 = p.g2, k1 = p.kappa1, k2 = p.kappa2, P = p.pump, gm = p.gamma;
  if (gm + k1 <= 0.0) fail(ErrorClass::degenerate_parameters, "gamma + kappa1 must be > 0");
  AnalyticStats s;
  const double d = (gm + k1) * (k2 * k2 + g1 * g1);
  s.eta = 400.0 * k2 * g2 * g2 / d;
  s.tpe_rate = 4.0 * g2 * g2 * P * k2 / d;
  s.ope_rate = k1 * P / (gm + k1);
  s.loss_rate = gm * P / (gm + k1);
  if (P > 0.1 * std::min(k1 + gm, k2)) s.warnings.push_back("pump not small against kappa1 + gamma and kappa2");
  return s;
}

// Closed-form eta in the limit kappa1 -> 0, P -> 0 at kappa2 = g1.
inline double closed_form_eta_max(TwoLevelParams p) {
  p.kappa1 = 0.0;
  p.pump = 0.0;
  p.kappa2 = p.g1;
  return closed_form_stats(p).eta;
}

struct SimpleEtaMax {
  double value;       // percent
  bool consistent;    // false when it disagrees with closed_form_eta_max by more than 1 pp
};

// Simplified limit 2 g2^2 / (gamma g1). At g2 = 0.1, gamma = 0.016 this is 125%, not ~55%.
inline SimpleEtaMax simple_eta_max(const TwoLevelParams& p) {
  if (p.gamma <= 0.0) fail(ErrorClass::degenerate_parameters, "gamma must be > 0");
  const double v = 100.0 * 2.0 * p.g2 * p.g2 / (p.gamma * p.g1);
  return {v, std::abs(v - closed_form_eta_max(p)) <= 1.0};
}

// Ratio of two-photon to one-photon golden-rule rates out of manifold n.
inline double fermi_ratio(int n, const TwoLevelParams& p) {
  if (n < 1) fail(ErrorClass::invalid_parameter, "manifold index must be >= 1");
  return 2.0 * p.g2 * p.g2 / (n * p.g1 * p.g1);
}

enum class ReducedForm {
  with_self_term,     // full reduced 4x4 system
  without_self_term,  // drops the g2 <b^dag b> self-term, as the closed forms do
};

struct ReducedSolution {
  double n_a = 0.0;
  double n_b = 0.0;
  double cross_term = 0.0;  // <a^dag b^2 + a b^dag^2>
  double pop_e = 0.0;
  double pop_g = 0.0;
  double tpe_rate = 0.0;
  double ope_rate = 0.0;
  double loss_rate = 0.0;
  double eta = 0.0;
};

inline ReducedSolution reduced_linear_system(const TwoLevelParams& p, ReducedForm form = ReducedForm::with_self_term) {
  p.validate();
  const double g1 = p.g1, g2 = p.g2, k1 = p.kappa1, k2 = p.kappa2, P = p.pump, gm = p.gamma;
  if (g2 == 0.0) fail(ErrorClass::degenerate_parameters, "reduced system needs g2 != 0");
  const double self = form == ReducedForm::with_self_term ? g2 : 0.0;
  Eigen::Matrix4d m;
  m << 0.0, k2 * (k2 + 0.5 * P + 0.5 * gm) / (2.0 * g2) + self, g1, -4.0 * g2,
      k1 * (k1 + P + gm) / (2.0 * g1) + 2.0 * g1, 0.0, g2, -2.0 * g1,
      -2.0 * k1 * g2 / g1, -k2 * g1 / (2.0 * g2), k2 + 0.5 * k1, 0.0,
      k1, 0.5 * k2, 0.0, gm + P;
  const Eigen::Vector4d rhs(0.0, 0.0, 0.0, P);
  Eigen::FullPivLU<Eigen::Matrix4d> lu(m);
  if (!lu.isInvertible()) fail(ErrorClass::degenerate_parameters, "reduced 4x4 system is singular");
  const Eigen::Vector4d x = lu.solve(rhs);
  ReducedSolution r;
  r.n_a = x(0);
  r.n_b = x(1);
  r.cross_term = x(2);
  r.pop_e = x(3);
  r.pop_g = 1.0 - x(3);
  r.tpe_rate = 0.5 * k2 * r.n_b;
  r.ope_rate = k1 * r.n_a;
  r.loss_rate = gm * r.pop_e;
  r.eta = P * r.pop_g > 0.0 ? 100.0 * r.tpe_rate / (P * r.pop_g) : 0.0;
  return r;
}

// P_T = 4 kappa2 g2^2 / ((gamma + kappa1)(kappa2^2 + g1^2)); identical to low_pump_stats().eta / 100.
inline double cascade_probability(const TwoLevelParams& p) { return low_pump_stats(p).eta / 100.0; }

// g2(0) ~ 1 / (2 <b^dag b>) and Q ~ 1/2 when the b field is almost always empty.
inline double g2zero_low_pump(double n_b) {
  if (!(n_b > 0.0)) fail(ErrorClass::undefined_estimate, "g2(0) undefined for <b^dag b> = 0");
  return 1.0 / (2.0 * n_b);
}

struct AmplitudeTrace {
  std::vector<double> time;
  std::vector<cplx> c1, c2, c3;
  double cascade_probability = 0.0;
  double tail = 0.0;  // analytic exponential tail beyond t_max, included above
  double final_norm = 0.0;
  std::vector<std::string> warnings;
};

// Single-excitation amplitudes c1 = <e,0,0>, c2 = <g,1,0>, c3 = <g,0,2>, including the
// g2 back-coupling into c1. cascade = 2 kappa2 int |c3|^2 dt.
inline AmplitudeTrace amplitude_ode_oracle(const TwoLevelParams& p, double t_max, double dt = 1e-3,
                                           int stride = 100) {
  p.validate();
  if (!(t_max > 0.0) || !(dt > 0.0) || stride < 1) fail(ErrorClass::invalid_parameter, "bad ODE grid");
  using V = Eigen::Vector3cd;
  const cplx I(0.0, 1.0);
  const double s2g2 = std::sqrt(2.0) * p.g2;
  Eigen::Matrix3cd m;
  m << -0.5 * p.gamma, -I * p.g1, -I * s2g2,
      -I * p.g1, -0.5 * (p.pump + p.kappa1), 0.0,
      -I * s2g2, 0.0, -(0.5 * p.pump + p.kappa2);
  V c(1.0, 0.0, 0.0);
  const auto steps = static_cast<long long>(std::ceil(t_max / dt - 1e-9));
  AmplitudeTrace tr;
  auto record = [&](long long k) {
    tr.time.push_back(static_cast<double>(k) * dt);
    tr.c1.push_back(c(0));
    tr.c2.push_back(c(1));
    tr.c3.push_back(c(2));
  };
  record(0);
  double integral = 0.0;
  double prev_w = std::norm(c(2));
  double prev_norm = c.squaredNorm();
  double last_w = prev_w;
  for (long long k = 1; k <= steps; ++k) {
    const V k1 = m * c;
    const V k2 = m * (c + 0.5 * dt * k1);
    const V k3 = m * (c + 0.5 * dt * k2);
    const V k4 = m * (c + dt * k3);
    c += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double n = c.squaredNorm();
    if (n > prev_norm * (1.0 + 1e-12)) fail(ErrorClass::step_size, "amplitude norm increased: dt too large");
    prev_norm = n;
    const double w = std::norm(c(2));
    integral += 0.5 * dt * (prev_w + w);
    last_w = prev_w;
    prev_w = w;
    if (k % stride == 0 || k == steps) record(k);
  }
  // Tail: |c3|^2 ~ w exp(-lambda t), lambda from the last step.
  if (prev_w > 0.0 && last_w > prev_w) {
    const double lambda = std::log(last_w / prev_w) / dt;
    tr.tail = prev_w / lambda;
  } else if (prev_w > 1e-12 * integral) {
    tr.warnings.push_back("|c3|^2 not decaying at t_max; tail omitted");
  }
  tr.final_norm = prev_norm;
  if (prev_norm > 1e-6) tr.warnings.push_back("norm above 1e-6 at t_max; increase t_max");
  tr.cascade_probability = 2.0 * p.kappa2 * (integral + tr.tail);
  return tr;
}

struct OracleConvergence {
  double coarse = 0.0;
  double fine = 0.0;
  double richardson = 0.0;  // (4 fine - coarse) / 3, trapezoid quadrature dominates
};

inline OracleConvergence amplitude_oracle_convergence(const TwoLevelParams& p, double t_max, double dt = 1e-3) {
  OracleConvergence c;
  c.coarse = amplitude_ode_oracle(p, t_max, dt, 1000000).cascade_probability;
  c.fine = amplitude_ode_oracle(p, t_max, 0.5 * dt, 1000000).cascade_probability;
  c.richardson = (4.0 * c.fine - c.coarse) / 3.0;
  return c;
}

}  // namespace tpe
