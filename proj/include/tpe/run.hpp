#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpe/analytic.hpp"
#include "tpe/config.hpp"
#include "tpe/spectra.hpp"
#include "tpe/steady.hpp"
#include "tpe/table.hpp"
#include "tpe/trajectories.hpp"
#include "tpe/validate3.hpp"

#ifndef TPE_VERSION
#define TPE_VERSION "0.0.0"
#endif

namespace tpe {

struct RunOutput {
  std::vector<Table> tables;
  Json metadata;  // shared by every sidecar
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

inline std::vector<std::string> report_columns(bool three, bool hz) {
  std::vector<std::string> c{"eta", "T", "O", "L", "n_a", "n_b", "pop_g", "pop_e"};
  if (three) c.push_back("pop_i");
  for (const char* x : {"g2zero", "mandel_q", "balance_residual", "liouvillian_residual", "min_eigenvalue",
                        "na_max", "nb_max"})
    c.push_back(x);
  if (hz)
    for (const char* x : {"T_per_second", "O_per_second", "L_per_second"}) c.push_back(x);
  return c;
}

inline std::vector<Cell> report_cells(const SteadyReport& r, bool three, const std::optional<double>& g1_hz) {
  std::vector<Cell> v{r.eta, r.tpe_rate, r.ope_rate, r.loss_rate, r.n_a, r.n_b, r.pop_g, r.pop_e};
  if (three) v.push_back(r.pop_i);
  for (double x : {or_absent(r.g2zero), or_absent(r.mandel_q), r.balance_residual, r.liouvillian_residual,
                   r.min_eigenvalue, static_cast<double>(r.truncation.na_max()),
                   static_cast<double>(r.truncation.nb_max())})
    v.push_back(x);
  if (g1_hz)
    for (double x : {r.tpe_rate, r.ope_rate, r.loss_rate}) v.push_back(x * *g1_hz);
  return v;
}

struct Residuals {
  double balance = 0.0;
  double liouvillian = 0.0;
  double min_eigenvalue = 0.0;

  void add(const SteadyReport& r) {
    balance = std::max(balance, r.balance_residual);
    liouvillian = std::max(liouvillian, r.liouvillian_residual);
    min_eigenvalue = std::min(min_eigenvalue, r.min_eigenvalue);
  }
  Json json() const {
    return {{"max_balance_residual", balance}, {"max_liouvillian_residual", liouvillian},
            {"min_eigenvalue", min_eigenvalue}};
  }
};

inline void check_balance(const SteadyReport& r, double tol, std::vector<std::string>& warnings) {
  if (r.balance_residual >= tol)
    warnings.push_back("rate balance residual " + std::to_string(r.balance_residual) + " at " +
                       r.truncation.to_string());
}

template <class Params>
SteadyReport solve_report(const Params& p, const RunConfig& c) {
  return c.auto_convergence ? run_truncation_convergence(p, c.spec, c.convergence).report
                            : steady_report(p, c.spec, c.convergence.steady);
}

inline Json spec_value(const SpaceSpec& s) {
  return {{"atom_levels", s.atom_levels()}, {"na_max", s.na_max()}, {"nb_max", s.nb_max()}};
}

inline RunOutput run_steady(const RunConfig& c) {
  RunOutput out;
  const bool three = c.model == ModelKind::three_level;
  const SteadyReport r = three ? solve_report(c.params3, c) : solve_report(c.params2, c);
  Table t{"steady", report_columns(three, c.g1_hz.has_value()), {}};
  t.add(report_cells(r, three, c.g1_hz));
  Residuals res;
  res.add(r);
  out.metadata["truncation"] = spec_value(r.truncation);
  out.metadata["residuals"] = res.json();
  check_balance(r, three && r.pop_i > 1e-6 ? 1e-4 : 1e-8, out.warnings);
  out.tables.push_back(std::move(t));
  return out;
}

inline RunOutput run_sweep(const RunConfig& c, int threads) {
  RunOutput out;
  const SweepAxis axis = *parse_axis(c.sweep->axis);
  SweepOptions opt;
  opt.spec = c.spec;
  opt.auto_convergence = c.auto_convergence;
  opt.convergence = c.convergence;
  opt.threads = threads;
  const auto reports = steady_sweep(c.params2, axis, c.sweep->grid, opt);
  Table t{"sweep", {c.sweep->axis}, {}};
  for (const auto& col : report_columns(false, c.g1_hz.has_value())) t.columns.push_back(col);
  Residuals res;
  Json trunc = Json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::vector<Cell> row{c.sweep->grid[i]};
    for (auto& x : report_cells(reports[i], false, c.g1_hz)) row.push_back(std::move(x));
    t.add(std::move(row));
    res.add(reports[i]);
    check_balance(reports[i], 1e-8, out.warnings);
    if (trunc.empty() || trunc.back() != spec_value(reports[i].truncation)) trunc.push_back(spec_value(reports[i].truncation));
  }
  out.metadata["truncation"] = c.auto_convergence ? trunc : Json(spec_value(c.spec));
  out.metadata["residuals"] = res.json();
  out.tables.push_back(std::move(t));
  return out;
}

inline RunOutput run_analytic(const RunConfig& c) {
  RunOutput out;
  Table t{"analytic", {}, {}};
  if (c.sweep) t.columns.push_back(c.sweep->axis);
  for (const char* x : {"eta", "T", "O", "L", "eta_from_rates", "xi", "nu", "phi", "eta_low_pump", "T_low_pump",
                        "O_low_pump", "L_low_pump", "eta_reduced", "eta_reduced_without_self_term",
                        "cascade_probability"})
    t.columns.push_back(x);
  if (c.analytic.ode) t.columns.push_back("cascade_probability_ode");
  const std::vector<double> grid = c.sweep ? c.sweep->grid : std::vector<double>{0.0};
  for (double v : grid) {
    const TwoLevelParams p = c.sweep ? with_axis(c.params2, *parse_axis(c.sweep->axis), v) : c.params2;
    std::vector<Cell> row;
    if (c.sweep) row.push_back(v);
    const AnalyticStats s = closed_form_stats(p);
    const AnalyticStats lp = low_pump_stats(p);
    double red = absent, red_alg = absent;
    if (p.g2 != 0.0) {
      red = reduced_linear_system(p).eta;
      red_alg = reduced_linear_system(p, ReducedForm::without_self_term).eta;
    }
    for (double x : {s.eta, s.tpe_rate, s.ope_rate, s.loss_rate, or_absent(s.eta_from_rates), or_absent(s.xi),
                     or_absent(s.nu), or_absent(s.phi), lp.eta, lp.tpe_rate, lp.ope_rate, lp.loss_rate, red, red_alg,
                     cascade_probability(p)})
      row.push_back(x);
    if (c.analytic.ode) {
      const AmplitudeTrace tr = amplitude_ode_oracle(p, c.analytic.ode_t_max, c.analytic.ode_dt, 1000000);
      row.push_back(tr.cascade_probability);
      for (const auto& w : tr.warnings) out.warnings.push_back("ODE oracle: " + w);
    }
    for (const auto& w : lp.warnings) out.warnings.push_back("low-pump form: " + w);
    t.add(std::move(row));
  }
  std::sort(out.warnings.begin(), out.warnings.end());
  out.warnings.erase(std::unique(out.warnings.begin(), out.warnings.end()), out.warnings.end());

  const SimpleEtaMax simple = simple_eta_max(c.params2);
  Json fermi = Json::array();
  for (int n = 1; n <= c.analytic.fermi_max_n; ++n) fermi.push_back({{"n", n}, {"ratio", fermi_ratio(n, c.params2)}});
  out.metadata["results"] = {{"eta_limit_closed_form", closed_form_eta_max(c.params2)},
                             {"eta_max_simple", simple.value},
                             {"eta_max_simple_consistent", simple.consistent},
                             {"fermi_ratio", fermi}};
  if (!simple.consistent)
    out.warnings.push_back("simple eta_max formula 2 g2^2/(gamma g1) disagrees with the closed-form limit");
  out.tables.push_back(std::move(t));
  return out;
}

inline RunOutput run_convergence(const RunConfig& c) {
  RunOutput out;
  const bool three = c.model == ModelKind::three_level;
  const ConvergenceResult r = three ? run_truncation_convergence(c.params3, c.spec, c.convergence)
                                    : run_truncation_convergence(c.params2, c.spec, c.convergence);
  Table t{"convergence", {"na_max", "nb_max", "eta", "T", "O", "L", "max_relative_change", "converged"}, {}};
  for (const auto& s : r.evaluated) {
    const SteadyReport& x = s.report;
    t.add({static_cast<double>(s.spec.na_max()), static_cast<double>(s.spec.nb_max()), x.eta, x.tpe_rate, x.ope_rate,
           x.loss_rate, s.change_from_base, s.spec == r.converged ? 1.0 : 0.0});
  }
  Residuals res;
  res.add(r.report);
  out.metadata["truncation"] = spec_value(r.converged);
  out.metadata["residuals"] = res.json();
  out.tables.push_back(std::move(t));
  return out;
}

inline RunOutput run_traj(const RunConfig& c, int threads) {
  RunOutput out;
  TrajectoryConfig base;
  base.params = c.params2;
  base.spec = c.spec;
  base.t_max = c.traj.t_max;
  base.dt = c.traj.dt;
  base.seed = c.seed;
  base.sample_stride = c.traj.sample_stride;
  base.propagation = c.traj.propagation;
  const auto recs = run_ensemble(base, c.traj.count, threads);

  if (c.traj.event_log) {
    Table ev{"traj_events", {"trajectory_id", "time", "channel"}, {}};
    for (const auto& r : recs)
      for (const auto& e : r.events)
        ev.rows.push_back({static_cast<double>(r.trajectory_index), e.time, std::string(channel_name(e.channel))});
    out.tables.push_back(std::move(ev));
  }

  Table st{"traj_stats",
           {"trajectories", "total_time", "A_PHOTON", "B_PHOTON", "DECAY", "PUMP", "cascades", "mean_intra_cascade_gap",
            "eta_estimate", "eta_stderr", "half_b_rate", "half_b_rate_stderr", "pump_rate", "pump_rate_stderr"},
           {}};
  double max_dp = 0.0;
  for (const auto& r : recs) max_dp = std::max(max_dp, r.max_jump_probability);
  try {
    const JumpStats s = jump_statistics(recs);
    st.add({static_cast<double>(recs.size()), s.total_time, static_cast<double>(s.count(Channel::a_photon)),
            static_cast<double>(s.count(Channel::b_photon)), static_cast<double>(s.count(Channel::decay)),
            static_cast<double>(s.count(Channel::pump)), static_cast<double>(s.cascade_count),
            or_absent(s.mean_intra_cascade_gap), s.eta_estimate, s.eta_stderr, s.half_b_rate, s.half_b_rate_stderr,
            s.pump_rate, s.pump_rate_stderr});
  } catch (const Error& e) {
    if (e.error_class() != ErrorClass::undefined_estimate) throw;
    out.warnings.push_back(e.what());
  }
  out.tables.push_back(std::move(st));

  const EnsembleSeries es = ensemble_average(recs);
  Table pop{"traj_populations", {"time", "pop_e", "pop_e_stderr", "n_a", "n_a_stderr", "n_b", "n_b_stderr"}, {}};
  for (std::size_t k = 0; k < es.time.size(); ++k)
    pop.add({es.time[k], es.pop_e[k], es.pop_e_stderr[k], es.n_a[k], es.n_a_stderr[k], es.n_b[k], es.n_b_stderr[k]});
  out.tables.push_back(std::move(pop));

  out.metadata["truncation"] = spec_value(c.spec);
  out.metadata["results"] = {{"max_jump_probability_per_step", max_dp},
                             {"suggested_dt", suggested_dt(c.params2, c.spec)},
                             {"rng", "philox4x32-10, key = seed, counter = (step, trajectory index)"}};
  return out;
}

inline RunOutput run_spectrum(const RunConfig& c) {
  RunOutput out;
  SpaceSpec spec = c.spec;
  if (c.auto_convergence) spec = run_truncation_convergence(c.params2, c.spec, c.convergence).converged;
  const Liouvillian liou = build_liouvillian(c.params2, spec);
  const DensityOperator rho = solve_steady_state(liou, c.convergence.steady);
  const double tau_max = c.spectrum.tau_max ? *c.spectrum.tau_max : default_tau_max(c.params2);
  const TauGrid grid = make_tau_grid(tau_max, c.spectrum.dtau);
  const DressedPeaks dressed = dressed_peaks(c.params2);
  SpectrumOptions opt;
  opt.omega_max = c.spectrum.omega_max;
  opt.window_rate = c.spectrum.window_rate;
  opt.expected_linewidth = std::min(c.params2.kappa1 + c.params2.gamma, c.params2.kappa2);
  Json peaks = Json::object();
  for (Mode m : c.spectrum.modes) {
    const auto corr = two_time_correlation(liou, rho, m, grid);
    const SpectrumResult s = emission_spectrum(corr, grid, m, opt);
    Table t{std::string("spectrum_") + mode_name(m), {"detuning_over_g1", "value"}, {}};
    if (c.params2.omega0) t.columns.push_back("offset_over_omega0");
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      std::vector<Cell> row{s.detunings[k], s.values[k]};
      if (c.params2.omega0) row.push_back(offset_over_omega0(s.detunings[k], c.params2));
      t.add(std::move(row));
    }
    Json pk = Json::array();
    for (const Peak& p : find_peaks(s, 1e-3)) pk.push_back({{"detuning_over_g1", p.detuning}, {"height", p.height}});
    peaks[mode_name(m)] = {{"resolution", s.resolution}, {"min_raw", s.min_raw}, {"peaks", pk}};
    for (const auto& w : s.warnings) out.warnings.push_back(std::string("mode ") + mode_name(m) + ": " + w);
    out.tables.push_back(std::move(t));
  }
  Residuals res;
  SteadyReport r = observables(rho, c.params2, spec);
  r.liouvillian_residual = (liou.matrix() * vectorize(rho.entries())).cwiseAbs().maxCoeff();
  res.add(r);
  out.metadata["truncation"] = spec_value(spec);
  out.metadata["residuals"] = res.json();
  out.metadata["results"] = {{"tau_max", grid.t_max()},
                             {"dtau", grid.dtau},
                             {"dressed_splitting", dressed.splitting},
                             {"dressed_mode_a", dressed.mode_a},
                             {"dressed_mode_b", dressed.mode_b},
                             {"suppression_ratio", dressed.suppression_ratio},
                             {"spectra", peaks}};
  return out;
}

inline RunOutput run_validate3(const RunConfig& c, int threads) {
  RunOutput out;
  const Validate3Settings& v = c.validate3;
  const FidelitySeries f = fidelity_series(c.params3, v.fidelity_t_max, v.fidelity_dt, v.fidelity_spec);
  Table ft{"validate3_fidelity", {"t_gprime", "fidelity"}, {}};
  for (std::size_t k = 0; k < f.time.size(); ++k) ft.add({f.time[k], f.fidelity[k]});
  out.tables.push_back(std::move(ft));

  MapdOptions opt;
  opt.spec2 = v.spec2;
  opt.spec3 = c.spec;
  opt.auto_convergence = c.auto_convergence;
  opt.convergence = c.convergence;
  opt.threads = threads;
  const MapdReport rep = mapd_sweep(c.params3, v.kappa2_over_g1, opt);
  Table mt{"validate3_mapd",
           {"kappa2_over_g1", "D_eta", "D_T", "D_O", "D_L", "eta_three", "eta_two", "pop_i", "na_max3", "nb_max3",
            "na_max2", "nb_max2"},
           {}};
  Residuals res;
  for (const auto& p : rep.points) {
    mt.add({p.kappa2_over_g1, or_absent(p.d_eta), or_absent(p.d_tpe), or_absent(p.d_ope), or_absent(p.d_loss),
            p.three.eta, p.two.eta, p.three.pop_i, static_cast<double>(p.three.truncation.na_max()),
            static_cast<double>(p.three.truncation.nb_max()), static_cast<double>(p.two.truncation.na_max()),
            static_cast<double>(p.two.truncation.nb_max())});
    res.add(p.three);
    res.add(p.two);
    check_balance(p.three, p.three.pop_i > 1e-6 ? 1e-4 : 1e-8, out.warnings);
  }
  out.tables.push_back(std::move(mt));
  out.metadata["truncation"] = {{"three_level", spec_value(c.spec)}, {"two_level", spec_value(v.spec2)},
                                {"fidelity", spec_value(v.fidelity_spec)}};
  out.metadata["residuals"] = res.json();
  out.metadata["results"] = {{"min_fidelity", f.min_fidelity},
                             {"norm_drift", f.norm_drift},
                             {"max_abs_deviation", rep.max_abs_deviation()},
                             {"g2_effective", effective_g2(c.params3.g3, c.params3.g4, c.params3.delta)}};
  out.metadata["unstated_defaults"] = {"three-level Fock cutoffs", "fidelity t_max"};
  for (const auto& w : f.warnings) out.warnings.push_back(w);
  return out;
}

}  // namespace detail

// Runs one configuration; no files are touched.
inline RunOutput run(const RunConfig& c, int threads = 1) {
  RunOutput out;
  switch (c.subcommand) {
    case Subcommand::steady: out = detail::run_steady(c); break;
    case Subcommand::sweep: out = detail::run_sweep(c, threads); break;
    case Subcommand::analytic: out = detail::run_analytic(c); break;
    case Subcommand::traj: out = detail::run_traj(c, threads); break;
    case Subcommand::spectrum: out = detail::run_spectrum(c); break;
    case Subcommand::validate3: out = detail::run_validate3(c, threads); break;
    case Subcommand::convergence: out = detail::run_convergence(c); break;
  }
  std::vector<std::string> warnings = config_warnings(c);
  warnings.insert(warnings.end(), out.warnings.begin(), out.warnings.end());
  out.warnings = std::move(warnings);

  Json meta;
  meta["tool"] = "tpe_cli";
  meta["version"] = TPE_VERSION;
  meta["libraries"] = {{"eigen", detail::eigen_version()},
                       {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  meta["units"] = c.model == ModelKind::three_level ? "rates in units of g'" : "rates in units of g1";
  meta["config"] = serialize(c);
  for (auto& [k, v] : out.metadata.items()) meta[k] = v;
  meta["warnings"] = out.warnings;
  out.metadata = std::move(meta);
  return out;
}

inline void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  for (const auto& t : out.tables) write_table(t, dir, out.metadata);
}

}  // namespace tpe
