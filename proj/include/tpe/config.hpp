#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpe/model.hpp"
#include "tpe/spectra.hpp"
#include "tpe/steady.hpp"
#include "tpe/trajectories.hpp"

namespace tpe {

using Json = nlohmann::ordered_json;

enum class Subcommand { steady, sweep, analytic, traj, spectrum, validate3, convergence };
enum class ModelKind { two_level, three_level };

inline const char* subcommand_name(Subcommand s) noexcept {
  switch (s) {
    case Subcommand::steady: return "steady";
    case Subcommand::sweep: return "sweep";
    case Subcommand::analytic: return "analytic";
    case Subcommand::traj: return "traj";
    case Subcommand::spectrum: return "spectrum";
    case Subcommand::validate3: return "validate3";
    case Subcommand::convergence: return "convergence";
  }
  return "?";
}

struct SweepConfig {
  std::string axis;
  std::vector<double> grid;
  bool operator==(const SweepConfig&) const = default;
};

struct TrajSettings {
  std::size_t count = 16;
  double t_max = 3000.0;
  double dt = 0.0015;
  int sample_stride = 1000;
  Propagation propagation = Propagation::block;
  bool event_log = true;
  bool operator==(const TrajSettings&) const = default;
};

struct SpectrumSettings {
  std::vector<Mode> modes{Mode::a, Mode::b};
  std::optional<double> tau_max;  // default 20 / min(kappa1 + gamma, kappa2)
  double dtau = 0.05;
  double omega_max = 3.0;
  std::optional<double> window_rate;
  bool operator==(const SpectrumSettings&) const = default;
};

struct AnalyticSettings {
  bool ode = false;
  double ode_t_max = 2000.0;
  double ode_dt = 1e-3;
  int fermi_max_n = 5;
  bool operator==(const AnalyticSettings&) const = default;
};

struct Validate3Settings {
  double fidelity_t_max = 50.0;
  double fidelity_dt = 0.05;
  SpaceSpec fidelity_spec{3, 1, 2};
  SpaceSpec spec2{2, 3, 6};
  std::vector<double> kappa2_over_g1{0.2, 0.5, 1.0, 2.0, 5.0};
  bool operator==(const Validate3Settings&) const = default;
};

struct RunConfig {
  Subcommand subcommand = Subcommand::steady;
  ModelKind model = ModelKind::two_level;
  TwoLevelParams params2;
  ThreeLevelParams params3;
  SpaceSpec spec{2, 3, 6};
  bool auto_convergence = false;
  ConvergenceOptions convergence;
  std::optional<SweepConfig> sweep;
  TrajSettings traj;
  SpectrumSettings spectrum;
  AnalyticSettings analytic;
  Validate3Settings validate3;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::optional<double> g1_hz;

  bool operator==(const RunConfig& o) const {
    return subcommand == o.subcommand && model == o.model && params2 == o.params2 && params3 == o.params3 &&
           spec == o.spec && auto_convergence == o.auto_convergence && convergence.tol == o.convergence.tol &&
           convergence.max_na == o.convergence.max_na && convergence.max_nb == o.convergence.max_nb &&
           sweep == o.sweep && traj == o.traj && spectrum == o.spectrum && analytic == o.analytic &&
           validate3 == o.validate3 && seed == o.seed && out == o.out && g1_hz == o.g1_hz;
  }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { fail(ErrorClass::config, msg); }

// Rejects keys outside the allowed set.
inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      config_error(where + ": unknown key '" + k + "'");
  }
}

inline double get_number(const Json& j, const std::string& key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number()) config_error(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::optional<double> get_optional_number(const Json& j, const std::string& key, const std::string& where,
                                                 std::optional<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (j.at(key).is_null()) return std::nullopt;
  return get_number(j, key, where, 0.0);
}

inline long long get_integer(const Json& j, const std::string& key, const std::string& where, long long fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) config_error(where + "." + key + ": expected an integer");
  return v.get<long long>();
}

inline bool get_bool(const Json& j, const std::string& key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean()) config_error(where + "." + key + ": expected true or false");
  return v.get<bool>();
}

inline std::string get_string(const Json& j, const std::string& key, const std::string& where,
                              const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_string()) config_error(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

// Explicit list, or {start, stop, points, spacing}. Returned sorted; duplicates rejected.
inline std::vector<double> parse_grid(const Json& j, const std::string& where) {
  std::vector<double> g;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) config_error(where + ": grid entries must be numbers");
      g.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    check_keys(j, where, {"start", "stop", "points", "spacing"});
    if (!j.contains("start") || !j.contains("stop") || !j.contains("points"))
      config_error(where + ": generated grid needs start, stop and points");
    const double a = get_number(j, "start", where, 0.0);
    const double b = get_number(j, "stop", where, 0.0);
    const long long n = get_integer(j, "points", where, 0);
    const std::string spacing = get_string(j, "spacing", where, "log");
    if (n < 1) config_error(where + ".points: must be >= 1");
    if (spacing == "log") {
      if (!(a > 0.0) || !(b > 0.0)) config_error(where + ": log spacing needs start, stop > 0");
      g = log_grid(a, b, static_cast<std::size_t>(n));
    } else if (spacing == "linear") {
      g = linear_grid(a, b, static_cast<std::size_t>(n));
    } else {
      config_error(where + ".spacing: expected 'log' or 'linear'");
    }
  } else {
    config_error(where + ": expected a list or {start, stop, points, spacing}");
  }
  if (g.empty()) config_error(where + ": grid is empty");
  for (double x : g)
    if (!std::isfinite(x)) config_error(where + ": grid entries must be finite");
  std::sort(g.begin(), g.end());
  if (std::adjacent_find(g.begin(), g.end()) != g.end()) config_error(where + ": grid has duplicate values");
  return g;
}

inline SpaceSpec parse_spec(const Json& j, const std::string& where, int atom_levels, const SpaceSpec& fallback) {
  check_keys(j, where, {"na_max", "nb_max"});
  const long long na = get_integer(j, "na_max", where, fallback.na_max());
  const long long nb = get_integer(j, "nb_max", where, fallback.nb_max());
  try {
    return SpaceSpec(atom_levels, static_cast<int>(na), static_cast<int>(nb));
  } catch (const Error& e) {
    config_error(where + ": " + e.what());
  }
}

inline Json spec_json(const SpaceSpec& s) { return Json{{"na_max", s.na_max()}, {"nb_max", s.nb_max()}}; }

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  using namespace detail;
  check_keys(j, "config",
             {"subcommand", "model", "params", "spec", "auto_convergence", "convergence", "sweep", "trajectories",
              "spectrum", "analytic", "validate3", "seed", "out", "g1_hz"});
  RunConfig c;
  if (!j.contains("subcommand")) config_error("config.subcommand: required");
  const std::string sub = get_string(j, "subcommand", "config", "");
  bool found = false;
  for (Subcommand s : {Subcommand::steady, Subcommand::sweep, Subcommand::analytic, Subcommand::traj,
                       Subcommand::spectrum, Subcommand::validate3, Subcommand::convergence})
    if (sub == subcommand_name(s)) {
      c.subcommand = s;
      found = true;
    }
  if (!found) config_error("config.subcommand: unknown subcommand '" + sub + "'");

  const bool v3 = c.subcommand == Subcommand::validate3;
  const std::string model = get_string(j, "model", "config", v3 ? "three_level" : "two_level");
  if (model == "two_level") {
    c.model = ModelKind::two_level;
  } else if (model == "three_level") {
    c.model = ModelKind::three_level;
  } else {
    config_error("config.model: expected 'two_level' or 'three_level'");
  }
  const bool three = c.model == ModelKind::three_level;
  if (v3 && !three) config_error("config.model: validate3 runs on the three-level model");
  if (three && !(c.subcommand == Subcommand::steady || c.subcommand == Subcommand::convergence || v3))
    config_error("config.model: three_level is supported by steady, convergence and validate3 only");
  if (three) c.spec = SpaceSpec(3, 3, 7);

  const Json params = j.value("params", Json::object());
  if (three) {
    check_keys(params, "params", {"g1", "g3", "g4", "delta", "kappa1", "kappa2", "P", "gamma", "omega0"});
    ThreeLevelParams& p = c.params3;
    p.g1 = get_number(params, "g1", "params", p.g1);
    p.g3 = get_number(params, "g3", "params", p.g3);
    p.g4 = get_number(params, "g4", "params", p.g4);
    p.delta = get_number(params, "delta", "params", p.delta);
    p.kappa1 = get_number(params, "kappa1", "params", p.kappa1);
    p.kappa2 = get_number(params, "kappa2", "params", p.kappa2);
    p.pump = get_number(params, "P", "params", p.pump);
    p.gamma = get_number(params, "gamma", "params", p.gamma);
    p.omega0 = get_optional_number(params, "omega0", "params", p.omega0);
    try {
      p.validate();
    } catch (const Error& e) {
      config_error(std::string("params: ") + e.what());
    }
  } else {
    check_keys(params, "params", {"g1", "g2", "kappa1", "kappa2", "P", "gamma", "omega0"});
    TwoLevelParams& p = c.params2;
    p.g1 = get_number(params, "g1", "params", p.g1);
    p.g2 = get_number(params, "g2", "params", p.g2);
    p.kappa1 = get_number(params, "kappa1", "params", p.kappa1);
    p.kappa2 = get_number(params, "kappa2", "params", p.kappa2);
    p.pump = get_number(params, "P", "params", p.pump);
    p.gamma = get_number(params, "gamma", "params", p.gamma);
    p.omega0 = get_optional_number(params, "omega0", "params", p.omega0);
    try {
      p.validate();
    } catch (const Error& e) {
      config_error(std::string("params: ") + e.what());
    }
  }

  if (j.contains("spec")) c.spec = parse_spec(j.at("spec"), "spec", three ? 3 : 2, c.spec);
  c.auto_convergence = get_bool(j, "auto_convergence", "config", c.auto_convergence);
  if (j.contains("convergence")) {
    const Json& cv = j.at("convergence");
    check_keys(cv, "convergence", {"tol", "max_na", "max_nb"});
    c.convergence.tol = get_number(cv, "tol", "convergence", c.convergence.tol);
    c.convergence.max_na = static_cast<int>(get_integer(cv, "max_na", "convergence", c.convergence.max_na));
    c.convergence.max_nb = static_cast<int>(get_integer(cv, "max_nb", "convergence", c.convergence.max_nb));
    if (!(c.convergence.tol > 0.0)) config_error("convergence.tol: must be > 0");
  }
  if (c.auto_convergence && (c.convergence.max_na < c.spec.na_max() + 1 || c.convergence.max_nb < c.spec.nb_max() + 2))
    config_error("convergence.max_na/max_nb: ceiling must allow at least one step above spec " + c.spec.to_string());

  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    check_keys(s, "sweep", {"axis", "grid"});
    if (!s.contains("axis")) config_error("sweep.axis: required");
    if (!s.contains("grid")) config_error("sweep.grid: required");
    const auto axis = parse_axis(get_string(s, "axis", "sweep", ""));
    if (!axis) config_error("sweep.axis: expected one of g1, g2, kappa1, kappa2, P, gamma");
    c.sweep = SweepConfig{axis_name(*axis), parse_grid(s.at("grid"), "sweep.grid")};
    for (double v : c.sweep->grid) {
      try {
        with_axis(c.params2, *axis, v).validate();
      } catch (const Error& e) {
        config_error("sweep.grid: value " + std::to_string(v) + " invalid for " + c.sweep->axis + ": " + e.what());
      }
    }
  }
  if (c.subcommand == Subcommand::sweep && !c.sweep) config_error("sweep: a sweep run needs a sweep section");
  if (c.sweep && !(c.subcommand == Subcommand::sweep || c.subcommand == Subcommand::analytic))
    config_error("sweep: only sweep and analytic runs take a sweep section");

  if (j.contains("trajectories")) {
    const Json& t = j.at("trajectories");
    check_keys(t, "trajectories", {"count", "t_max", "dt", "sample_stride", "propagation", "event_log"});
    const long long n = get_integer(t, "count", "trajectories", static_cast<long long>(c.traj.count));
    if (n < 1) config_error("trajectories.count: must be >= 1");
    c.traj.count = static_cast<std::size_t>(n);
    c.traj.t_max = get_number(t, "t_max", "trajectories", c.traj.t_max);
    c.traj.dt = get_number(t, "dt", "trajectories", c.traj.dt);
    c.traj.sample_stride = static_cast<int>(get_integer(t, "sample_stride", "trajectories", c.traj.sample_stride));
    const std::string prop = get_string(t, "propagation", "trajectories", "block");
    if (prop == "block") {
      c.traj.propagation = Propagation::block;
    } else if (prop == "full") {
      c.traj.propagation = Propagation::full;
    } else {
      config_error("trajectories.propagation: expected 'block' or 'full'");
    }
    c.traj.event_log = get_bool(t, "event_log", "trajectories", c.traj.event_log);
    if (!(c.traj.t_max > 0.0)) config_error("trajectories.t_max: must be > 0");
    if (!(c.traj.dt > 0.0)) config_error("trajectories.dt: must be > 0");
    if (c.traj.sample_stride < 1) config_error("trajectories.sample_stride: must be >= 1");
  }

  if (j.contains("spectrum")) {
    const Json& s = j.at("spectrum");
    check_keys(s, "spectrum", {"modes", "tau_max", "dtau", "omega_max", "window_rate"});
    if (s.contains("modes")) {
      if (!s.at("modes").is_array() || s.at("modes").empty()) config_error("spectrum.modes: expected a non-empty list");
      std::set<Mode> modes;
      for (const auto& m : s.at("modes")) {
        if (m == "a") {
          modes.insert(Mode::a);
        } else if (m == "b") {
          modes.insert(Mode::b);
        } else {
          config_error("spectrum.modes: entries must be 'a' or 'b'");
        }
      }
      c.spectrum.modes.assign(modes.begin(), modes.end());
    }
    c.spectrum.tau_max = get_optional_number(s, "tau_max", "spectrum", c.spectrum.tau_max);
    c.spectrum.dtau = get_number(s, "dtau", "spectrum", c.spectrum.dtau);
    c.spectrum.omega_max = get_number(s, "omega_max", "spectrum", c.spectrum.omega_max);
    c.spectrum.window_rate = get_optional_number(s, "window_rate", "spectrum", c.spectrum.window_rate);
    if (c.spectrum.tau_max && !(*c.spectrum.tau_max > 0.0)) config_error("spectrum.tau_max: must be > 0");
    if (!(c.spectrum.dtau > 0.0)) config_error("spectrum.dtau: must be > 0");
    if (!(c.spectrum.omega_max > 0.0)) config_error("spectrum.omega_max: must be > 0");
  }

  if (j.contains("analytic")) {
    const Json& a = j.at("analytic");
    check_keys(a, "analytic", {"ode", "ode_t_max", "ode_dt", "fermi_max_n"});
    c.analytic.ode = get_bool(a, "ode", "analytic", c.analytic.ode);
    c.analytic.ode_t_max = get_number(a, "ode_t_max", "analytic", c.analytic.ode_t_max);
    c.analytic.ode_dt = get_number(a, "ode_dt", "analytic", c.analytic.ode_dt);
    c.analytic.fermi_max_n = static_cast<int>(get_integer(a, "fermi_max_n", "analytic", c.analytic.fermi_max_n));
    if (!(c.analytic.ode_t_max > 0.0) || !(c.analytic.ode_dt > 0.0))
      config_error("analytic: ode_t_max and ode_dt must be > 0");
    if (c.analytic.fermi_max_n < 1) config_error("analytic.fermi_max_n: must be >= 1");
  }

  if (j.contains("validate3")) {
    const Json& v = j.at("validate3");
    check_keys(v, "validate3", {"fidelity_t_max", "fidelity_dt", "fidelity_spec", "spec2", "kappa2_over_g1"});
    Validate3Settings& s = c.validate3;
    s.fidelity_t_max = get_number(v, "fidelity_t_max", "validate3", s.fidelity_t_max);
    s.fidelity_dt = get_number(v, "fidelity_dt", "validate3", s.fidelity_dt);
    if (v.contains("fidelity_spec")) s.fidelity_spec = parse_spec(v.at("fidelity_spec"), "validate3.fidelity_spec", 3, s.fidelity_spec);
    if (v.contains("spec2")) s.spec2 = parse_spec(v.at("spec2"), "validate3.spec2", 2, s.spec2);
    if (v.contains("kappa2_over_g1")) s.kappa2_over_g1 = parse_grid(v.at("kappa2_over_g1"), "validate3.kappa2_over_g1");
    if (!(s.fidelity_t_max > 0.0) || !(s.fidelity_dt > 0.0))
      config_error("validate3: fidelity_t_max and fidelity_dt must be > 0");
    for (double r : s.kappa2_over_g1)
      if (!(r > 0.0)) config_error("validate3.kappa2_over_g1: values must be > 0");
  }

  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      config_error("config.seed: expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.out = get_string(j, "out", "config", c.out);
  if (c.out.empty()) config_error("config.out: must not be empty");
  c.g1_hz = get_optional_number(j, "g1_hz", "config", c.g1_hz);
  if (c.g1_hz && !(*c.g1_hz > 0.0)) config_error("config.g1_hz: must be > 0");
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorClass::config, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig parse_config(const char* text) { return parse_config(std::string(text)); }

// Every field, defaults included.
inline Json serialize(const RunConfig& c) {
  using detail::optional_json;
  using detail::spec_json;
  Json j;
  j["subcommand"] = subcommand_name(c.subcommand);
  const bool three = c.model == ModelKind::three_level;
  j["model"] = three ? "three_level" : "two_level";
  if (three) {
    const ThreeLevelParams& p = c.params3;
    j["params"] = {{"g1", p.g1}, {"g3", p.g3}, {"g4", p.g4}, {"delta", p.delta}, {"kappa1", p.kappa1},
                   {"kappa2", p.kappa2}, {"P", p.pump}, {"gamma", p.gamma}, {"omega0", optional_json(p.omega0)}};
  } else {
    const TwoLevelParams& p = c.params2;
    j["params"] = {{"g1", p.g1},         {"g2", p.g2}, {"kappa1", p.kappa1}, {"kappa2", p.kappa2},
                   {"P", p.pump},        {"gamma", p.gamma}, {"omega0", optional_json(p.omega0)}};
  }
  j["spec"] = spec_json(c.spec);
  j["auto_convergence"] = c.auto_convergence;
  j["convergence"] = {{"tol", c.convergence.tol}, {"max_na", c.convergence.max_na}, {"max_nb", c.convergence.max_nb}};
  if (c.sweep) j["sweep"] = {{"axis", c.sweep->axis}, {"grid", c.sweep->grid}};
  j["trajectories"] = {{"count", c.traj.count},
                       {"t_max", c.traj.t_max},
                       {"dt", c.traj.dt},
                       {"sample_stride", c.traj.sample_stride},
                       {"propagation", c.traj.propagation == Propagation::block ? "block" : "full"},
                       {"event_log", c.traj.event_log}};
  Json modes = Json::array();
  for (Mode m : c.spectrum.modes) modes.push_back(mode_name(m));
  j["spectrum"] = {{"modes", modes},
                   {"tau_max", optional_json(c.spectrum.tau_max)},
                   {"dtau", c.spectrum.dtau},
                   {"omega_max", c.spectrum.omega_max},
                   {"window_rate", optional_json(c.spectrum.window_rate)}};
  j["analytic"] = {{"ode", c.analytic.ode},
                   {"ode_t_max", c.analytic.ode_t_max},
                   {"ode_dt", c.analytic.ode_dt},
                   {"fermi_max_n", c.analytic.fermi_max_n}};
  j["validate3"] = {{"fidelity_t_max", c.validate3.fidelity_t_max},
                    {"fidelity_dt", c.validate3.fidelity_dt},
                    {"fidelity_spec", spec_json(c.validate3.fidelity_spec)},
                    {"spec2", spec_json(c.validate3.spec2)},
                    {"kappa2_over_g1", c.validate3.kappa2_over_g1}};
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["g1_hz"] = optional_json(c.g1_hz);
  return j;
}

inline std::vector<std::string> config_warnings(const RunConfig& c) {
  return c.model == ModelKind::three_level ? c.params3.validity_warnings() : c.params2.validity_warnings();
}

}  // namespace tpe
