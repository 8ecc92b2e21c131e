#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tpe/run.hpp"

namespace {

// One JSON object on stderr; the exit code follows the error class.
int report_error(const tpe::Error& e) {
  tpe::Json j{{"error_class", tpe::error_class_name(e.error_class())}, {"message", e.what()}};
  if (const auto* ce = dynamic_cast<const tpe::ConvergenceError*>(&e)) {
    tpe::Json drift = tpe::Json::object();
    for (const auto& [name, value] : ce->drift()) drift[name] = value;
    j["drift"] = drift;
  }
  std::cerr << j.dump() << '\n';
  return tpe::exit_code_for(e.error_class());
}

int threads_from_env() {
  const char* v = std::getenv("TPE_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) tpe::fail(tpe::ErrorClass::config, std::string("TPE_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-photon emission simulator: steady states, sweeps, trajectories, spectra."};
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  bool dry_run = false;
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (default: $TPE_THREADS or 1)")
                          ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_flag("--dry-run", dry_run, "print the materialized configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error(tpe::Error(tpe::ErrorClass::config, e.what()));
  }

  try {
    std::ifstream is(config_path);
    if (!is) tpe::fail(tpe::ErrorClass::config, "cannot read config file " + config_path);
    std::ostringstream text;
    text << is.rdbuf();
    tpe::RunConfig config = tpe::parse_config(text.str());
    if (*out_opt) config.out = out_dir;
    if (*seed_opt) config.seed = seed;
    if (!*threads_opt) threads = threads_from_env();

    if (dry_run) {
      std::cout << tpe::serialize(config).dump(2) << '\n';
      return 0;
    }

    const tpe::RunOutput result = tpe::run(config, threads);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    tpe::write_outputs(result, config.out);
    for (const auto& t : result.tables)
      std::cout << (std::filesystem::path(config.out) / (t.name + ".csv")).string() << '\n';
    return 0;
  } catch (const tpe::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    return report_error(tpe::Error(tpe::ErrorClass::numerical_failure, e.what()));
  }
}
