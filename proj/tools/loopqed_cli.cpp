// Command-line front end: runs named experiments from a JSON config, the
// built-in validation suite, and circle fits on exported traces.
//
// Exit codes: 0 success, 1 config error, 2 numerical non-convergence,
// 3 I/O error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "loopqed/experiments.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"loopqed - driven qubit in front of a mirror, discretized-waveguide simulator"};

  std::string config_path;
  std::string experiment;
  std::string out_dir;
  std::string fit_csv;
  std::uint64_t seed = 0;
  long trajectories = 0;
  int threads = -1;
  bool validate = false;
  bool seed_set = false, traj_set = false, out_set = false, threads_set = false;

  app.add_option("--config", config_path, "JSON experiment configuration");
  app.add_option("--experiment", experiment,
                 "experiment name (overrides config): reflection-map, reflection-cut, "
                 "tilt-scan, spectrum-single, spectrum-power-sweep, validate");
  app.add_option("--seed", seed, "master seed (overrides config)")->each([&](std::string) {
    seed_set = true;
  });
  app.add_option("--trajectories", trajectories, "trajectory count (overrides config)")
      ->each([&](std::string) { traj_set = true; });
  app.add_option("--out", out_dir, "output directory (overrides config)")->each([&](std::string) {
    out_set = true;
  });
  app.add_option("--threads", threads, "worker threads, 0 = hardware")->each([&](std::string) {
    threads_set = true;
  });
  app.add_flag("--validate", validate, "run the built-in oracle suite and exit");
  app.add_option("--fit-csv", fit_csv, "circle-fit a reflection trace CSV and print the result");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!fit_csv.empty()) {
      const loopqed::ReflectionTrace trace = loopqed::read_reflection_csv(fit_csv);
      const loopqed::CircleFitResult fit = loopqed::circle_fit(trace);
      std::printf("Gamma_tilde   %.9e\n", fit.Gamma_tilde);
      std::printf("gamma_d       %.9e\n", fit.gamma_d);
      std::printf("omega0_tilde  %.9e  (%.6f GHz)\n", fit.omega0_tilde,
                  fit.omega0_tilde / (2e9 * loopqed::kPi));
      std::printf("radius        %.9e\n", fit.radius);
      std::printf("tilt          %.9e rad\n", fit.tilt);
      std::printf("rms residual  %.3e%s\n", fit.rms_residual,
                  fit.non_circular_warning ? "  [non-circular warning]" : "");
      return 0;
    }

    loopqed::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = loopqed::ExperimentConfig::from_json_file(config_path);
    if (!experiment.empty()) cfg.experiment = experiment;
    if (validate) cfg.experiment = "validate";
    if (seed_set) cfg.master_seed = seed;
    if (traj_set) cfg.n_trajectories = trajectories;
    if (out_set) cfg.output_dir = out_dir;
    if (threads_set) cfg.threads = threads;
    if (cfg.experiment.empty()) {
      std::cerr << "error: no experiment selected (use --config or --experiment)\n";
      return 1;
    }

    if (cfg.experiment == "validate") {
      const loopqed::ValidateReport rep = loopqed::run_validate(cfg.master_seed, cfg.threads);
      for (const auto& item : rep.items)
        std::printf("[%s] %-32s %s\n", item.pass ? "PASS" : "FAIL", item.name.c_str(),
                    item.detail.c_str());
      std::printf("%s\n", rep.all_pass ? "all checks passed" : "FAILURES present");
      return rep.all_pass ? 0 : 2;
    }

    const loopqed::RunOutputs outputs = loopqed::run_experiment(cfg);
    for (const auto& f : outputs.files) std::printf("wrote %s/%s\n", cfg.output_dir.c_str(), f.c_str());
    return 0;
  } catch (const loopqed::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const loopqed::NonConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const loopqed::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
