#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loopqed/fitting.hpp"
#include "loopqed/observables.hpp"

namespace loopqed {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SweepRange {
  double start = 0.0;
  double stop = 0.0;
  int points = 0;
  bool relative = false;  // values are offsets from a context-dependent center

  bool empty() const { return points <= 0; }
  std::vector<double> values(double center = 0.0) const;
};

// Fully-resolved experiment description. Parsed from a JSON config file with
// nested sections (loop/qubit/drive/basis/sweep/estimators); see the README
// for the schema. All frequencies and rates are angular (rad/s), times in
// seconds; output files use linear Hz.
struct ExperimentConfig {
  std::string experiment;  // reflection-map | reflection-cut | tilt-scan |
                           // spectrum-single | spectrum-power-sweep | validate
  LoopConfig loop;
  QubitParams qubit;
  DriveParams drive;
  bool phi_explicit = false;
  bool omega_p_relative = false;  // drive.omega_p given as offset from omega0
  int max_total = 2;
  int per_bin_cap = 1;
  std::vector<std::pair<double, double>> phase_calibration;

  SweepRange sweep_omega_p;
  SweepRange sweep_omega0;
  std::vector<double> powers_Omega_NL;
  std::vector<double> powers_dbm;
  double kappa = 0.0;

  ReflectionOptions reflection;
  G1Options g1;
  SweepRange spectrum_grid;

  long n_trajectories = 1000;
  std::uint64_t master_seed = 1;
  int threads = 0;
  std::string output_dir = "out";

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;  // canonical resolved form
  std::uint64_t hash() const;        // FNV-1a over the canonical form
  void validate() const;
  /// resolve derived quantities (auto n_bins, phi from calibration, omega_p)
  void finalize();
};

struct RunOutputs {
  std::vector<std::string> files;
  bool partial = false;
};

RunOutputs run_experiment(const ExperimentConfig& config);

struct ValidateReport {
  struct Item {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Item> items;
  bool all_pass = true;
};

/// built-in oracle checks (basis, drive, transport, Markov decay, fits, ...)
ValidateReport run_validate(std::uint64_t seed = 1, int threads = 0);

// serialization helpers (deterministic byte-stable formatting)
void write_spectrum_csv(const std::string& path, const Spectrum& spectrum);
void write_correlation_csv(const std::string& path, const CorrelationSeries& series);
void write_reflection_csv(const std::string& path, const ReflectionTrace& trace);
ReflectionTrace read_reflection_csv(const std::string& path);
void write_circle_fit_json(const std::string& path, const CircleFitResult& fit);

}  // namespace loopqed
