#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "loopqed/engine.hpp"
#include "loopqed/params.hpp"

namespace loopqed {

// Lagged first-order output correlation C(t2) = <B0+(t2) B0(0)>_ss in flux
// units (bin expectation / dt), with Monte Carlo standard errors.
struct CorrelationSeries {
  double dt = 0.0;
  Eigen::VectorXcd value;
  Eigen::VectorXd se_re;
  Eigen::VectorXd se_im;
  Complex coherent_offset{0.0, 0.0};  // <B0+>_ss <B0>_ss / dt
  double incoherent_flux = 0.0;       // Re C(0) - offset
  int n_trajectories = 0;
  int n_anchors = 0;
  bool zero_flagged = false;  // no output amplitude at the anchors
};

struct SpectrumMetadata {
  double phi = 0.0;
  double phi_p = 0.0;
  double Omega = 0.0;
  double Gamma = 0.0;
  double gamma_phi = 0.0;
  double gamma_L = 0.0;
  double omega_p = 0.0;
  int n_trajectories = 0;
  std::uint64_t master_seed = 0;
};

struct Spectrum {
  Eigen::VectorXd omega;  // absolute angular frequency, strictly increasing
  Eigen::VectorXd value;
  Eigen::VectorXd stderr_;
  SpectrumMetadata meta;
  bool tail_warning = false;
  double tail_ratio = 0.0;  // |C-offset| at max lag relative to its peak
};

struct ReflectionTrace {
  Eigen::VectorXd omega_p;
  Eigen::VectorXcd r;
  Eigen::VectorXd se_re;
  Eigen::VectorXd se_im;
  double drive_Omega_L = 0.0;
  SpectrumMetadata meta;
};

struct ReflectionOptions {
  int n_trajectories = 8;
  long max_steps = 0;       // 0 -> auto
  long window = 0;          // steady-state detection window, 0 -> auto
  double tol = 2e-3;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ReflectionResult {
  Complex r{0.0, 0.0};
  double se_re = 0.0;
  double se_im = 0.0;
  long steady_index = 0;
  double incoherent_flux = 0.0;
  bool se_defined = true;
};

// Steady-state reflection coefficient in the linear regime: trajectory average
// of the exit-bin amplitude normalized by the input-bin coherent amplitude.
ReflectionResult reflection_coefficient(const LoopConfig& cfg, const QubitParams& qubit,
                                        const DriveParams& drive, const ReflectionOptions& opts,
                                        int max_total = 2, int per_bin_cap = 1);

struct G1Options {
  long lag_steps = 0;        // 0 -> auto: 10/Gamma_tilde_est + 2 tau
  int n_trajectories = 100;
  int anchors_per_trajectory = 2;
  long settle_steps = 0;     // 0 -> auto
  long steady_window = 0;    // 0 -> auto; used to verify the settle choice
  double steady_tol = 5e-3;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Trajectory two-time correlation: four auxiliary states (1 +/- B0)psi and
// (1 -/+ iB0)psi co-evolved under the shared jump record, recombined from
// single-time expectations of B0+.
CorrelationSeries g1_correlation(const LoopConfig& cfg, const QubitParams& qubit,
                                 const DriveParams& drive, const G1Options& opts,
                                 int max_total = 2, int per_bin_cap = 1);

// S(omega) = sum dt Re[e^{-i(omega-omega_p) t2} (C(t2) - offset)] with
// trapezoid end weights; Monte Carlo errors propagated linearly.
Spectrum incoherent_spectrum(const CorrelationSeries& series, std::span<const double> omega_grid,
                             double omega_p, double tail_floor = 0.05);

struct EnsembleStats {
  Eigen::VectorXcd mean;
  Eigen::VectorXd se_re;
  Eigen::VectorXd se_im;
  int n = 0;
  bool se_defined = true;
};

// Unweighted mean and standard error over trajectory records sharing a config.
EnsembleStats ensemble_average(std::span<const TrajectoryRecord> records, std::string_view key);

/// default discretization: dt <= min(0.02/Gamma, 0.02/|Omega_eff|, tau/20)
int default_n_bins(double tau, const QubitParams& qubit, const DriveParams& drive);

/// rough effective relaxation for planning settle/lag windows
double estimate_gamma_tilde(const LoopConfig& cfg, const QubitParams& qubit);

}  // namespace loopqed
