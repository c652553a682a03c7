#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

namespace loopqed {

inline constexpr double kPi = std::numbers::pi_v<double>;

// Feedback-loop geometry and discretization. `phi` is the round-trip phase at
// the qubit frequency; it anchors all other phases, so a measured calibration
// can be injected here directly. dt is always tau/n_bins.
struct LoopConfig {
  double tau = 0.0;
  int n_bins = 0;  // N; the delay is N steps of dt
  double phi_M = kPi;
  double phi = 0.0;
  double reference_antinode_freq = 0.0;

  double dt() const { return tau / n_bins; }
  void validate() const;
};

struct QubitParams {
  double omega0 = 0.0;
  double Gamma = 0.0;      // total waveguide relaxation rate
  double gamma_phi = 0.0;  // pure dephasing
  double gamma_L = 0.0;    // phenomenological loss

  void validate() const;
};

enum class DriveMode { linear, nonlinear };

struct DriveParams {
  DriveMode mode = DriveMode::linear;
  double omega_p = 0.0;
  double Omega_L = 0.0;   // linear-regime Rabi rate (per-bin flux Omega_L*dt)
  double Omega_NL = 0.0;  // nonlinear-regime Rabi rate

  void validate(const LoopConfig& loop, const QubitParams& qubit) const;
};

struct DriveDerived {
  double delta = 0.0;                       // omega0 - omega_p
  double phi_p = 0.0;                       // pump round-trip phase, (-pi, pi]
  std::complex<double> Omega_eff{0.0, 0.0};  // Omega_NL (1 + e^{i phi_p})
};

// phi_p is anchored to the calibrated phi: phi_p = phi + (omega_p - omega0)*tau
DriveDerived derive_drive(const LoopConfig& loop, const QubitParams& qubit,
                          const DriveParams& drive);

/// reduce an angle to (-pi, pi]
double wrap_pi(double angle);
/// reduce an angle to (-2pi, 2pi] without collapsing the sign of full turns
double wrap_two_pi(double angle);

/// weak-coherent input bin amplitudes on (|0>, |1>); throws if Omega_L*dt >= 1
std::array<double, 2> fresh_input_bin(double Omega_L, double dt);

/// phi_p = phi_M + omega_p*tau reduced to (-pi, pi]
double pump_phase(double omega_p, double tau, double phi_M);

std::complex<double> effective_rabi(double Omega_NL, double phi_p);

/// phi = (omega0 - reference)*tau reduced to (-2pi, 2pi]
double round_trip_phase(double omega0, double tau, double reference_antinode_freq);

// Measured (omega0 <-> phi) table overriding the linear dispersion formula.
class PhaseCalibration {
public:
  explicit PhaseCalibration(std::vector<std::pair<double, double>> points);
  double phi_at(double omega0) const;  // linear interpolation; throws outside range
  bool empty() const { return points_.empty(); }

private:
  std::vector<std::pair<double, double>> points_;
};

/// Omega_NL from pump power in dBm via one amplitude-proportional constant
inline double omega_nl_from_dbm(double power_dbm, double kappa) {
  return kappa * std::pow(10.0, power_dbm / 20.0);
}

}  // namespace loopqed
