#include "loopqed/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loopqed {

void LoopConfig::validate() const {
  if (n_bins < 1) throw std::invalid_argument("LoopConfig: n_bins must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("LoopConfig: tau must be > 0");
  if (!(phi > -2.0 * kPi && phi <= 2.0 * kPi + 1e-12))
    throw std::invalid_argument("LoopConfig: phi must lie in (-2pi, 2pi]");
}

void QubitParams::validate() const {
  if (Gamma < 0.0 || gamma_phi < 0.0 || gamma_L < 0.0)
    throw std::invalid_argument("QubitParams: rates must be >= 0");
}

void DriveParams::validate(const LoopConfig& loop, const QubitParams&) const {
  if (mode == DriveMode::linear) {
    if (Omega_NL != 0.0)
      throw std::invalid_argument("DriveParams: Omega_NL must be zero in linear mode");
    if (Omega_L < 0.0) throw std::invalid_argument("DriveParams: Omega_L must be >= 0");
    if (Omega_L * loop.tau >= 2.0)
      throw std::invalid_argument(
          "DriveParams: Omega_L*tau >= 2 exceeds the loop photon truncation");
  } else {
    if (Omega_L != 0.0)
      throw std::invalid_argument("DriveParams: Omega_L must be zero in nonlinear mode");
    if (Omega_NL < 0.0) throw std::invalid_argument("DriveParams: Omega_NL must be >= 0");
  }
}

DriveDerived derive_drive(const LoopConfig& loop, const QubitParams& qubit,
                          const DriveParams& drive) {
  DriveDerived out;
  out.delta = qubit.omega0 - drive.omega_p;
  out.phi_p = wrap_pi(loop.phi + (drive.omega_p - qubit.omega0) * loop.tau);
  out.Omega_eff = (drive.mode == DriveMode::nonlinear)
                      ? effective_rabi(drive.Omega_NL, out.phi_p)
                      : std::complex<double>{0.0, 0.0};
  return out;
}

double wrap_pi(double angle) {
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double wrap_two_pi(double angle) {
  double r = std::remainder(angle, 4.0 * kPi);
  if (r <= -2.0 * kPi) r += 4.0 * kPi;
  return r;
}

std::array<double, 2> fresh_input_bin(double Omega_L, double dt) {
  const double x = Omega_L * dt;
  if (x < 0.0 || x >= 1.0)
    throw std::invalid_argument("fresh_input_bin: Omega_L*dt must lie in [0, 1)");
  return {std::sqrt(1.0 - x), std::sqrt(x)};
}

double pump_phase(double omega_p, double tau, double phi_M) {
  if (!(tau > 0.0)) throw std::invalid_argument("pump_phase: tau must be > 0");
  return wrap_pi(phi_M + omega_p * tau);
}

std::complex<double> effective_rabi(double Omega_NL, double phi_p) {
  if (Omega_NL < 0.0) throw std::invalid_argument("effective_rabi: Omega_NL must be >= 0");
  return Omega_NL * (1.0 + std::polar(1.0, phi_p));
}

double round_trip_phase(double omega0, double tau, double reference_antinode_freq) {
  if (!(tau > 0.0)) throw std::invalid_argument("round_trip_phase: tau must be > 0");
  return wrap_two_pi((omega0 - reference_antinode_freq) * tau);
}

PhaseCalibration::PhaseCalibration(std::vector<std::pair<double, double>> points)
    : points_(std::move(points)) {
  std::sort(points_.begin(), points_.end());
  if (points_.size() < 2)
    throw std::invalid_argument("PhaseCalibration: need at least two points");
}

double PhaseCalibration::phi_at(double omega0) const {
  if (omega0 < points_.front().first || omega0 > points_.back().first)
    throw std::domain_error("PhaseCalibration: omega0 outside calibrated range");
  auto hi = std::lower_bound(points_.begin(), points_.end(), omega0,
                             [](const auto& p, double w) { return p.first < w; });
  if (hi == points_.begin()) return hi->second;
  auto lo = std::prev(hi);
  if (hi == points_.end()) return lo->second;
  const double t = (omega0 - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

}  // namespace loopqed
