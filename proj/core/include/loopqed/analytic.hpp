#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "loopqed/params.hpp"

namespace loopqed {

// Effective Markovian qubit as seen through the feedback loop.
struct MarkovianQubit {
  double Gamma_tilde = 0.0;
  double gamma_d = 0.0;
  double omega0_tilde = 0.0;

  void validate() const;  // gamma_d >= Gamma_tilde/2
};

/// r(omega_p) = 1 - i*Gamma_tilde / (Delta + i*gamma_d), Delta = omega_p - omega0_tilde
std::complex<double> markovian_reflection(double omega_p, const MarkovianQubit& m);

/// feedback-modified relaxation rate Gamma*(1 + cos phi)
double markovian_rates(double Gamma, double phi);

// Driven two-level steady state and regression coefficients; the workhorse
// behind the dressed-emission oracle and the Lindblad comparison traces.
struct BlochSystem {
  double delta = 0.0;       // omega_qubit - omega_pump in the rotating frame
  double Omega = 0.0;       // drive Rabi rate (real; phase drops out of spectra)
  double Gamma_relax = 0.0; // total relaxation feeding the equations
  double gamma_phi = 0.0;

  // steady state of (<sm>, <sp>, <n>)
  Eigen::Vector3cd steady_state() const;
  // populations/coherence on a uniform grid from an initial (sm0, n0)
  void evolve(std::complex<double> sm0, double n0, double dt, long steps,
              std::vector<double>& population, std::vector<std::complex<double>>& coherence) const;
  // regression correlator g(t2) = <sigma+(t2) sigma-(0)>_ss on a uniform grid
  std::vector<std::complex<double>> regression_spsm(double dt, long steps) const;

  Eigen::Matrix4cd generator() const;  // acting on (m-, m+, mn, m1)
};

struct MollowOptions {
  double dt = 0.0;        // 0 -> auto from rates
  long lag_steps = 0;     // 0 -> auto (until decayed)
  double gamma_L = 0.0;   // extra loss in the dynamics (not emitted into the line)
};

struct OracleSpectrum {
  std::vector<double> omega;
  std::vector<double> value;
  double incoherent_flux = 0.0;  // Gamma_tilde * (<n>_ss - |<sm>_ss|^2)
};

// Incoherent emission spectrum of the driven qubit: optical Bloch equations to
// steady state, quantum regression for <sigma+(t2) sigma-(0)>, coherent part
// subtracted, then the same one-sided discrete transform contract used for
// trajectory spectra. `delta` is omega0_tilde - omega_p.
OracleSpectrum mollow_spectrum_oracle(const MarkovianQubit& m, double gamma_phi, double Omega,
                                      double delta, std::span<const double> omega_grid,
                                      const MollowOptions& opts = {});

/// omega_node = ((2k-1)pi - phi_p)/tau + omega_p for k in [k_min, k_max]
std::vector<double> node_frequencies(double phi_p, double omega_p, double tau, int k_min,
                                     int k_max);
/// omega_antinode = (2 pi k - phi_p)/tau + omega_p for k in [k_min, k_max]
std::vector<double> antinode_frequencies(double phi_p, double omega_p, double tau, int k_min,
                                         int k_max);

struct TransmonParams {
  double E_J0 = 0.0;  // maximal Josephson energy, angular frequency units
  double E_C = 0.0;   // charging energy, angular frequency units
  double Phi0 = 1.0;  // flux quantum in the units of Phi_ext

  void validate() const;  // E_J0 > E_C > 0
};

/// omega0 = sqrt(8 E_J(Phi) E_C) - E_C with E_J = E_J0 |cos(pi Phi/Phi0)|
double transmon_frequency(double Phi_ext, const TransmonParams& t);

/// phi_{omega'} = (omega' - omega0)*tau + phi (unreduced)
double phase_at_frequency(double omega_prime, double omega0, double tau, double phi);

}  // namespace loopqed
