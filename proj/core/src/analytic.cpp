#include "loopqed/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "loopqed/transform.hpp"

namespace loopqed {

using Complex = std::complex<double>;

void MarkovianQubit::validate() const {
  if (Gamma_tilde < 0.0) throw std::invalid_argument("MarkovianQubit: Gamma_tilde < 0");
  if (gamma_d < Gamma_tilde / 2.0 - 1e-12 * std::max(1.0, Gamma_tilde))
    throw std::invalid_argument("MarkovianQubit: gamma_d < Gamma_tilde/2");
}

Complex markovian_reflection(double omega_p, const MarkovianQubit& m) {
  if (!(m.gamma_d > 0.0)) throw std::invalid_argument("markovian_reflection: gamma_d must be > 0");
  const double Delta = omega_p - m.omega0_tilde;
  return 1.0 - Complex(0.0, m.Gamma_tilde) / Complex(Delta, m.gamma_d);
}

double markovian_rates(double Gamma, double phi) {
  if (Gamma < 0.0) throw std::invalid_argument("markovian_rates: Gamma must be >= 0");
  return Gamma * (1.0 + std::cos(phi));
}

Eigen::Matrix4cd BlochSystem::generator() const {
  const double gamma_perp = Gamma_relax / 2.0 + gamma_phi;
  const Complex I(0.0, 1.0);
  Eigen::Matrix4cd A = Eigen::Matrix4cd::Zero();
  // basis (m-, m+, mn, m1)
  A(0, 0) = -(I * delta + gamma_perp);
  A(0, 2) = I * Omega;          // -i(Omega/2)(m1 - 2 mn)
  A(0, 3) = -I * Omega / 2.0;
  A(1, 1) = I * delta - gamma_perp;
  A(1, 2) = -I * Omega;
  A(1, 3) = I * Omega / 2.0;
  A(2, 0) = I * Omega / 2.0;    // -i(Omega/2)(m+ - m-)
  A(2, 1) = -I * Omega / 2.0;
  A(2, 2) = -Gamma_relax;
  return A;
}

Eigen::Vector3cd BlochSystem::steady_state() const {
  const Eigen::Matrix4cd A = generator();
  Eigen::Matrix3cd A3 = A.topLeftCorner<3, 3>();
  Eigen::Vector3cd b = A.topRightCorner<3, 1>();
  if (A3.fullPivLu().rank() < 3)
    throw std::runtime_error("BlochSystem: singular generator (no drive and no damping)");
  return A3.fullPivLu().solve(-b);
}

namespace {

// RK4 on v' = A v with substepping for stiffness margin
void rk4_evolve(const Eigen::Matrix4cd& A, Eigen::Vector4cd& v, double dt, int substeps) {
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    const Eigen::Vector4cd k1 = A * v;
    const Eigen::Vector4cd k2 = A * (v + 0.5 * h * k1);
    const Eigen::Vector4cd k3 = A * (v + 0.5 * h * k2);
    const Eigen::Vector4cd k4 = A * (v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

int substeps_for(const BlochSystem& sys, double dt) {
  const double scale =
      std::max({std::abs(sys.delta), sys.Omega, sys.Gamma_relax + sys.gamma_phi, 1e-300});
  return std::max(1, static_cast<int>(std::ceil(dt * scale / 0.05)));
}

}  // namespace

void BlochSystem::evolve(Complex sm0, double n0, double dt, long steps,
                         std::vector<double>& population,
                         std::vector<Complex>& coherence) const {
  const Eigen::Matrix4cd A = generator();
  Eigen::Vector4cd v;
  v << sm0, std::conj(sm0), Complex(n0, 0.0), Complex(1.0, 0.0);
  const int sub = substeps_for(*this, dt);
  population.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  coherence.assign(static_cast<std::size_t>(steps) + 1, Complex{});
  population[0] = n0;
  coherence[0] = sm0;
  for (long t = 1; t <= steps; ++t) {
    rk4_evolve(A, v, dt, sub);
    population[static_cast<std::size_t>(t)] = v(2).real();
    coherence[static_cast<std::size_t>(t)] = v(0);
  }
}

std::vector<Complex> BlochSystem::regression_spsm(double dt, long steps) const {
  const Eigen::Vector3cd ss = steady_state();
  const Eigen::Matrix4cd A = generator();
  Eigen::Vector4cd v;
  // M(0) = sigma- rho_ss: components (0, <n>_ss, 0, <sm>_ss)
  v << Complex{0.0, 0.0}, ss(2), Complex{0.0, 0.0}, ss(0);
  const int sub = substeps_for(*this, dt);
  std::vector<Complex> g(static_cast<std::size_t>(steps) + 1);
  g[0] = v(1);
  for (long t = 1; t <= steps; ++t) {
    rk4_evolve(A, v, dt, sub);
    g[static_cast<std::size_t>(t)] = v(1);
  }
  return g;
}

OracleSpectrum mollow_spectrum_oracle(const MarkovianQubit& m, double gamma_phi, double Omega,
                                      double delta, std::span<const double> omega_grid,
                                      const MollowOptions& opts) {
  if (Omega < 0.0 || gamma_phi < 0.0 || opts.gamma_L < 0.0)
    throw std::invalid_argument("mollow_spectrum_oracle: rates must be >= 0");
  m.validate();
  BlochSystem sys;
  sys.delta = delta;
  sys.Omega = Omega;
  sys.Gamma_relax = m.Gamma_tilde + opts.gamma_L;
  sys.gamma_phi = gamma_phi;

  const double rate_scale =
      std::max({Omega, sys.Gamma_relax, gamma_phi, std::abs(delta), 1e-300});
  const double slow =
      std::max(std::min(sys.Gamma_relax / 2.0 + gamma_phi, sys.Gamma_relax), 1e-300);
  const double dt = opts.dt > 0.0 ? opts.dt : 0.02 / rate_scale;
  long lags = opts.lag_steps > 0 ? opts.lag_steps
                                 : static_cast<long>(std::ceil(15.0 / (slow * dt)));
  lags = std::min<long>(lags, 4'000'000);

  const Eigen::Vector3cd ss = sys.steady_state();
  const Complex offset = std::conj(ss(0)) * ss(0);  // <sp>_ss <sm>_ss
  std::vector<Complex> g = sys.regression_spsm(dt, lags);
  std::vector<Complex> c(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) c[i] = m.Gamma_tilde * (g[i] - offset);

  const double omega_p = m.omega0_tilde - delta;
  std::vector<double> omega_rel(omega_grid.size());
  for (std::size_t i = 0; i < omega_grid.size(); ++i) omega_rel[i] = omega_grid[i] - omega_p;

  OracleSpectrum out;
  out.omega.assign(omega_grid.begin(), omega_grid.end());
  out.value = half_range_transform(c, dt, omega_rel);
  out.incoherent_flux = m.Gamma_tilde * (ss(2).real() - std::norm(ss(0)));
  return out;
}

std::vector<double> node_frequencies(double phi_p, double omega_p, double tau, int k_min,
                                     int k_max) {
  if (!(tau > 0.0)) throw std::invalid_argument("node_frequencies: tau must be > 0");
  std::vector<double> out;
  for (int k = k_min; k <= k_max; ++k)
    out.push_back(((2.0 * k - 1.0) * kPi - phi_p) / tau + omega_p);
  return out;
}

std::vector<double> antinode_frequencies(double phi_p, double omega_p, double tau, int k_min,
                                         int k_max) {
  if (!(tau > 0.0)) throw std::invalid_argument("antinode_frequencies: tau must be > 0");
  std::vector<double> out;
  for (int k = k_min; k <= k_max; ++k) out.push_back((2.0 * kPi * k - phi_p) / tau + omega_p);
  return out;
}

void TransmonParams::validate() const {
  if (!(E_J0 > E_C && E_C > 0.0))
    throw std::invalid_argument("TransmonParams: require E_J0 > E_C > 0");
  if (!(Phi0 > 0.0)) throw std::invalid_argument("TransmonParams: Phi0 must be > 0");
}

double transmon_frequency(double Phi_ext, const TransmonParams& t) {
  t.validate();
  const double E_J = t.E_J0 * std::abs(std::cos(kPi * Phi_ext / t.Phi0));
  const double root = std::sqrt(8.0 * E_J * t.E_C);
  if (!(root > t.E_C))
    throw std::domain_error("transmon_frequency: flux too close to half quantum");
  return root - t.E_C;
}

double phase_at_frequency(double omega_prime, double omega0, double tau, double phi) {
  if (!(tau > 0.0)) throw std::invalid_argument("phase_at_frequency: tau must be > 0");
  return (omega_prime - omega0) * tau + phi;
}

}  // namespace loopqed
