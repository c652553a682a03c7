#include <doctest.h>

#include <cmath>

#include "loopqed/analytic.hpp"

using namespace loopqed;
using doctest::Approx;

TEST_SUITE("analytic") {

TEST_CASE("markovian reflection endpoints and limits") {
  MarkovianQubit m{2.0, 1.0, 100.0};  // gamma_d = Gamma_tilde/2: no dephasing
  CHECK(std::abs(markovian_reflection(100.0, m) - Complex(-1.0, 0.0)) < 1e-14);
  CHECK(std::abs(markovian_reflection(100.0 + 1e7, m) - Complex(1.0, 0.0)) < 1e-6);
  MarkovianQubit off{0.0, 1.0, 100.0};
  CHECK(std::abs(markovian_reflection(101.3, off) - Complex(1.0, 0.0)) < 1e-15);
  CHECK_THROWS_AS(markovian_reflection(1.0, MarkovianQubit{1.0, 0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("markovian reflection traces a circle") {
  MarkovianQubit m{1.7, 1.4, 50.0};
  const Complex center(1.0 - m.Gamma_tilde / (2.0 * m.gamma_d), 0.0);
  const double radius = m.Gamma_tilde / (2.0 * m.gamma_d);
  for (int i = -200; i <= 200; ++i) {
    const Complex r = markovian_reflection(50.0 + 0.1 * i, m);
    CHECK(std::abs(std::abs(r - center) - radius) < 1e-12);
  }
}

TEST_CASE("feedback-modified relaxation rate") {
  CHECK(markovian_rates(1.3, 0.0) == Approx(2.6));
  CHECK(markovian_rates(1.3, kPi) == Approx(0.0).epsilon(1e-12));
  CHECK(markovian_rates(1.3, -kPi) == Approx(0.0).epsilon(1e-12));
  CHECK(markovian_rates(1.3, kPi / 2.0) == Approx(1.3));
  CHECK_THROWS_AS(markovian_rates(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("dressed-emission oracle: triplet positions and symmetry") {
  MarkovianQubit m{2.0, 1.0, 1000.0};
  const double Omega = 16.0;  // 8 Gamma_tilde
  std::vector<double> grid;
  for (double w = m.omega0_tilde - 24.0; w <= m.omega0_tilde + 24.0; w += 0.2)
    grid.push_back(w);
  const OracleSpectrum s = mollow_spectrum_oracle(m, 0.0, Omega, 0.0, grid);

  // sideband peaks within one grid step of omega0_tilde +/- Omega
  auto peak_near = [&](double target) {
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::abs(grid[i] - target) < 4.0 && s.value[i] > best_v) {
        best_v = s.value[i];
        best = i;
      }
    }
    return grid[best];
  };
  CHECK(std::abs(peak_near(m.omega0_tilde + Omega) - (m.omega0_tilde + Omega)) <= 0.2 + 1e-9);
  CHECK(std::abs(peak_near(m.omega0_tilde - Omega) - (m.omega0_tilde - Omega)) <= 0.2 + 1e-9);

  // mirror symmetry about omega0_tilde for resonant drive
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double rel = std::abs(s.value[i] - s.value[n - 1 - i]);
    CHECK(rel < 1e-6 * (1.0 + std::abs(s.value[i])));
  }

  // no drive, zero temperature: no incoherent emission
  const OracleSpectrum quiet = mollow_spectrum_oracle(m, 0.0, 0.0, 0.0, grid);
  for (double v : quiet.value) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("dressed-emission oracle satisfies the spectral sum rule") {
  MarkovianQubit m{2.0, 1.35, 500.0};  // includes dephasing
  const double Omega = 12.0;
  std::vector<double> grid;
  for (double w = m.omega0_tilde - 90.0; w <= m.omega0_tilde + 90.0; w += 0.25)
    grid.push_back(w);
  const OracleSpectrum s =
      mollow_spectrum_oracle(m, m.gamma_d - m.Gamma_tilde / 2.0, Omega, 0.0, grid);
  double integral = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    integral += 0.5 * (s.value[i] + s.value[i - 1]) * (grid[i] - grid[i - 1]);
  CHECK(integral == Approx(kPi * s.incoherent_flux).epsilon(0.05));
}

TEST_CASE("bloch system reproduces free decay and dephasing rates") {
  BlochSystem sys;
  sys.Gamma_relax = 0.8;
  sys.gamma_phi = 0.3;
  sys.Omega = 0.0;
  sys.delta = 0.0;
  std::vector<double> pop;
  std::vector<Complex> coh;
  sys.evolve(Complex(0.5, 0.0), 0.5, 0.01, 600, pop, coh);
  for (int t : {100, 300, 600}) {
    const double expect_pop = 0.5 * std::exp(-0.8 * 0.01 * t);
    const double expect_coh = 0.5 * std::exp(-(0.8 / 2.0 + 0.3) * 0.01 * t);
    CHECK(pop[static_cast<std::size_t>(t)] == Approx(expect_pop).epsilon(1e-6));
    CHECK(std::abs(coh[static_cast<std::size_t>(t)]) == Approx(expect_coh).epsilon(1e-6));
  }
  BlochSystem dead;
  CHECK_THROWS_AS(dead.steady_state(), std::runtime_error);
}

TEST_CASE("node and antinode frequency ladders") {
  const double tau = 2.0, omega_p = 5.0, phi_p = 0.0;
  const auto nodes = node_frequencies(phi_p, omega_p, tau, 0, 1);
  CHECK(nodes[0] == Approx(omega_p - kPi / tau));
  CHECK(nodes[1] == Approx(omega_p + kPi / tau));
  // symmetric pair about the pump for phi_p = 0
  CHECK(nodes[0] + nodes[1] == Approx(2.0 * omega_p));

  const auto anti = antinode_frequencies(phi_p, omega_p, tau, -2, 2);
  CHECK(anti[2] == Approx(omega_p));
  for (std::size_t i = 1; i < anti.size(); ++i)
    CHECK(anti[i] - anti[i - 1] == Approx(2.0 * kPi / tau).epsilon(1e-12));

  // tau = 3.63 ns -> spacing 2 pi x 275.48 MHz
  const double tau_ns = 3.63e-9;
  const auto a_ns = antinode_frequencies(0.4, 0.0, tau_ns, 0, 1);
  CHECK((a_ns[1] - a_ns[0]) / (2.0 * kPi) == Approx(1.0 / tau_ns).epsilon(1e-12));
  CHECK((a_ns[1] - a_ns[0]) / (2.0 * kPi) == Approx(275.482e6).epsilon(1e-3));

  // nodes interleave exactly halfway between antinodes, lists never intersect
  for (double phi : {-2.3, -0.5, 0.0, 1.1, 2.9}) {
    const auto nn = node_frequencies(phi, omega_p, tau, -3, 3);
    const auto aa = antinode_frequencies(phi, omega_p, tau, -3, 3);
    for (std::size_t i = 0; i + 1 < aa.size(); ++i) {
      const double mid = 0.5 * (aa[i] + aa[i + 1]);
      bool found = false;
      for (double nf : nn)
        if (std::abs(nf - mid) < 1e-9) found = true;
      CHECK(found);
    }
    for (double nf : nn)
      for (double af : aa) CHECK(std::abs(nf - af) > 1e-6);
  }
}

TEST_CASE("transmon flux-frequency relation") {
  TransmonParams t{2.0 * kPi * 17e9, 2.0 * kPi * 0.27e9, 1.0};
  const double f0 = transmon_frequency(0.0, t);
  CHECK(f0 == Approx(std::sqrt(8.0 * t.E_J0 * t.E_C) - t.E_C).epsilon(1e-14));
  // Phi_ext = Phi0/3 -> E_J = E_J0 / 2
  const double f3 = transmon_frequency(1.0 / 3.0, t);
  CHECK(f3 == Approx(std::sqrt(8.0 * (t.E_J0 / 2.0) * t.E_C) - t.E_C).epsilon(1e-12));
  double prev = f0;
  for (int i = 1; i <= 45; ++i) {
    const double f = transmon_frequency(0.011 * i, t);
    CHECK(f < prev);
    prev = f;
  }
  CHECK_THROWS_AS(transmon_frequency(0.4999, t), std::domain_error);
  CHECK_THROWS_AS(transmon_frequency(0.0, TransmonParams{1.0, 2.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("round-trip phase at a shifted frequency") {
  const double tau = 3.63e-9, phi = -0.632 * kPi, omega0 = 2.0 * kPi * 4.822e9;
  CHECK(phase_at_frequency(omega0, omega0, tau, phi) == Approx(phi));
  // a -16 MHz feedback shift tilts by (omega_tilde - omega0) tau = -0.365 rad
  const double omega_t = omega0 - 2.0 * kPi * 16e6;
  CHECK(phase_at_frequency(omega_t, omega0, tau, phi) - phi == Approx(-0.36493).epsilon(1e-3));
  // linearity
  const double a = phase_at_frequency(omega0 + 1e8, omega0, tau, phi);
  const double b = phase_at_frequency(omega0 + 2e8, omega0, tau, phi);
  CHECK(b - a == Approx(a - phi).epsilon(1e-9));
}

}  // TEST_SUITE
