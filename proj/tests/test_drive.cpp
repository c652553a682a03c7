#include <doctest.h>

#include <cmath>

#include "loopqed/params.hpp"

using namespace loopqed;
using doctest::Approx;

TEST_SUITE("drive") {

TEST_CASE("fresh input bin amplitudes") {
  const auto off = fresh_input_bin(0.0, 0.1);
  CHECK(off[0] == 1.0);
  CHECK(off[1] == 0.0);
  const auto weak = fresh_input_bin(1.0, 0.01);  // Omega_L dt = 0.01
  CHECK(weak[0] == Approx(std::sqrt(0.99)).epsilon(1e-14));
  CHECK(weak[1] == Approx(std::sqrt(0.01)).epsilon(1e-14));
  for (double x : {1e-6, 0.01, 0.3, 0.92}) {
    const auto a = fresh_input_bin(x, 1.0);
    CHECK(a[0] * a[0] + a[1] * a[1] == Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(fresh_input_bin(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(fresh_input_bin(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("pump phase reduction to (-pi, pi]") {
  const double tau = 1.0;
  CHECK(pump_phase(17.0 * kPi, tau, kPi) == Approx(0.0).epsilon(1e-12));
  CHECK(pump_phase(6.0 * kPi, tau, kPi) == Approx(kPi));
  CHECK(pump_phase(kPi / 2.0, tau, kPi) == Approx(-kPi / 2.0));
  // periodicity in omega_p with period 2 pi / tau
  for (double w : {0.3, 2.9, -4.4}) {
    CHECK(pump_phase(w + 2.0 * kPi / tau, tau, 1.1) ==
          Approx(pump_phase(w, tau, 1.1)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(pump_phase(1.0, 0.0, kPi), std::invalid_argument);
}

TEST_CASE("effective rabi frequency") {
  CHECK(std::abs(effective_rabi(1.5, 0.0) - Complex(3.0, 0.0)) < 1e-14);
  CHECK(std::abs(effective_rabi(1.5, kPi)) < 1e-12);
  const Complex mid = effective_rabi(1.0, kPi / 2.0);
  CHECK(mid.real() == Approx(1.0));
  CHECK(mid.imag() == Approx(1.0));
  CHECK(std::abs(mid) == Approx(std::sqrt(2.0)));
  // |Omega_eff| in [0, 2 Omega_NL] with extrema at phi_p in {0, pi}
  double max_seen = 0.0, min_seen = 1e9;
  for (int i = 0; i <= 200; ++i) {
    const double phi_p = -kPi + i * (2.0 * kPi / 200.0);
    const double mag = std::abs(effective_rabi(1.0, phi_p));
    CHECK(mag <= 2.0 + 1e-12);
    max_seen = std::max(max_seen, mag);
    min_seen = std::min(min_seen, mag);
  }
  CHECK(max_seen == Approx(2.0).epsilon(1e-3));
  CHECK(min_seen < 1e-3);
  CHECK_THROWS_AS(effective_rabi(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("round trip phase relative to the reference antinode") {
  const double tau = 3.63e-9;
  const double ref = 2.0 * kPi * 4.9e9;
  CHECK(round_trip_phase(ref, tau, ref) == Approx(0.0));
  // linearity in the offset
  const double dw = 2.0 * kPi * 25e6;
  CHECK(round_trip_phase(ref + dw, tau, ref) == Approx(dw * tau).epsilon(1e-12));
  // sign-preserving reduction to (-2pi, 2pi]
  CHECK(wrap_two_pi(3.0 * kPi) == Approx(-kPi));
  CHECK(wrap_two_pi(1.9 * kPi) == Approx(1.9 * kPi));
  CHECK(wrap_two_pi(-1.9 * kPi) == Approx(-1.9 * kPi));
}

TEST_CASE("measured phase calibration table overrides the linear formula") {
  // the device calibration pins phi(4.772 GHz) = -pi even though the ideal
  // formula gives about -0.93 pi
  const double tau = 3.63e-9;
  const double ref = 2.0 * kPi * 4.9e9;
  const double w_node = 2.0 * kPi * 4.772e9;
  CHECK(std::abs(round_trip_phase(w_node, tau, ref) + 0.929 * kPi) < 0.01);
  PhaseCalibration cal({{w_node, -kPi}, {ref, 0.0}, {2.0 * kPi * 5.047e9, kPi}});
  CHECK(cal.phi_at(w_node) == Approx(-kPi));
  CHECK(cal.phi_at(ref) == Approx(0.0));
  const double mid = 0.5 * (w_node + ref);
  CHECK(cal.phi_at(mid) == Approx(-kPi / 2.0));
  CHECK_THROWS_AS(cal.phi_at(2.0 * kPi * 6e9), std::domain_error);
}

TEST_CASE("derived drive quantities stay consistent with primitives") {
  LoopConfig loop{1.0, 16, kPi, -0.632 * kPi, 0.0};
  QubitParams qubit{5.0, 1.0, 0.0, 0.0};
  DriveParams drive;
  drive.mode = DriveMode::nonlinear;
  drive.omega_p = 5.0 - 0.383;
  drive.Omega_NL = 2.0;
  const DriveDerived der = derive_drive(loop, qubit, drive);
  CHECK(der.delta == Approx(0.383).epsilon(1e-12));
  CHECK(der.phi_p == Approx(wrap_pi(loop.phi - der.delta * loop.tau)).epsilon(1e-12));
  CHECK(std::abs(der.Omega_eff - effective_rabi(drive.Omega_NL, der.phi_p)) < 1e-12);
}

TEST_CASE("drive validation") {
  LoopConfig loop{1.0, 8, kPi, 0.0, 0.0};
  QubitParams qubit{0.0, 1.0, 0.0, 0.0};
  DriveParams bad;
  bad.mode = DriveMode::linear;
  bad.Omega_L = 2.5;  // Omega_L * tau >= 2 exceeds the loop truncation
  CHECK_THROWS_AS(bad.validate(loop, qubit), std::invalid_argument);
  DriveParams mixed;
  mixed.mode = DriveMode::linear;
  mixed.Omega_L = 0.1;
  mixed.Omega_NL = 0.1;
  CHECK_THROWS_AS(mixed.validate(loop, qubit), std::invalid_argument);
  DriveParams ok;
  ok.mode = DriveMode::nonlinear;
  ok.Omega_NL = 3.0;
  CHECK_NOTHROW(ok.validate(loop, qubit));
}

TEST_CASE("power calibration is amplitude proportional") {
  const double kappa = 2.0e6;
  CHECK(omega_nl_from_dbm(-100.0, kappa) == Approx(kappa * 1e-5));
  CHECK(omega_nl_from_dbm(-94.0, kappa) / omega_nl_from_dbm(-100.0, kappa) ==
        Approx(std::pow(10.0, 0.3)));
}

}  // TEST_SUITE
