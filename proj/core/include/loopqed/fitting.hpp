#pragma once

#include <complex>
#include <stdexcept>

#include "loopqed/observables.hpp"

namespace loopqed {

class NoResonanceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CircleFitResult {
  double Gamma_tilde = 0.0;
  double gamma_d = 0.0;
  double omega0_tilde = 0.0;
  Complex center{0.0, 0.0};
  double radius = 0.0;
  double tilt = 0.0;  // rotation of the resonance point about the off-resonant anchor
  double rms_residual = 0.0;
  Complex anchor{0.0, 0.0};       // off-resonant reference before normalization
  Complex resonance_point{0.0, 0.0};
  double se_Gamma_tilde = 0.0;
  double se_gamma_d = 0.0;
  double se_omega0_tilde = 0.0;
  double se_tilt = 0.0;
  bool non_circular_warning = false;
};

struct CircleFitOptions {
  bool anchor_normalize = true;    // scale the trace so the off-resonant anchor sits at 1
  double anchor_fraction = 0.10;   // outer fraction of frequency points forming the anchor
  double residual_warning = 0.05;  // rms residual / radius above this flags non-circularity
  double noise_floor_scale = 8.0;  // "no resonance" when radius < scale * anchor scatter
};

// Stage 1: weighted algebraic circle through the complex trace.
// Stage 2: phase-vs-frequency fit along the circle -> (omega0_tilde, gamma_d);
//          Gamma_tilde = 2 * radius * gamma_d.
// Stage 3: tilt = arg(anchor - resonance point), zero for a Markovian trace.
CircleFitResult circle_fit(const ReflectionTrace& trace, const CircleFitOptions& opts = {});

struct TiltConsistency {
  double predicted = 0.0;  // (omega0_tilde - omega0_bare) * tau
  double measured = 0.0;
  double difference = 0.0;
};

TiltConsistency tilt_consistency(const CircleFitResult& fit, double omega0_bare, double tau);

}  // namespace loopqed
