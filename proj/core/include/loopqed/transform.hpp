#pragma once

#include <complex>
#include <span>
#include <vector>

namespace loopqed {

// One-sided discrete transform shared by trajectory and oracle spectra:
//   S(w) = dt * Re[ c_0/2 + sum_{l=1}^{L-1} e^{-i w l dt} c_l + e^{-i w L dt} c_L/2 ]
// evaluated per relative frequency w = omega - omega_p.
std::vector<double> half_range_transform(std::span<const std::complex<double>> values, double dt,
                                         std::span<const double> omega_rel);

}  // namespace loopqed
