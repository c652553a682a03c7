#include "loopqed/transform.hpp"

#include <cmath>

namespace loopqed {

std::vector<double> half_range_transform(std::span<const std::complex<double>> values, double dt,
                                         std::span<const double> omega_rel) {
  std::vector<double> out(omega_rel.size(), 0.0);
  const long L = static_cast<long>(values.size()) - 1;
  if (L < 1) return out;
  for (std::size_t iw = 0; iw < omega_rel.size(); ++iw) {
    const double w = omega_rel[iw];
    const std::complex<double> step = std::polar(1.0, -w * dt);
    std::complex<double> phase{1.0, 0.0};
    double acc = 0.5 * values[0].real();
    for (long l = 1; l <= L; ++l) {
      phase *= step;
      const double weight = (l == L) ? 0.5 : 1.0;
      acc += weight * (phase * values[static_cast<std::size_t>(l)]).real();
    }
    out[iw] = dt * acc;
  }
  return out;
}

}  // namespace loopqed
