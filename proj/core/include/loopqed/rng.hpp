#pragma once

#include <cstdint>
#include <random>

namespace loopqed {

/// splitmix64 mix of the (index+1)-th state after `master`; used to derive
/// independent, reproducible per-trajectory seeds
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// mt19937_64 with a manual double conversion so streams are identical across
// standard library implementations
class TrajectoryRng {
public:
  explicit TrajectoryRng(std::uint64_t seed) : gen_(seed) {}
  /// uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::uint64_t raw() { return gen_(); }

private:
  std::mt19937_64 gen_;
};

}  // namespace loopqed
