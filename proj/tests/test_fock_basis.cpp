#include <doctest.h>

#include <complex>

#include "loopqed/fock_basis.hpp"
#include "loopqed/rng.hpp"

using namespace loopqed;

namespace {

StateVector random_state(const std::shared_ptr<const FockBasis>& basis, std::uint64_t seed) {
  TrajectoryRng rng(seed);
  StateVector s(basis);
  for (std::size_t i = 0; i < basis->dimension(); ++i)
    s.set_amplitude(i, Complex(rng.uniform() - 0.5, rng.uniform() - 0.5));
  s.normalize();
  return s;
}

}  // namespace

TEST_SUITE("fock_basis") {

TEST_CASE("dimension counts for capped photon numbers") {
  CHECK(build_basis(2, 1, 1)->dimension() == 6);
  CHECK(build_basis(3, 2, 1)->dimension() == 14);
  CHECK(build_basis(10, 2, 1)->dimension() == 112);
  // generic invariant: dimension = 2 * sum_j #occupations(j)
  const auto b = build_basis(5, 3, 2);
  std::size_t total = 0;
  for (int j = 0; j <= 3; ++j) total += b->occupation_count(j);
  CHECK(b->dimension() == 2 * total);
}

TEST_CASE("rejects invalid construction") {
  CHECK_THROWS_AS(build_basis(0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_basis(3, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_basis(3, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_basis(400, 2, 1, /*budget=*/1 << 12), SizingError);
}

TEST_CASE("index round trip over the whole basis") {
  const auto b = build_basis(7, 2, 1);
  for (std::size_t i = 0; i < b->dimension(); ++i) {
    const auto occ = b->occupation(i);
    CHECK(b->index_of(b->qubit_level(i), occ) == i);
  }
}

TEST_CASE("deterministic ordering: total excitation, occupation, qubit fastest") {
  const auto b = build_basis(3, 2, 1);
  CHECK(b->qubit_level(0) == 0);
  CHECK(b->qubit_level(1) == 1);
  CHECK(b->total_photons(0) == 0);
  // first photon block starts after the two vacuum states
  CHECK(b->total_photons(2) == 1);
  int prev_total = 0;
  for (std::size_t i = 0; i < b->dimension(); i += 2) {
    const int t = b->total_photons(i);
    CHECK(t >= prev_total);
    prev_total = t;
  }
}

TEST_CASE("qubit ladder on basis states") {
  const auto b = build_basis(2, 1, 1);
  StateVector excited = StateVector::vacuum(b, 1);
  const StateVector lowered = apply_ladder(excited, qubit_op(), LadderDirection::lower);
  const StateVector ground = StateVector::vacuum(b, 0);
  CHECK(std::abs(ground.inner(lowered) - Complex(1.0, 0.0)) < 1e-15);
  // raising the excited level maps to zero
  const StateVector raised = apply_ladder(excited, qubit_op(), LadderDirection::raise);
  CHECK(raised.recompute_norm_squared() == 0.0);
}

TEST_CASE("bin ladder annihilates vacuum and lowers single occupation") {
  const auto b = build_basis(3, 2, 1);
  const StateVector vac = StateVector::vacuum(b, 0);
  CHECK(apply_ladder(vac, bin_op(1), LadderDirection::lower).recompute_norm_squared() == 0.0);

  std::vector<std::uint8_t> occ{0, 1, 0};
  StateVector one(b);
  one.set_amplitude(b->index_of(0, occ), Complex(1.0, 0.0));
  const StateVector low = apply_ladder(one, bin_op(1), LadderDirection::lower);
  CHECK(std::abs(vac.inner(low) - Complex(1.0, 0.0)) < 1e-15);
  CHECK_THROWS_AS(apply_ladder(one, bin_op(5), LadderDirection::lower), std::out_of_range);
}

TEST_CASE("adjointness of lowering and raising") {
  const auto b = build_basis(4, 2, 1);
  const StateVector psi = random_state(b, 11);
  const StateVector phi = random_state(b, 12);
  for (const LadderOp op : {qubit_op(), bin_op(0), bin_op(3)}) {
    const Complex lhs = phi.inner(apply_ladder(psi, op, LadderDirection::lower));
    const Complex rhs = std::conj(psi.inner(apply_ladder(phi, op, LadderDirection::raise)));
    CHECK(std::abs(lhs - rhs) < 1e-13);
  }
}

TEST_CASE("commutation below the caps") {
  const auto b = build_basis(3, 2, 2);
  for (std::size_t i = 0; i < b->dimension(); ++i) {
    if (b->total_photons(i) >= b->max_total()) continue;
    for (int k = 0; k < b->n_bins(); ++k) {
      if (b->bin_occupation(i, k) >= b->per_bin_cap()) continue;
      StateVector e(b);
      e.set_amplitude(i, Complex(1.0, 0.0));
      const StateVector bbd =
          apply_ladder(apply_ladder(e, bin_op(k), LadderDirection::raise), bin_op(k),
                       LadderDirection::lower);
      const StateVector bdb =
          apply_ladder(apply_ladder(e, bin_op(k), LadderDirection::lower), bin_op(k),
                       LadderDirection::raise);
      for (std::size_t j = 0; j < b->dimension(); ++j) {
        const Complex diff = bbd.amplitude(j) - bdb.amplitude(j) - e.amplitude(j);
        CHECK(std::abs(diff) < 1e-12);
      }
    }
  }
}

TEST_CASE("ladder application is linear") {
  const auto b = build_basis(4, 2, 1);
  const StateVector psi1 = random_state(b, 21);
  const StateVector psi2 = random_state(b, 22);
  const Complex alpha(0.3, -0.8), beta(-1.1, 0.2);
  StateVector combo(b);
  for (std::size_t i = 0; i < b->dimension(); ++i)
    combo.set_amplitude(i, alpha * psi1.amplitude(i) + beta * psi2.amplitude(i));
  const StateVector left = apply_ladder(combo, bin_op(2), LadderDirection::lower);
  const StateVector r1 = apply_ladder(psi1, bin_op(2), LadderDirection::lower);
  const StateVector r2 = apply_ladder(psi2, bin_op(2), LadderDirection::lower);
  for (std::size_t i = 0; i < b->dimension(); ++i)
    CHECK(std::abs(left.amplitude(i) - alpha * r1.amplitude(i) - beta * r2.amplitude(i)) <
          1e-12);
}

TEST_CASE("expectation values of normal-ordered monomials") {
  const auto b = build_basis(3, 2, 1);
  const StateVector excited = StateVector::vacuum(b, 1);
  CHECK(std::abs(expectation(excited, monomials::qubit_population()) - 1.0) < 1e-15);
  const StateVector vac = StateVector::vacuum(b, 0);
  CHECK(std::abs(expectation(vac, monomials::bin_number(2))) < 1e-15);

  // <b_k> on (sqrt(0.99)|0> + sqrt(0.01)|1>)_k, rest vacuum
  StateVector s(b);
  std::vector<std::uint8_t> occ{0, 0, 0};
  s.set_amplitude(b->index_of(0, occ), Complex(std::sqrt(0.99), 0.0));
  occ[1] = 1;
  s.set_amplitude(b->index_of(0, occ), Complex(std::sqrt(0.01), 0.0));
  const Complex amp = expectation(s, monomials::bin_amplitude(1));
  CHECK(std::abs(amp - std::sqrt(0.0099)) < 1e-12);
  CHECK(std::abs(amp.real() - 0.09950) < 1e-4);

  NormalOrderedMonomial bad;
  bad.lowering = {bin_op(9)};
  CHECK_THROWS_AS(expectation(s, bad), std::invalid_argument);
}

TEST_CASE("norm cache stays consistent") {
  const auto b = build_basis(3, 1, 1);
  StateVector s(b);
  s.set_amplitude(0, Complex(0.6, 0.0));
  s.set_amplitude(3, Complex(0.0, 0.8));
  CHECK(s.norm_cache_consistent());
  CHECK(std::abs(s.norm_squared() - 1.0) < 1e-12);
  s.mutable_amplitudes()(0) = Complex(1.0, 0.0);
  s.refresh_norm();
  CHECK(s.norm_cache_consistent());
  s.normalize();
  CHECK(std::abs(s.recompute_norm_squared() - 1.0) < 1e-12);
}

}  // TEST_SUITE
