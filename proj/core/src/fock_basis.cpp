#include "loopqed/fock_basis.hpp"

#include <algorithm>
#include <cmath>

namespace loopqed {

namespace {

void enumerate_exact(int n_bins, int cap, int photons, std::vector<std::uint8_t>& scratch,
                     int bin, int remaining, std::vector<std::uint64_t>& out) {
  if (bin == n_bins) {
    if (remaining == 0) {
      std::uint64_t key = 0;
      int shift = 0;
      for (int k = 0; k < n_bins; ++k) {
        for (int c = 0; c < scratch[k]; ++c) {
          key |= (static_cast<std::uint64_t>(k) + 1) << shift;
          shift += 16;
        }
      }
      out.push_back(key);
    }
    return;
  }
  const int bins_left_after = n_bins - bin - 1;
  for (int v = 0; v <= std::min(cap, remaining); ++v) {
    if (remaining - v > bins_left_after * cap) continue;
    scratch[bin] = static_cast<std::uint8_t>(v);
    enumerate_exact(n_bins, cap, photons, scratch, bin + 1, remaining - v, out);
  }
  scratch[bin] = 0;
}

}  // namespace

std::uint64_t FockBasis::pack(std::span<const std::uint8_t> occ) {
  std::uint64_t key = 0;
  int shift = 0;
  for (std::size_t k = 0; k < occ.size(); ++k) {
    for (int c = 0; c < occ[k]; ++c) {
      key |= (static_cast<std::uint64_t>(k) + 1) << shift;
      shift += 16;
    }
  }
  return key;
}

FockBasis::FockBasis(int n_bins, int max_total, int per_bin_cap,
                     std::size_t memory_budget_bytes)
    : n_bins_(n_bins), max_total_(max_total), cap_(per_bin_cap) {
  if (n_bins < 1) throw std::invalid_argument("FockBasis: n_bins must be >= 1");
  if (max_total < 1) throw std::invalid_argument("FockBasis: max_total must be >= 1");
  if (per_bin_cap < 1) throw std::invalid_argument("FockBasis: per_bin_cap must be >= 1");
  if (max_total > kMaxTotalSupported)
    throw std::invalid_argument("FockBasis: max_total beyond supported packing");
  if (n_bins >= (1 << 16) - 1) throw std::invalid_argument("FockBasis: too many bins");

  // dimension known in closed form only for cap=1; estimate generically by
  // counting before committing memory
  std::vector<std::uint8_t> scratch(static_cast<std::size_t>(n_bins), 0);
  count_by_total_.assign(static_cast<std::size_t>(max_total) + 1, 0);
  std::vector<std::uint64_t> keys;
  for (int j = 0; j <= max_total; ++j) {
    const std::size_t before = keys.size();
    enumerate_exact(n_bins, cap_, j, scratch, 0, j, keys);
    count_by_total_[static_cast<std::size_t>(j)] = keys.size() - before;
    // basis states dominate memory downstream: one state vector plus engine
    // tables come to ~64 bytes per basis state
    const std::size_t projected_dim = 2 * keys.size();
    if (projected_dim * 64 > memory_budget_bytes) {
      throw SizingError("FockBasis: dimension exceeds memory budget", projected_dim * 64,
                        memory_budget_bytes);
    }
  }
  occ_keys_ = std::move(keys);
  rank_.reserve(occ_keys_.size() * 2);
  for (std::uint32_t i = 0; i < occ_keys_.size(); ++i) rank_.emplace(occ_keys_[i], i);
}

std::size_t FockBasis::occupation_count(int j) const {
  if (j < 0 || j > max_total_) return 0;
  return count_by_total_[static_cast<std::size_t>(j)];
}

int FockBasis::total_photons(std::size_t index) const {
  std::uint64_t key = occ_keys_[index >> 1];
  int n = 0;
  while (key) {
    ++n;
    key >>= 16;
  }
  return n;
}

int FockBasis::bin_occupation(std::size_t index, int bin) const {
  std::uint64_t key = occ_keys_[index >> 1];
  const std::uint64_t want = static_cast<std::uint64_t>(bin) + 1;
  int n = 0;
  while (key) {
    if ((key & 0xffffu) == want) ++n;
    key >>= 16;
  }
  return n;
}

void FockBasis::occupation(std::size_t index, std::span<std::uint8_t> out) const {
  if (out.size() != static_cast<std::size_t>(n_bins_))
    throw std::invalid_argument("FockBasis::occupation: bad span size");
  std::fill(out.begin(), out.end(), std::uint8_t{0});
  std::uint64_t key = occ_keys_[index >> 1];
  while (key) {
    out[static_cast<std::size_t>((key & 0xffffu) - 1)] += 1;
    key >>= 16;
  }
}

std::vector<std::uint8_t> FockBasis::occupation(std::size_t index) const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n_bins_), 0);
  occupation(index, out);
  return out;
}

std::int64_t FockBasis::try_index_of(int qubit, std::span<const std::uint8_t> occ) const {
  if (qubit < 0 || qubit > 1) return -1;
  if (occ.size() != static_cast<std::size_t>(n_bins_)) return -1;
  int total = 0;
  for (std::size_t k = 0; k < occ.size(); ++k) {
    if (occ[k] > cap_) return -1;
    total += occ[k];
  }
  if (total > max_total_) return -1;
  const auto it = rank_.find(pack(occ));
  if (it == rank_.end()) return -1;
  return static_cast<std::int64_t>(2 * it->second + static_cast<std::uint32_t>(qubit));
}

std::size_t FockBasis::index_of(int qubit, std::span<const std::uint8_t> occ) const {
  const std::int64_t idx = try_index_of(qubit, occ);
  if (idx < 0) throw std::out_of_range("FockBasis::index_of: state outside basis");
  return static_cast<std::size_t>(idx);
}

std::int64_t FockBasis::shifted_index(std::size_t index, int bin, int delta) const {
  if (bin < 0 || bin >= n_bins_) throw std::out_of_range("FockBasis: bin index out of range");
  std::vector<std::uint8_t> occ = occupation(index);
  const int next = occ[static_cast<std::size_t>(bin)] + delta;
  if (next < 0 || next > cap_) return -1;
  occ[static_cast<std::size_t>(bin)] = static_cast<std::uint8_t>(next);
  return try_index_of(qubit_level(index), occ);
}

std::shared_ptr<const FockBasis> build_basis(int n_bins, int max_total, int per_bin_cap,
                                             std::size_t memory_budget_bytes) {
  return std::make_shared<const FockBasis>(n_bins, max_total, per_bin_cap,
                                           memory_budget_bytes);
}

StateVector::StateVector(std::shared_ptr<const FockBasis> basis)
    : basis_(std::move(basis)),
      amp_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis_->dimension()))) {}

StateVector StateVector::vacuum(std::shared_ptr<const FockBasis> basis, int qubit_level) {
  StateVector s(std::move(basis));
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(s.basis().n_bins()), 0);
  s.set_amplitude(s.basis().index_of(qubit_level, occ), Complex(1.0, 0.0));
  return s;
}

void StateVector::set_amplitude(std::size_t i, Complex v) {
  const Eigen::Index idx = static_cast<Eigen::Index>(i);
  norm2_ += std::norm(v) - std::norm(amp_[idx]);
  amp_[idx] = v;
}

bool StateVector::norm_cache_consistent(double tol) const {
  return std::abs(recompute_norm_squared() - norm2_) <= tol * std::max(1.0, norm2_);
}

void StateVector::normalize() {
  const double n2 = recompute_norm_squared();
  if (n2 <= 0.0) throw std::runtime_error("StateVector::normalize: zero state");
  amp_ /= std::sqrt(n2);
  norm2_ = 1.0;
}

Complex StateVector::inner(const StateVector& other) const {
  if (other.dimension() != dimension())
    throw std::invalid_argument("StateVector::inner: dimension mismatch");
  return amp_.dot(other.amp_);  // Eigen dot conjugates the left argument
}

StateVector apply_ladder(const StateVector& state, LadderOp op, LadderDirection dir) {
  const FockBasis& b = state.basis();
  StateVector out(state.basis_ptr());
  auto& res = out.mutable_amplitudes();
  const auto& amp = state.amplitudes();
  const std::size_t dim = b.dimension();

  if (op.target == LadderTarget::qubit) {
    for (std::size_t i = 0; i < dim; ++i) {
      const Complex a = amp[static_cast<Eigen::Index>(i)];
      if (a == Complex{}) continue;
      const int q = b.qubit_level(i);
      if (dir == LadderDirection::lower) {
        if (q == 1) res[static_cast<Eigen::Index>(i - 1)] += a;
      } else {
        if (q == 0) res[static_cast<Eigen::Index>(i + 1)] += a;
      }
    }
  } else {
    if (op.bin < 0 || op.bin >= b.n_bins())
      throw std::out_of_range("apply_ladder: bin index out of range");
    const int delta = (dir == LadderDirection::lower) ? -1 : +1;
    for (std::size_t i = 0; i < dim; ++i) {
      const Complex a = amp[static_cast<Eigen::Index>(i)];
      if (a == Complex{}) continue;
      const int n = b.bin_occupation(i, op.bin);
      const std::int64_t j = b.shifted_index(i, op.bin, delta);
      if (j < 0) continue;  // annihilated vacuum, or raising past a cap
      const double elem =
          (dir == LadderDirection::lower) ? std::sqrt(double(n)) : std::sqrt(double(n + 1));
      res[static_cast<Eigen::Index>(j)] += elem * a;
    }
  }
  out.refresh_norm();
  return out;
}

Complex expectation(const StateVector& state, const NormalOrderedMonomial& op,
                    bool assume_normalized) {
  auto apply_list = [&](const std::vector<LadderOp>& list) {
    StateVector cur = state;
    for (auto it = list.rbegin(); it != list.rend(); ++it) {
      if (it->target == LadderTarget::bin && (it->bin < 0 || it->bin >= state.basis().n_bins()))
        throw std::invalid_argument("expectation: malformed descriptor (bin index)");
      cur = apply_ladder(cur, *it, LadderDirection::lower);
    }
    return cur;
  };
  const StateVector ket = apply_list(op.lowering);
  const StateVector bra = apply_list(op.daggered);
  Complex val = bra.inner(ket);
  if (!assume_normalized) {
    const double n2 = state.norm_squared();
    if (n2 <= 0.0) throw std::runtime_error("expectation: zero-norm state");
    val /= n2;
  }
  return val;
}

}  // namespace loopqed
