#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace loopqed {

using Complex = std::complex<double>;

/// Thrown when a requested basis would exceed the configured memory budget.
class SizingError : public std::runtime_error {
public:
  SizingError(const std::string& msg, std::size_t requested, std::size_t budget)
      : std::runtime_error(msg), requested_bytes(requested), budget_bytes(budget) {}
  std::size_t requested_bytes;
  std::size_t budget_bytes;
};

// Excitation-truncated Fock space of one qubit plus a ring of photon bins.
//
// Ordering is deterministic: occupations sorted by total photon number, then
// ascending lexicographic on (n_0, n_1, ...); the qubit level varies fastest,
// so index = 2*occupation_ordinal + qubit_level.
class FockBasis {
public:
  static constexpr std::size_t kDefaultMemoryBudget = std::size_t(3) << 30;  // 3 GiB
  static constexpr int kMaxTotalSupported = 4;

  FockBasis(int n_bins, int max_total, int per_bin_cap = 1,
            std::size_t memory_budget_bytes = kDefaultMemoryBudget);

  int n_bins() const { return n_bins_; }
  int max_total() const { return max_total_; }
  int per_bin_cap() const { return cap_; }
  std::size_t dimension() const { return 2 * occ_keys_.size(); }
  std::size_t occupation_count() const { return occ_keys_.size(); }
  /// number of occupations with exactly j photons
  std::size_t occupation_count(int j) const;

  int qubit_level(std::size_t index) const { return static_cast<int>(index & 1u); }
  int total_photons(std::size_t index) const;
  int bin_occupation(std::size_t index, int bin) const;
  void occupation(std::size_t index, std::span<std::uint8_t> out) const;
  std::vector<std::uint8_t> occupation(std::size_t index) const;

  /// throws std::out_of_range if the occupation is not in the basis
  std::size_t index_of(int qubit, std::span<const std::uint8_t> occ) const;
  /// -1 if the occupation violates the caps
  std::int64_t try_index_of(int qubit, std::span<const std::uint8_t> occ) const;

  /// index with bin occupancy changed by +1/-1 relative to state `index`;
  /// -1 if the move leaves the basis
  std::int64_t shifted_index(std::size_t index, int bin, int delta) const;

private:
  friend class LoopEngine;
  static std::uint64_t pack(std::span<const std::uint8_t> occ);
  int n_bins_ = 0;
  int max_total_ = 0;
  int cap_ = 0;
  std::vector<std::uint64_t> occ_keys_;                       // ordinal -> packed key
  std::vector<std::size_t> count_by_total_;                   // per photon number
  std::unordered_map<std::uint64_t, std::uint32_t> rank_;     // packed key -> ordinal
};

std::shared_ptr<const FockBasis> build_basis(
    int n_bins, int max_total, int per_bin_cap = 1,
    std::size_t memory_budget_bytes = FockBasis::kDefaultMemoryBudget);

// Complex amplitudes over a FockBasis with a cached squared norm.
class StateVector {
public:
  explicit StateVector(std::shared_ptr<const FockBasis> basis);
  static StateVector vacuum(std::shared_ptr<const FockBasis> basis, int qubit_level = 0);

  const FockBasis& basis() const { return *basis_; }
  const std::shared_ptr<const FockBasis>& basis_ptr() const { return basis_; }

  std::size_t dimension() const { return static_cast<std::size_t>(amp_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  /// mutable access; call refresh_norm() after direct writes
  Eigen::VectorXcd& mutable_amplitudes() { return amp_; }

  Complex amplitude(std::size_t i) const { return amp_[static_cast<Eigen::Index>(i)]; }
  void set_amplitude(std::size_t i, Complex v);

  double norm_squared() const { return norm2_; }
  double recompute_norm_squared() const { return amp_.squaredNorm(); }
  bool norm_cache_consistent(double tol = 1e-12) const;
  void refresh_norm() { norm2_ = amp_.squaredNorm(); }
  void normalize();

  Complex inner(const StateVector& other) const;  // <this|other>

private:
  std::shared_ptr<const FockBasis> basis_;
  Eigen::VectorXcd amp_;
  double norm2_ = 0.0;
};

enum class LadderTarget { qubit, bin };
enum class LadderDirection { lower, raise };

struct LadderOp {
  LadderTarget target = LadderTarget::qubit;
  int bin = -1;
};

inline LadderOp qubit_op() { return {LadderTarget::qubit, -1}; }
inline LadderOp bin_op(int k) { return {LadderTarget::bin, k}; }

// Linear map with bosonic sqrt(n) matrix elements on bins and a {0,1} ladder
// on the qubit. Raising past a cap maps those components to zero.
StateVector apply_ladder(const StateVector& state, LadderOp op, LadderDirection dir);

// O = (product of daggered ops)^dagger-side  x  (product of lowering ops).
// Both lists name lowering operators; the daggered list is conjugated into the bra.
struct NormalOrderedMonomial {
  std::vector<LadderOp> daggered;
  std::vector<LadderOp> lowering;
};

Complex expectation(const StateVector& state, const NormalOrderedMonomial& op,
                    bool assume_normalized = true);

namespace monomials {
inline NormalOrderedMonomial qubit_population() { return {{qubit_op()}, {qubit_op()}}; }
inline NormalOrderedMonomial sigma_minus() { return {{}, {qubit_op()}}; }
inline NormalOrderedMonomial bin_number(int k) { return {{bin_op(k)}, {bin_op(k)}}; }
inline NormalOrderedMonomial bin_amplitude(int k) { return {{}, {bin_op(k)}}; }
}  // namespace monomials

}  // namespace loopqed
