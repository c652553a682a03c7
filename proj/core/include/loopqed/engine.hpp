#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "loopqed/fock_basis.hpp"
#include "loopqed/params.hpp"
#include "loopqed/rng.hpp"

namespace loopqed {

enum class JumpChannel { output_photon, dephasing, loss };

struct JumpEvent {
  double time = 0.0;
  JumpChannel channel = JumpChannel::output_photon;
  int count = 0;  // photon number for output events, 1 otherwise
};

namespace observable_keys {
inline constexpr std::string_view qubit_population = "qubit_population";
inline constexpr std::string_view qubit_coherence = "qubit_coherence";
inline constexpr std::string_view exit_amplitude = "exit_amplitude";  // <B0>
inline constexpr std::string_view exit_flux = "exit_flux";            // <B0+ B0>
}  // namespace observable_keys

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  double dt = 0.0;
  long n_steps = 0;
  std::vector<std::string> keys;
  std::vector<Eigen::VectorXcd> series;  // per key, length n_steps
  std::vector<JumpEvent> jumps;
  double truncation_weight = 0.0;  // drive weight dropped at cap-saturated resets
  double final_qubit_population = 0.0;

  const Eigen::VectorXcd& series_for(std::string_view key) const;
  bool jump_times_strictly_increasing() const;
};

class NonConvergenceError : public std::runtime_error {
public:
  NonConvergenceError(const std::string& msg, double mean1, double mean2)
      : std::runtime_error(msg), last_window_mean1(mean1), last_window_mean2(mean2) {}
  double last_window_mean1;
  double last_window_mean2;
};

// First index from which the series is steady: scans pairs of consecutive
// windows [i-2w, i-w), [i-w, i); on the first pair whose means agree within
// tol (relative to the larger magnitude), returns i-w. A constant series
// returns `window`. Throws NonConvergenceError otherwise.
long detect_steady_state(std::span<const double> series, long window, double tol);
long detect_steady_state(std::span<const Complex> series, long window, double tol);

// Conveyor-belt evolution of qubit (x) loop bins with simultaneous coupling to
// the entering and returning bins, plus trajectory unraveling of output
// detection, pure dephasing and loss.
//
// The engine works in a co-rotating slot labelling: the entering bin is always
// slot 0 and the returning bin slot 1. One interval is
//   unitary -> (record) -> measure slot 1 -> reset slot 1 -> advance ring ->
//   ancillary jumps,
// after which the freshly prepared bin sits again at slot 0. A bin therefore
// interacts at entry, returns to the qubit N steps later and exits. The
// register holds N+1 slots so the two interactions are separated by exactly
// tau. The round-trip phase e^{i phi_p} sits on the returning-bin coupling;
// the exit-bin observable B0 carries the same phase, so a decoupled photon
// exits with amplitude e^{i phi_p} x its entry amplitude.
class LoopEngine {
public:
  static constexpr int input_slot = 0;
  static constexpr int exit_slot = 1;

  LoopEngine(LoopConfig cfg, QubitParams qubit, DriveParams drive, int max_total = 2,
             int per_bin_cap = 1,
             std::size_t memory_budget_bytes = FockBasis::kDefaultMemoryBudget);

  const LoopConfig& loop() const { return cfg_; }
  const QubitParams& qubit() const { return qubit_; }
  const DriveParams& drive_params() const { return drive_; }
  const DriveDerived& drive() const { return derived_; }
  const std::shared_ptr<const FockBasis>& basis() const { return basis_; }
  int n_slots() const { return slots_; }
  double dt() const { return cfg_.dt(); }

  /// ground qubit, loop vacuum, fresh input bin at slot 0
  StateVector initial_state(int qubit_level = 0) const;

  /// one interval of exp(-i H dt); afterwards slot `exit_slot` is the exit bin
  void apply_step_unitary(StateVector& state) const;

  double qubit_population(const StateVector& state) const;
  Complex qubit_coherence(const StateVector& state) const;  // <sigma->
  /// <B0> of the exit bin (round-trip exit phase applied)
  Complex exit_amplitude(const StateVector& state) const;
  double exit_population(const StateVector& state) const;  // <B0+ B0>
  /// chi <- chi + coef * B0 chi_src (exit-bin annihilation with exit phase)
  void accumulate_exit_annihilation(const StateVector& src, Complex coef,
                                    StateVector& dst) const;

  double exit_outcome_probability(const StateVector& state, int outcome) const;
  /// Born-rule projective number measurement of the exit bin; optionally
  /// reports the probability of the drawn outcome (for shared-record replays)
  int measure_exit_bin(StateVector& state, TrajectoryRng& rng,
                       double* outcome_probability = nullptr) const;
  /// shared-record variant: project on `outcome`, dividing by sqrt(p_shared)
  void project_exit_bin(StateVector& state, int outcome, double p_shared) const;

  /// recycle the measured exit bin as the next fresh input bin
  void reset_exit_bin(StateVector& state, double* truncation_weight = nullptr) const;
  /// rotate slot labels so the recycled bin becomes slot 0
  void advance_ring(StateVector& state) const;

  struct AncillaryOutcome {
    bool dephased = false;
    bool lost = false;
    double p_flip = 0.0;
    double p_loss = 0.0;
  };
  /// MC unraveling of dephasing (sigma_z flips at rate gamma') and loss
  /// (sigma- jumps at rate gamma_L); exact Kraus maps per interval
  AncillaryOutcome apply_ancillary_jumps(StateVector& state, TrajectoryRng& rng) const;
  /// replay a drawn outcome on a co-evolving state (shared-record weights)
  void apply_ancillary_shared(StateVector& state, const AncillaryOutcome& outcome) const;

  struct RunOptions {
    long n_steps = 0;
    int initial_qubit_level = 0;
    std::vector<std::string> observables;  // defaults to population + exit amplitude
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
  };
  TrajectoryRecord run_trajectory(const RunOptions& opts) const;

  /// fresh-bin amplitudes used at reset ((1,0) in nonlinear mode)
  const std::array<double, 2>& fresh_amplitudes() const { return fresh_; }

private:
  void build_active_unitaries();
  void build_tables();
  void check_state(const StateVector& state) const;

  LoopConfig cfg_;
  QubitParams qubit_;
  DriveParams drive_;
  DriveDerived derived_;
  int slots_ = 0;
  std::shared_ptr<const FockBasis> basis_;
  std::array<double, 2> fresh_{1.0, 0.0};
  Complex exit_phase_{1.0, 0.0};

  // dense unitaries on the active subsystem (qubit, slot0, slot1), one per
  // allowed active photon count m; row-major flattened
  struct ActiveGroup {
    int m = 0;
    int dim = 0;                       // active-pattern count = 2 * pairs(m)
    std::vector<Complex> u;            // dim x dim row-major
    std::size_t member_begin = 0;      // into members_
    std::size_t n_blocks = 0;
  };
  std::vector<ActiveGroup> groups_;
  std::vector<std::int32_t> members_;      // block members in pattern order
  std::vector<std::int32_t> rotate_perm_;  // psi_new[i] = psi_old[perm[i]]
  std::vector<std::uint8_t> exit_occ_;     // occupancy of slot 1 per state
  std::vector<std::int32_t> exit_down_;    // index with one fewer photon in slot 1
  std::vector<std::int32_t> exit_up_;      // index with one more (-1 if capped)
  double sqrt_eL_ = 1.0;                   // exp(-gamma_L dt / 2)
  double p_flip_ = 0.0;                    // (1 - exp(-gamma' dt)) / 2
  double p_loss_factor_ = 0.0;             // 1 - exp(-gamma_L dt)
  mutable std::vector<Complex> scratch_;
};

}  // namespace loopqed
