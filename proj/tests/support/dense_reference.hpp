#pragma once

#include <vector>

#include <Eigen/Dense>

#include "loopqed/engine.hpp"

namespace loopqed::testing {

// Dense density-matrix propagation of the same discretized model the engine
// unravels: exact step unitary, exit-bin measurement (pinching map), reset
// isometry with the same cap convention, ring rotation and exact
// dephasing/loss channels. All operators are built densely from the public
// ladder ops, independent of the engine's block-table evolution path.
class DenseReference {
public:
  DenseReference(LoopConfig cfg, QubitParams qubit, DriveParams drive, int max_total,
                 int per_bin_cap);

  void set_initial(int qubit_level);  // ground/excited qubit, fresh bin in slot 0
  void set_density(const Eigen::MatrixXcd& rho);

  void apply_unitary();
  void apply_tail();  // measure + reset + rotate + ancillary channels
  void step() {
    apply_unitary();
    apply_tail();
  }

  double qubit_population() const;
  std::complex<double> exit_amplitude() const;  // includes the exit phase
  double exit_population() const;
  double trace() const;

  const Eigen::MatrixXcd& density() const { return rho_; }
  const std::shared_ptr<const FockBasis>& basis() const { return basis_; }

private:
  LoopConfig cfg_;
  QubitParams qubit_;
  DriveParams drive_;
  DriveDerived derived_;
  std::shared_ptr<const FockBasis> basis_;
  int slots_ = 0;
  Eigen::MatrixXcd rho_;
  Eigen::MatrixXcd u_;
  Eigen::MatrixXcd proj0_, proj1_;        // slot-1 occupancy pinching (cap 1)
  Eigen::MatrixXcd reset0_, reset1_;      // reset Kraus from occupancy 0 / 1
  Eigen::MatrixXcd rotate_;
  Eigen::MatrixXcd sz_;
  Eigen::MatrixXcd loss0_, loss1_;
  Eigen::MatrixXcd b_exit_, nq_;
  double p_flip_ = 0.0;
};

// Single-excitation transfer-matrix oracle: exact linear-response dynamics of
// the discrete conveyor on the amplitude vector (s, a_0 ... a_{S-1}). Used for
// decoupled transport phases and weak-drive reflection cross-checks.
class TransferMatrixOracle {
public:
  TransferMatrixOracle(LoopConfig cfg, QubitParams qubit, double delta);

  /// exit amplitude observed N steps after placing a unit amplitude in the
  /// entering bin, everything else empty (includes the exit phase)
  std::complex<double> decoupled_exit_amplitude() const;

  /// steady-state reflection coefficient for a constant unit input amplitude
  std::complex<double> steady_reflection(long settle_steps = 0) const;

private:
  int slots_ = 0;
  double dt_ = 0.0;
  double phi_p_ = 0.0;
  double mean_decay_ = 1.0;  // dipole damping from dephasing/loss channels
  Eigen::MatrixXcd u1_;      // (1 + S) single-excitation step matrix
};

}  // namespace loopqed::testing
