#include "support/dense_reference.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace loopqed::testing {

namespace {

using Complex = std::complex<double>;

Eigen::MatrixXcd dense_operator(const std::shared_ptr<const FockBasis>& basis, LadderOp op,
                                LadderDirection dir) {
  const std::size_t dim = basis->dimension();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    StateVector e(basis);
    e.set_amplitude(j, Complex(1.0, 0.0));
    const StateVector col = apply_ladder(e, op, dir);
    M.col(static_cast<Eigen::Index>(j)) = col.amplitudes();
  }
  return M;
}

}  // namespace

DenseReference::DenseReference(LoopConfig cfg, QubitParams qubit, DriveParams drive,
                               int max_total, int per_bin_cap)
    : cfg_(cfg), qubit_(qubit), drive_(drive) {
  cfg_.validate();
  qubit_.validate();
  drive_.validate(cfg_, qubit_);
  derived_ = derive_drive(cfg_, qubit_, drive_);
  slots_ = cfg_.n_bins + 1;
  basis_ = build_basis(slots_, max_total, per_bin_cap);
  const std::size_t dim = basis_->dimension();
  const double dt = cfg_.dt();
  const double g = qubit_.Gamma > 0.0 ? std::sqrt(qubit_.Gamma / (2.0 * dt)) : 0.0;

  const Eigen::MatrixXcd sm = dense_operator(basis_, qubit_op(), LadderDirection::lower);
  const Eigen::MatrixXcd sp = sm.adjoint();
  const Eigen::MatrixXcd b0 = dense_operator(basis_, bin_op(0), LadderDirection::lower);
  const Eigen::MatrixXcd b1 = dense_operator(basis_, bin_op(1), LadderDirection::lower);
  nq_ = sp * sm;
  b_exit_ = b1;

  Eigen::MatrixXcd H = derived_.delta * nq_;
  if (drive_.mode == DriveMode::nonlinear) {
    H += (derived_.Omega_eff * sp + std::conj(derived_.Omega_eff) * sm) / 2.0;
  }
  const Complex I(0.0, 1.0);
  const Eigen::MatrixXcd coupling =
      I * g * (sp * (b0 + std::polar(1.0, derived_.phi_p) * b1));
  H += coupling + coupling.adjoint();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::polar(1.0, -es.eigenvalues()(k) * dt);
  u_ = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();

  proj0_ = Eigen::MatrixXcd::Zero(dim, dim);
  proj1_ = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (basis_->bin_occupation(i, LoopEngine::exit_slot) == 0)
      proj0_(i, i) = 1.0;
    else
      proj1_(i, i) = 1.0;
  }

  std::array<double, 2> fresh{1.0, 0.0};
  if (drive_.mode == DriveMode::linear && drive_.Omega_L > 0.0)
    fresh = fresh_input_bin(drive_.Omega_L, dt);
  reset0_ = Eigen::MatrixXcd::Zero(dim, dim);
  reset1_ = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const int n = basis_->bin_occupation(i, LoopEngine::exit_slot);
    if (n == 0) {
      const std::int64_t up = basis_->shifted_index(i, LoopEngine::exit_slot, +1);
      if (fresh[1] == 0.0) {
        reset0_(i, i) = 1.0;
      } else if (up >= 0) {
        reset0_(i, i) = fresh[0];
        reset0_(up, i) = fresh[1];
      } else {
        reset0_(i, i) = 1.0;  // cap-saturated: prepare vacuum, stay an isometry
      }
    } else if (n == 1) {
      const std::int64_t down = basis_->shifted_index(i, LoopEngine::exit_slot, -1);
      reset1_(down, i) = fresh[0];
      if (fresh[1] != 0.0) reset1_(i, i) = fresh[1];
      if (fresh[1] == 0.0) reset1_(i, i) = 0.0;
    }
  }

  rotate_ = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(slots_));
  std::vector<std::uint8_t> rot(static_cast<std::size_t>(slots_));
  for (std::size_t i = 0; i < dim; ++i) {
    basis_->occupation(i, occ);
    for (int k = 0; k + 1 < slots_; ++k) rot[static_cast<std::size_t>(k)] = occ[static_cast<std::size_t>(k) + 1];
    rot[static_cast<std::size_t>(slots_ - 1)] = occ[0];
    rotate_(static_cast<Eigen::Index>(basis_->index_of(basis_->qubit_level(i), rot)),
            static_cast<Eigen::Index>(i)) = 1.0;
  }

  sz_ = Eigen::MatrixXcd::Identity(dim, dim) - 2.0 * nq_;
  p_flip_ = (1.0 - std::exp(-qubit_.gamma_phi * dt)) / 2.0;
  const double eL = std::exp(-qubit_.gamma_L * dt);
  loss0_ = Eigen::MatrixXcd::Identity(dim, dim) + (std::sqrt(eL) - 1.0) * nq_;
  loss1_ = std::sqrt(1.0 - eL) * sm;

  rho_ = Eigen::MatrixXcd::Zero(dim, dim);
  set_initial(0);
}

void DenseReference::set_initial(int qubit_level) {
  std::array<double, 2> fresh{1.0, 0.0};
  if (drive_.mode == DriveMode::linear && drive_.Omega_L > 0.0)
    fresh = fresh_input_bin(drive_.Omega_L, cfg_.dt());
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis_->dimension()));
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(slots_), 0);
  psi(static_cast<Eigen::Index>(basis_->index_of(qubit_level, occ))) = fresh[0];
  if (fresh[1] != 0.0) {
    occ[LoopEngine::input_slot] = 1;
    psi(static_cast<Eigen::Index>(basis_->index_of(qubit_level, occ))) = fresh[1];
  }
  rho_ = psi * psi.adjoint();
}

void DenseReference::set_density(const Eigen::MatrixXcd& rho) { rho_ = rho; }

void DenseReference::apply_unitary() { rho_ = u_ * rho_ * u_.adjoint(); }

void DenseReference::apply_tail() {
  rho_ = proj0_ * rho_ * proj0_ + proj1_ * rho_ * proj1_;
  rho_ = reset0_ * rho_ * reset0_.adjoint() + reset1_ * rho_ * reset1_.adjoint();
  rho_ = rotate_ * rho_ * rotate_.adjoint();
  if (p_flip_ > 0.0) rho_ = (1.0 - p_flip_) * rho_ + p_flip_ * sz_ * rho_ * sz_;
  if (qubit_.gamma_L > 0.0) rho_ = loss0_ * rho_ * loss0_.adjoint() + loss1_ * rho_ * loss1_.adjoint();
}

double DenseReference::qubit_population() const { return (nq_ * rho_).trace().real(); }

Complex DenseReference::exit_amplitude() const {
  return std::polar(1.0, derived_.phi_p) * (b_exit_ * rho_).trace();
}

double DenseReference::exit_population() const {
  return (b_exit_.adjoint() * b_exit_ * rho_).trace().real();
}

double DenseReference::trace() const { return rho_.trace().real(); }

TransferMatrixOracle::TransferMatrixOracle(LoopConfig cfg, QubitParams qubit, double delta) {
  slots_ = cfg.n_bins + 1;
  dt_ = cfg.dt();
  phi_p_ = wrap_pi(cfg.phi - delta * cfg.tau);
  mean_decay_ = std::exp(-(qubit.gamma_phi + qubit.gamma_L / 2.0) * dt_);
  const double g = qubit.Gamma > 0.0 ? std::sqrt(qubit.Gamma / (2.0 * dt_)) : 0.0;
  // active 3x3 block on (s, a_in, a_ret), exact exponential
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  const Complex I(0.0, 1.0);
  h(0, 0) = delta;
  h(0, 1) = I * g;
  h(0, 2) = I * g * std::polar(1.0, phi_p_);
  h(1, 0) = std::conj(h(0, 1));
  h(2, 0) = std::conj(h(0, 2));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h);
  Eigen::Vector3cd ph;
  for (int k = 0; k < 3; ++k) ph(k) = std::polar(1.0, -es.eigenvalues()(k) * dt_);
  const Eigen::Matrix3cd u3 = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();

  const int n = 1 + slots_;
  u1_ = Eigen::MatrixXcd::Identity(n, n);
  u1_(0, 0) = u3(0, 0);
  u1_(0, 1) = u3(0, 1);
  u1_(0, 2) = u3(0, 2);
  u1_(1, 0) = u3(1, 0);
  u1_(1, 1) = u3(1, 1);
  u1_(1, 2) = u3(1, 2);
  u1_(2, 0) = u3(2, 0);
  u1_(2, 1) = u3(2, 1);
  u1_(2, 2) = u3(2, 2);
}

Complex TransferMatrixOracle::decoupled_exit_amplitude() const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1 + slots_);
  v(1) = 1.0;  // entering bin
  Complex exit{0.0, 0.0};
  // the bin placed at entry is the returning bin of step N = slots_-1
  for (int t = 0; t < slots_; ++t) {
    v = u1_ * v;
    v(0) *= mean_decay_;
    exit = v(2);
    v(2) = 0.0;  // measured bin leaves; no refill
    // rotate: a_k <- a_{k+1}
    const Complex head = v(1);
    for (int k = 1; k < slots_; ++k) v(k) = v(k + 1);
    v(slots_) = head;
  }
  return std::polar(1.0, phi_p_) * exit;
}

Complex TransferMatrixOracle::steady_reflection(long settle_steps) const {
  if (settle_steps <= 0) settle_steps = 220L * slots_;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1 + slots_);
  v(1) = 1.0;
  Complex exit{0.0, 0.0};
  for (long t = 0; t < settle_steps; ++t) {
    v = u1_ * v;
    v(0) *= mean_decay_;
    exit = v(2);
    v(2) = 1.0;  // fresh unit input amplitude
    const Complex head = v(1);
    for (int k = 1; k < slots_; ++k) v(k) = v(k + 1);
    v(slots_) = head;
  }
  return exit;  // already relative to the unit input; exit phase cancels in r
}

}  // namespace loopqed::testing
