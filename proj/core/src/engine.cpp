#include "loopqed/engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace loopqed {

namespace {

thread_local std::vector<Complex> g_rotate_buf;

struct PatternTable {
  // (n0, n1) pairs with n0,n1 <= cap and n0+n1 <= m, in a fixed scan order
  std::vector<std::pair<int, int>> pairs;
  int pos(int n0, int n1) const {
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (pairs[p].first == n0 && pairs[p].second == n1) return static_cast<int>(p);
    return -1;
  }
};

PatternTable make_patterns(int cap, int m) {
  PatternTable t;
  for (int n1 = 0; n1 <= cap; ++n1)
    for (int n0 = 0; n0 <= cap; ++n0)
      if (n0 + n1 <= m) t.pairs.emplace_back(n0, n1);
  return t;
}

}  // namespace

const Eigen::VectorXcd& TrajectoryRecord::series_for(std::string_view key) const {
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == key) return series[i];
  throw std::invalid_argument("TrajectoryRecord: observable not recorded: " + std::string(key));
}

bool TrajectoryRecord::jump_times_strictly_increasing() const {
  for (std::size_t i = 1; i < jumps.size(); ++i)
    if (!(jumps[i].time > jumps[i - 1].time)) return false;
  return true;
}

namespace {

template <class Value>
long detect_steady_state_impl(std::span<const Value> series, long window, double tol) {
  const long n = static_cast<long>(series.size());
  if (window < 1) throw std::invalid_argument("detect_steady_state: window must be >= 1");
  if (n < 2 * window)
    throw std::invalid_argument("detect_steady_state: series shorter than two windows");
  std::vector<Value> prefix(static_cast<std::size_t>(n) + 1, Value{});
  for (long i = 0; i < n; ++i)
    prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] +
                                              series[static_cast<std::size_t>(i)];
  auto mean = [&](long lo, long hi) {
    return (prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)]) /
           static_cast<double>(hi - lo);
  };
  Value m1{}, m2{};
  for (long i = 2 * window; i <= n; ++i) {
    m1 = mean(i - 2 * window, i - window);
    m2 = mean(i - window, i);
    const double scale = std::max({std::abs(m1), std::abs(m2), 1e-300});
    if (std::abs(m2 - m1) <= tol * scale) return i - window;
  }
  throw NonConvergenceError("detect_steady_state: no convergence within series",
                            std::abs(m1), std::abs(m2));
}

}  // namespace

long detect_steady_state(std::span<const double> series, long window, double tol) {
  return detect_steady_state_impl(series, window, tol);
}

long detect_steady_state(std::span<const Complex> series, long window, double tol) {
  return detect_steady_state_impl(series, window, tol);
}

LoopEngine::LoopEngine(LoopConfig cfg, QubitParams qubit, DriveParams drive, int max_total,
                       int per_bin_cap, std::size_t memory_budget_bytes)
    : cfg_(cfg), qubit_(qubit), drive_(drive) {
  cfg_.validate();
  qubit_.validate();
  drive_.validate(cfg_, qubit_);
  derived_ = derive_drive(cfg_, qubit_, drive_);
  slots_ = cfg_.n_bins + 1;
  basis_ = build_basis(slots_, max_total, per_bin_cap, memory_budget_bytes);
  if (drive_.mode == DriveMode::linear && drive_.Omega_L > 0.0)
    fresh_ = fresh_input_bin(drive_.Omega_L, dt());
  else
    fresh_ = {1.0, 0.0};
  exit_phase_ = std::polar(1.0, derived_.phi_p);
  const double dtv = dt();
  p_flip_ = (1.0 - std::exp(-qubit_.gamma_phi * dtv)) / 2.0;
  p_loss_factor_ = 1.0 - std::exp(-qubit_.gamma_L * dtv);
  sqrt_eL_ = std::exp(-qubit_.gamma_L * dtv / 2.0);
  build_active_unitaries();
  build_tables();
}

void LoopEngine::build_active_unitaries() {
  const int cap = basis_->per_bin_cap();
  const int M = basis_->max_total();
  const int m_max = std::min(2 * cap, M);
  const double g = (qubit_.Gamma > 0.0) ? std::sqrt(qubit_.Gamma / (2.0 * dt())) : 0.0;
  const Complex I(0.0, 1.0);
  const Complex ret_phase = std::polar(1.0, derived_.phi_p);

  groups_.clear();
  for (int m = 0; m <= m_max; ++m) {
    const PatternTable pat = make_patterns(cap, m);
    const int dim = 2 * static_cast<int>(pat.pairs.size());
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t p = 0; p < pat.pairs.size(); ++p) {
      const auto [n0, n1] = pat.pairs[p];
      const int ig = 2 * static_cast<int>(p);      // qubit ground
      const int ie = ig + 1;                       // qubit excited
      H(ie, ie) += derived_.delta;
      if (drive_.mode == DriveMode::nonlinear) {
        H(ie, ig) += derived_.Omega_eff / 2.0;
        H(ig, ie) += std::conj(derived_.Omega_eff) / 2.0;
      }
      // i g sigma+ (b0 + e^{i phi_p} b1) - h.c., projected onto the caps
      if (n0 >= 1) {
        const int q = pat.pos(n0 - 1, n1);
        const Complex elem = I * g * std::sqrt(double(n0));
        H(2 * q + 1, ig) += elem;
        H(ig, 2 * q + 1) += std::conj(elem);
      }
      if (n1 >= 1) {
        const int q = pat.pos(n0, n1 - 1);
        const Complex elem = I * g * ret_phase * std::sqrt(double(n1));
        H(2 * q + 1, ig) += elem;
        H(ig, 2 * q + 1) += std::conj(elem);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("LoopEngine: active-space diagonalization failed");
    Eigen::VectorXcd phases(dim);
    for (int k = 0; k < dim; ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * dt());
    Eigen::MatrixXcd U =
        es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    ActiveGroup grp;
    grp.m = m;
    grp.dim = dim;
    grp.u.resize(static_cast<std::size_t>(dim) * dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) grp.u[static_cast<std::size_t>(r) * dim + c] = U(r, c);
    groups_.push_back(std::move(grp));
  }
}

void LoopEngine::build_tables() {
  const FockBasis& b = *basis_;
  const int cap = b.per_bin_cap();
  const int M = b.max_total();
  const int m_max = std::min(2 * cap, M);
  const std::size_t dim = b.dimension();
  const std::size_t n_occ = b.occupation_count();

  std::vector<PatternTable> pats;
  for (int m = 0; m <= m_max; ++m) pats.push_back(make_patterns(cap, m));

  // discover blocks keyed by the spectator occupation (slots >= 2)
  struct BlockRef {
    int m;
    std::size_t slot_base;  // into per-m slot arrays
  };
  std::unordered_map<std::uint64_t, BlockRef> block_of;
  std::vector<std::vector<std::int32_t>> slots_by_m(static_cast<std::size_t>(m_max) + 1);

  std::vector<std::uint8_t> occ(static_cast<std::size_t>(slots_));
  for (std::size_t o = 0; o < n_occ; ++o) {
    const std::size_t state0 = 2 * o;
    b.occupation(state0, occ);
    const int n0 = occ[0];
    const int n1 = occ[1];
    occ[0] = 0;
    occ[1] = 0;
    const std::uint64_t sk = FockBasis::pack(occ);
    int j_spec = 0;
    for (int k = 2; k < slots_; ++k) j_spec += occ[static_cast<std::size_t>(k)];
    const int m = std::min(2 * cap, M - j_spec);
    auto it = block_of.find(sk);
    if (it == block_of.end()) {
      auto& arr = slots_by_m[static_cast<std::size_t>(m)];
      const std::size_t base = arr.size();
      arr.resize(base + 2 * pats[static_cast<std::size_t>(m)].pairs.size(), -1);
      it = block_of.emplace(sk, BlockRef{m, base}).first;
    }
    const int p = pats[static_cast<std::size_t>(it->second.m)].pos(n0, n1);
    if (p < 0) throw std::logic_error("LoopEngine: active pattern outside table");
    auto& arr = slots_by_m[static_cast<std::size_t>(it->second.m)];
    arr[it->second.slot_base + 2 * static_cast<std::size_t>(p)] =
        static_cast<std::int32_t>(state0);
    arr[it->second.slot_base + 2 * static_cast<std::size_t>(p) + 1] =
        static_cast<std::int32_t>(state0 + 1);
  }

  members_.clear();
  members_.reserve(dim);
  for (int m = 0; m <= m_max; ++m) {
    auto& grp = groups_[static_cast<std::size_t>(m)];
    grp.member_begin = members_.size();
    const auto& arr = slots_by_m[static_cast<std::size_t>(m)];
    grp.n_blocks = arr.size() / static_cast<std::size_t>(grp.dim);
    for (std::int32_t idx : arr) {
      if (idx < 0) throw std::logic_error("LoopEngine: incomplete active block");
      members_.push_back(idx);
    }
  }

  // ring rotation: new occupation[k] = old occupation[k+1]
  rotate_perm_.resize(dim);
  std::vector<std::uint8_t> rotated(static_cast<std::size_t>(slots_));
  for (std::size_t o = 0; o < n_occ; ++o) {
    b.occupation(2 * o, occ);
    rotated[0] = occ[static_cast<std::size_t>(slots_ - 1)];
    for (int k = 1; k < slots_; ++k) rotated[static_cast<std::size_t>(k)] =
        occ[static_cast<std::size_t>(k - 1)];
    const std::size_t src0 = b.index_of(0, rotated);
    rotate_perm_[2 * o] = static_cast<std::int32_t>(src0);
    rotate_perm_[2 * o + 1] = static_cast<std::int32_t>(src0 + 1);
  }

  exit_occ_.resize(dim);
  exit_down_.resize(dim);
  exit_up_.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    exit_occ_[i] = static_cast<std::uint8_t>(b.bin_occupation(i, exit_slot));
    exit_down_[i] = static_cast<std::int32_t>(b.shifted_index(i, exit_slot, -1));
    exit_up_[i] = static_cast<std::int32_t>(b.shifted_index(i, exit_slot, +1));
  }
}

StateVector LoopEngine::initial_state(int qubit_level) const {
  StateVector s(basis_);
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(slots_), 0);
  const std::size_t vac = basis_->index_of(qubit_level, occ);
  s.set_amplitude(vac, Complex(fresh_[0], 0.0));
  if (fresh_[1] != 0.0) {
    occ[input_slot] = 1;
    s.set_amplitude(basis_->index_of(qubit_level, occ), Complex(fresh_[1], 0.0));
  }
  return s;
}

void LoopEngine::apply_step_unitary(StateVector& state) const {
  check_state(state);
  Complex* psi = state.mutable_amplitudes().data();
  Complex tmp[64];
  for (const auto& grp : groups_) {
    const int k = grp.dim;
    const Complex* U = grp.u.data();
    const std::int32_t* mem = members_.data() + grp.member_begin;
    for (std::size_t blk = 0; blk < grp.n_blocks; ++blk, mem += k) {
      for (int c = 0; c < k; ++c) tmp[c] = psi[mem[c]];
      const Complex* urow = U;
      for (int r = 0; r < k; ++r, urow += k) {
        Complex acc{0.0, 0.0};
        for (int c = 0; c < k; ++c) acc += urow[c] * tmp[c];
        psi[mem[r]] = acc;
      }
    }
  }
}

void LoopEngine::check_state(const StateVector& state) const {
  if (state.dimension() != basis_->dimension())
    throw std::invalid_argument("LoopEngine: state dimension does not match basis");
}

double LoopEngine::qubit_population(const StateVector& state) const {
  const Complex* psi = state.amplitudes().data();
  const std::size_t dim = state.dimension();
  double acc = 0.0;
  for (std::size_t i = 1; i < dim; i += 2) acc += std::norm(psi[i]);
  return acc;
}

Complex LoopEngine::qubit_coherence(const StateVector& state) const {
  const Complex* psi = state.amplitudes().data();
  const std::size_t dim = state.dimension();
  Complex acc{0.0, 0.0};
  for (std::size_t i = 1; i < dim; i += 2) acc += std::conj(psi[i - 1]) * psi[i];
  return acc;
}

Complex LoopEngine::exit_amplitude(const StateVector& state) const {
  const Complex* psi = state.amplitudes().data();
  const std::size_t dim = state.dimension();
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < dim; ++i) {
    const int n = exit_occ_[i];
    if (n == 0) continue;
    acc += std::conj(psi[exit_down_[i]]) * psi[i] * std::sqrt(double(n));
  }
  return exit_phase_ * acc;
}

double LoopEngine::exit_population(const StateVector& state) const {
  const Complex* psi = state.amplitudes().data();
  const std::size_t dim = state.dimension();
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    if (exit_occ_[i] > 0) acc += exit_occ_[i] * std::norm(psi[i]);
  return acc;
}

void LoopEngine::accumulate_exit_annihilation(const StateVector& src, Complex coef,
                                              StateVector& dst) const {
  check_state(src);
  check_state(dst);
  const Complex* in = src.amplitudes().data();
  Complex* out = dst.mutable_amplitudes().data();
  const Complex c = coef * exit_phase_;
  const std::size_t dim = src.dimension();
  for (std::size_t i = 0; i < dim; ++i) {
    const int n = exit_occ_[i];
    if (n == 0) continue;
    out[exit_down_[i]] += c * std::sqrt(double(n)) * in[i];
  }
  dst.refresh_norm();
}

double LoopEngine::exit_outcome_probability(const StateVector& state, int outcome) const {
  const Complex* psi = state.amplitudes().data();
  const std::size_t dim = state.dimension();
  double p = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    if (exit_occ_[i] == outcome) p += std::norm(psi[i]);
  return p;
}

int LoopEngine::measure_exit_bin(StateVector& state, TrajectoryRng& rng,
                                 double* outcome_probability) const {
  check_state(state);
  const int cap = basis_->per_bin_cap();
  double p[8] = {0.0};
  const Complex* psi = state.amplitudes().data();
  const std::size_t dim = state.dimension();
  for (std::size_t i = 0; i < dim; ++i) p[exit_occ_[i]] += std::norm(psi[i]);
  double total = 0.0;
  for (int k = 0; k <= cap; ++k) total += p[k];
  if (!(std::abs(total - 1.0) <= 1e-8))
    throw std::runtime_error(
        "measure_exit_bin: outcome probabilities do not sum to 1 (basis-cap overflow or "
        "non-finite amplitudes)");
  const double u = rng.uniform() * total;
  double cum = 0.0;
  int outcome = cap;
  for (int k = 0; k <= cap; ++k) {
    cum += p[k];
    if (u < cum) {
      outcome = k;
      break;
    }
  }
  if (outcome_probability) *outcome_probability = p[outcome];
  project_exit_bin(state, outcome, p[outcome]);
  state.refresh_norm();
  return outcome;
}

void LoopEngine::project_exit_bin(StateVector& state, int outcome, double p_shared) const {
  Complex* psi = state.mutable_amplitudes().data();
  const std::size_t dim = state.dimension();
  const double inv = 1.0 / std::sqrt(p_shared);
  for (std::size_t i = 0; i < dim; ++i) {
    if (exit_occ_[i] == outcome)
      psi[i] *= inv;
    else
      psi[i] = Complex{0.0, 0.0};
  }
  state.refresh_norm();
}

void LoopEngine::reset_exit_bin(StateVector& state, double* truncation_weight) const {
  Complex* psi = state.mutable_amplitudes().data();
  const std::size_t dim = state.dimension();
  const double a0 = fresh_[0];
  const double a1 = fresh_[1];
  double trunc = 0.0;
  // the exit slot is in a definite Fock state after measurement: each nonzero
  // amplitude is rebased to occupancy 0 then refilled with the fresh bin
  for (std::size_t i = 0; i < dim; ++i) {
    const int n = exit_occ_[i];
    Complex val = psi[i];
    if (val == Complex{}) continue;
    std::size_t base = i;
    if (n > 0) {
      psi[i] = Complex{0.0, 0.0};
      for (int c = 0; c < n; ++c) base = static_cast<std::size_t>(exit_down_[base]);
    }
    const std::int32_t up = exit_up_[base];
    if (a1 == 0.0) {
      psi[base] = val;
    } else if (up >= 0) {
      psi[base] = a0 * val;
      psi[up] += a1 * val;
    } else {
      // loop at photon cap: prepare vacuum instead, keeping the map an isometry
      psi[base] = val;
      trunc += a1 * a1 * std::norm(val);
    }
  }
  if (truncation_weight) *truncation_weight += trunc;
}

void LoopEngine::advance_ring(StateVector& state) const {
  const std::size_t dim = state.dimension();
  auto& buf = g_rotate_buf;
  buf.resize(dim);
  const Complex* psi = state.amplitudes().data();
  for (std::size_t i = 0; i < dim; ++i) buf[i] = psi[rotate_perm_[i]];
  std::copy(buf.begin(), buf.end(), state.mutable_amplitudes().data());
}

LoopEngine::AncillaryOutcome LoopEngine::apply_ancillary_jumps(StateVector& state,
                                                               TrajectoryRng& rng) const {
  AncillaryOutcome out;
  out.p_flip = p_flip_;
  Complex* psi = state.mutable_amplitudes().data();
  const std::size_t dim = state.dimension();
  if (p_flip_ > 0.0 && rng.uniform() < p_flip_) {
    out.dephased = true;
    for (std::size_t i = 1; i < dim; i += 2) psi[i] = -psi[i];
  }
  if (p_loss_factor_ > 0.0) {
    double nq = 0.0;
    for (std::size_t i = 1; i < dim; i += 2) nq += std::norm(psi[i]);
    out.p_loss = p_loss_factor_ * nq;
    if (out.p_loss > 0.0 && rng.uniform() < out.p_loss) {
      out.lost = true;
      const double f = std::sqrt(p_loss_factor_) / std::sqrt(out.p_loss);
      for (std::size_t i = 1; i < dim; i += 2) {
        psi[i - 1] = f * psi[i];
        psi[i] = Complex{0.0, 0.0};
      }
    } else {
      const double f = 1.0 / std::sqrt(1.0 - out.p_loss);
      for (std::size_t i = 1; i < dim; i += 2) psi[i] *= sqrt_eL_ * f;
      for (std::size_t i = 0; i < dim; i += 2) psi[i] *= f;
    }
    state.refresh_norm();
  }
  return out;
}

void LoopEngine::apply_ancillary_shared(StateVector& state,
                                        const AncillaryOutcome& outcome) const {
  Complex* psi = state.mutable_amplitudes().data();
  const std::size_t dim = state.dimension();
  if (outcome.dephased)
    for (std::size_t i = 1; i < dim; i += 2) psi[i] = -psi[i];
  if (p_loss_factor_ > 0.0) {
    if (outcome.lost) {
      const double f = std::sqrt(p_loss_factor_) / std::sqrt(outcome.p_loss);
      for (std::size_t i = 1; i < dim; i += 2) {
        psi[i - 1] = f * psi[i];
        psi[i] = Complex{0.0, 0.0};
      }
    } else {
      const double f = 1.0 / std::sqrt(1.0 - outcome.p_loss);
      for (std::size_t i = 1; i < dim; i += 2) psi[i] *= sqrt_eL_ * f;
      for (std::size_t i = 0; i < dim; i += 2) psi[i] *= f;
    }
    state.refresh_norm();
  }
}

TrajectoryRecord LoopEngine::run_trajectory(const RunOptions& opts) const {
  TrajectoryRecord rec;
  rec.seed = opts.seed;
  rec.config_hash = opts.config_hash;
  rec.dt = dt();
  rec.n_steps = opts.n_steps;
  rec.keys = opts.observables;
  if (rec.keys.empty())
    rec.keys = {std::string(observable_keys::qubit_population),
                std::string(observable_keys::exit_amplitude)};
  rec.series.assign(rec.keys.size(), Eigen::VectorXcd::Zero(opts.n_steps));

  TrajectoryRng rng(opts.seed);
  StateVector psi = initial_state(opts.initial_qubit_level);
  const double dtv = dt();

  for (long t = 0; t < opts.n_steps; ++t) {
    try {
      apply_step_unitary(psi);
      for (std::size_t k = 0; k < rec.keys.size(); ++k) {
        const std::string& key = rec.keys[k];
        Complex v;
        if (key == observable_keys::qubit_population)
          v = qubit_population(psi);
        else if (key == observable_keys::qubit_coherence)
          v = qubit_coherence(psi);
        else if (key == observable_keys::exit_amplitude)
          v = exit_amplitude(psi);
        else if (key == observable_keys::exit_flux)
          v = exit_population(psi);
        else
          throw std::invalid_argument("run_trajectory: unknown observable key: " + key);
        rec.series[k](t) = v;
      }
      const int outcome = measure_exit_bin(psi, rng);
      if (outcome > 0)
        rec.jumps.push_back({(t + 1.0) * dtv, JumpChannel::output_photon, outcome});
      reset_exit_bin(psi, &rec.truncation_weight);
      advance_ring(psi);
      const AncillaryOutcome anc = apply_ancillary_jumps(psi, rng);
      if (anc.dephased) rec.jumps.push_back({(t + 1.25) * dtv, JumpChannel::dephasing, 1});
      if (anc.lost) rec.jumps.push_back({(t + 1.5) * dtv, JumpChannel::loss, 1});
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("run_trajectory: step " + std::to_string(t) + ": " + e.what());
    }
  }
  rec.final_qubit_population = qubit_population(psi);
  return rec;
}

}  // namespace loopqed
