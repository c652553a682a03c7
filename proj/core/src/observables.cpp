#include "loopqed/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loopqed/analytic.hpp"
#include "loopqed/scheduling.hpp"
#include "loopqed/transform.hpp"

namespace loopqed {

int default_n_bins(double tau, const QubitParams& qubit, const DriveParams& drive) {
  double dt_max = tau / 20.0;
  if (qubit.Gamma > 0.0) dt_max = std::min(dt_max, 0.02 / qubit.Gamma);
  if (drive.mode == DriveMode::nonlinear && drive.Omega_NL > 0.0)
    dt_max = std::min(dt_max, 0.02 / (2.0 * drive.Omega_NL));  // |Omega_eff| <= 2 Omega_NL
  return std::max(20, static_cast<int>(std::ceil(tau / dt_max)));
}

double estimate_gamma_tilde(const LoopConfig& cfg, const QubitParams& qubit) {
  return markovian_rates(qubit.Gamma, cfg.phi);
}

EnsembleStats ensemble_average(std::span<const TrajectoryRecord> records, std::string_view key) {
  if (records.empty()) throw std::invalid_argument("ensemble_average: no records");
  const std::uint64_t hash = records[0].config_hash;
  const Eigen::Index len = records[0].series_for(key).size();
  for (const auto& rec : records) {
    if (rec.config_hash != hash)
      throw std::invalid_argument("ensemble_average: config hash mismatch between records");
    if (rec.series_for(key).size() != len)
      throw std::invalid_argument("ensemble_average: series length mismatch");
  }
  EnsembleStats out;
  out.n = static_cast<int>(records.size());
  out.mean = Eigen::VectorXcd::Zero(len);
  for (const auto& rec : records) out.mean += rec.series_for(key);
  out.mean /= static_cast<double>(out.n);
  out.se_re = Eigen::VectorXd::Zero(len);
  out.se_im = Eigen::VectorXd::Zero(len);
  if (out.n < 2) {
    out.se_defined = false;
    out.se_re.setConstant(std::numeric_limits<double>::quiet_NaN());
    out.se_im.setConstant(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  for (const auto& rec : records) {
    const Eigen::VectorXcd d = rec.series_for(key) - out.mean;
    out.se_re += d.real().cwiseAbs2();
    out.se_im += d.imag().cwiseAbs2();
  }
  const double f = 1.0 / (static_cast<double>(out.n) * (out.n - 1.0));
  out.se_re = (out.se_re * f).cwiseSqrt();
  out.se_im = (out.se_im * f).cwiseSqrt();
  return out;
}

namespace {

struct SettlePlan {
  long settle_steps;
  long window;
  double rate;
};

SettlePlan plan_settle(const LoopConfig& cfg, const QubitParams& qubit, long requested_settle,
                       long requested_window) {
  const double gt = estimate_gamma_tilde(cfg, qubit);
  const double rate =
      std::max(gt / 2.0 + qubit.gamma_phi + qubit.gamma_L / 2.0, 0.05 / cfg.tau);
  const double dt = cfg.dt();
  SettlePlan plan{};
  plan.rate = rate;
  plan.settle_steps = requested_settle > 0
                          ? requested_settle
                          : static_cast<long>(std::ceil((8.0 / rate + 3.0 * cfg.tau) / dt));
  plan.window = requested_window > 0
                    ? requested_window
                    : std::max<long>(cfg.n_bins,
                                     static_cast<long>(std::ceil(2.0 / (rate * dt))));
  return plan;
}

}  // namespace

ReflectionResult reflection_coefficient(const LoopConfig& cfg, const QubitParams& qubit,
                                        const DriveParams& drive, const ReflectionOptions& opts,
                                        int max_total, int per_bin_cap) {
  if (drive.mode != DriveMode::linear)
    throw std::invalid_argument("reflection_coefficient: linear drive mode required");
  if (!(drive.Omega_L > 0.0))
    throw std::invalid_argument("reflection_coefficient: Omega_L must be > 0");
  const LoopEngine engine(cfg, qubit, drive, max_total, per_bin_cap);
  const double dt = engine.dt();
  const SettlePlan plan = plan_settle(cfg, qubit, 0, opts.window);
  const long n_steps =
      opts.max_steps > 0 ? opts.max_steps : plan.settle_steps + 4 * plan.window;
  if (n_steps < 2 * plan.window)
    throw std::invalid_argument("reflection_coefficient: too few steps for steady detection");

  LoopEngine::RunOptions run;
  run.n_steps = n_steps;
  run.observables = {std::string(observable_keys::exit_amplitude),
                     std::string(observable_keys::exit_flux)};
  auto records = schedule_trajectories<TrajectoryRecord>(
      opts.n_trajectories, opts.seed, opts.threads, [&](long, std::uint64_t seed) {
        LoopEngine::RunOptions r = run;
        r.seed = seed;
        return engine.run_trajectory(r);
      });

  const EnsembleStats amp = ensemble_average(records, observable_keys::exit_amplitude);
  const std::vector<Complex> amp_series(amp.mean.data(), amp.mean.data() + amp.mean.size());
  const long idx = detect_steady_state(std::span<const Complex>(amp_series), plan.window,
                                       opts.tol);

  const double x = drive.Omega_L * dt;
  const double alpha_in = std::sqrt(x * (1.0 - x));
  const Complex unphase = std::polar(1.0, -engine.drive().phi_p);

  ReflectionResult out;
  out.steady_index = idx;
  std::vector<Complex> per_traj(records.size());
  double flux_acc = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& amps = records[i].series_for(observable_keys::exit_amplitude);
    const auto& flux = records[i].series_for(observable_keys::exit_flux);
    Complex z{0.0, 0.0};
    double f = 0.0;
    for (long t = idx; t < n_steps; ++t) {
      z += amps(t);
      f += flux(t).real();
    }
    const double cnt = static_cast<double>(n_steps - idx);
    per_traj[i] = unphase * (z / cnt) / alpha_in;
    flux_acc += f / cnt;
  }
  Complex mean{0.0, 0.0};
  for (const Complex& z : per_traj) mean += z;
  mean /= static_cast<double>(per_traj.size());
  out.r = mean;
  const double mean_flux = flux_acc / static_cast<double>(records.size());
  out.incoherent_flux = (mean_flux - std::norm(mean * alpha_in)) / dt;
  if (per_traj.size() >= 2) {
    double vre = 0.0, vim = 0.0;
    for (const Complex& z : per_traj) {
      vre += (z.real() - mean.real()) * (z.real() - mean.real());
      vim += (z.imag() - mean.imag()) * (z.imag() - mean.imag());
    }
    const double f = 1.0 / (per_traj.size() * (per_traj.size() - 1.0));
    out.se_re = std::sqrt(vre * f);
    out.se_im = std::sqrt(vim * f);
  } else {
    out.se_defined = false;
    out.se_re = out.se_im = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

struct G1TrajectoryResult {
  Eigen::VectorXcd c;       // anchor-averaged raw correlation, bin units
  Complex amp_sum{0.0, 0.0};
  double pop_sum = 0.0;
  long amp_count = 0;
  bool zero_flagged = false;
  std::vector<Complex> settle_pop;  // decimated, for the ensemble steadiness check
};

}  // namespace

CorrelationSeries g1_correlation(const LoopConfig& cfg, const QubitParams& qubit,
                                 const DriveParams& drive, const G1Options& opts, int max_total,
                                 int per_bin_cap) {
  const LoopEngine engine(cfg, qubit, drive, max_total, per_bin_cap);
  const double dt = engine.dt();
  const double gt_est = std::max(estimate_gamma_tilde(cfg, qubit), 1e-2 / cfg.tau);
  const long lag_steps =
      opts.lag_steps > 0
          ? opts.lag_steps
          : static_cast<long>(std::ceil((10.0 / gt_est + 2.0 * cfg.tau) / dt));
  const SettlePlan plan = plan_settle(cfg, qubit, opts.settle_steps, opts.steady_window);
  const long gap = std::max<long>(1, static_cast<long>(std::ceil(1.0 / (gt_est * dt))));
  const int anchors = std::max(1, opts.anchors_per_trajectory);
  const long decim = std::max<long>(1, plan.settle_steps / 512);

  const std::array<Complex, 4> signs{Complex{1, 0}, Complex{-1, 0}, Complex{0, 1},
                                     Complex{0, -1}};
  const std::array<Complex, 4> coefs{Complex{0.25, 0}, Complex{-0.25, 0}, Complex{0, -0.25},
                                     Complex{0, 0.25}};

  auto run_one = [&](long, std::uint64_t seed) {
    TrajectoryRng rng(seed);
    StateVector psi = engine.initial_state();
    G1TrajectoryResult res;
    res.c = Eigen::VectorXcd::Zero(lag_steps + 1);

    auto stochastic_tail = [&](std::vector<StateVector>* aux) {
      double p_shared = 0.0;
      const int outcome = engine.measure_exit_bin(psi, rng, &p_shared);
      engine.reset_exit_bin(psi);
      engine.advance_ring(psi);
      LoopEngine::AncillaryOutcome anc = engine.apply_ancillary_jumps(psi, rng);
      if (aux) {
        for (StateVector& chi : *aux) {
          engine.project_exit_bin(chi, outcome, p_shared);
          engine.reset_exit_bin(chi);
          engine.advance_ring(chi);
          engine.apply_ancillary_shared(chi, anc);
        }
      }
    };

    for (long t = 0; t < plan.settle_steps; ++t) {
      engine.apply_step_unitary(psi);
      if (t % decim == 0) res.settle_pop.push_back(engine.qubit_population(psi));
      stochastic_tail(nullptr);
    }

    for (int a = 0; a < anchors; ++a) {
      engine.apply_step_unitary(psi);
      res.amp_sum += engine.exit_amplitude(psi);
      res.pop_sum += engine.exit_population(psi);
      ++res.amp_count;
      if (a == 0) {
        const double weight =
            engine.exit_population(psi) + std::norm(engine.exit_amplitude(psi));
        if (weight < 1e-30) {
          res.zero_flagged = true;
          return res;
        }
      }
      std::vector<StateVector> aux;
      aux.reserve(4);
      for (int s = 0; s < 4; ++s) {
        StateVector chi = psi;
        engine.accumulate_exit_annihilation(psi, signs[s], chi);
        aux.push_back(std::move(chi));
      }
      auto accumulate = [&](long lag) {
        Complex c{0.0, 0.0};
        for (int s = 0; s < 4; ++s)
          c += coefs[s] * std::conj(engine.exit_amplitude(aux[static_cast<std::size_t>(s)]));
        res.c(lag) += c;
      };
      accumulate(0);
      stochastic_tail(&aux);
      for (long l = 1; l <= lag_steps; ++l) {
        engine.apply_step_unitary(psi);
        for (StateVector& chi : aux) engine.apply_step_unitary(chi);
        res.amp_sum += engine.exit_amplitude(psi);
        res.pop_sum += engine.exit_population(psi);
        ++res.amp_count;
        accumulate(l);
        stochastic_tail(&aux);
      }
      aux.clear();
      if (a + 1 < anchors) {
        for (long gstep = 0; gstep < gap; ++gstep) {
          engine.apply_step_unitary(psi);
          stochastic_tail(nullptr);
        }
      }
    }
    res.c /= static_cast<double>(anchors);
    return res;
  };

  auto results = schedule_trajectories<G1TrajectoryResult>(opts.n_trajectories, opts.seed,
                                                           opts.threads, run_one);

  CorrelationSeries out;
  out.dt = dt;
  out.n_trajectories = static_cast<int>(results.size());
  out.n_anchors = anchors * out.n_trajectories;
  out.value = Eigen::VectorXcd::Zero(lag_steps + 1);
  out.se_re = Eigen::VectorXd::Zero(lag_steps + 1);
  out.se_im = Eigen::VectorXd::Zero(lag_steps + 1);

  const bool all_zero =
      std::all_of(results.begin(), results.end(), [](const auto& r) { return r.zero_flagged; });
  if (all_zero) {
    out.zero_flagged = true;
    return out;
  }

  // ensemble steadiness check on the settle phase
  {
    std::size_t len = results[0].settle_pop.size();
    for (const auto& r : results) len = std::min(len, r.settle_pop.size());
    if (len >= 8) {
      std::vector<Complex> mean_pop(len, Complex{0.0, 0.0});
      for (const auto& r : results)
        for (std::size_t i = 0; i < len; ++i) mean_pop[i] += r.settle_pop[i];
      for (auto& v : mean_pop) v /= static_cast<double>(results.size());
      const long w = std::max<long>(4, static_cast<long>(len) / 4);
      detect_steady_state(std::span<const Complex>(mean_pop), w, opts.steady_tol);
    }
  }

  for (const auto& r : results) out.value += r.c;
  out.value /= static_cast<double>(results.size()) * dt;  // flux units
  if (results.size() >= 2) {
    for (const auto& r : results) {
      const Eigen::VectorXcd d = r.c / dt - out.value;
      out.se_re += d.real().cwiseAbs2();
      out.se_im += d.imag().cwiseAbs2();
    }
    const double f = 1.0 / (results.size() * (results.size() - 1.0));
    out.se_re = (out.se_re * f).cwiseSqrt();
    out.se_im = (out.se_im * f).cwiseSqrt();
  }

  Complex amp{0.0, 0.0};
  double pop = 0.0;
  long count = 0;
  for (const auto& r : results) {
    amp += r.amp_sum;
    pop += r.pop_sum;
    count += r.amp_count;
  }
  amp /= static_cast<double>(count);
  pop /= static_cast<double>(count);
  out.coherent_offset = std::norm(amp) / dt;
  out.incoherent_flux = out.value(0).real() - out.coherent_offset.real();
  return out;
}

Spectrum incoherent_spectrum(const CorrelationSeries& series, std::span<const double> omega_grid,
                             double omega_p, double tail_floor) {
  if (series.value.size() < 2)
    throw std::invalid_argument("incoherent_spectrum: correlation series too short");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1]))
      throw std::invalid_argument("incoherent_spectrum: omega grid must be strictly increasing");

  const Eigen::Index L = series.value.size() - 1;
  std::vector<Complex> c(static_cast<std::size_t>(L) + 1);
  double peak = 0.0;
  for (Eigen::Index l = 0; l <= L; ++l) {
    c[static_cast<std::size_t>(l)] = series.value(l) - series.coherent_offset;
    peak = std::max(peak, std::abs(c[static_cast<std::size_t>(l)]));
  }
  const double tail = std::abs(c[static_cast<std::size_t>(L)]);

  std::vector<double> omega_rel(omega_grid.size());
  for (std::size_t i = 0; i < omega_grid.size(); ++i) omega_rel[i] = omega_grid[i] - omega_p;

  Spectrum out;
  out.omega = Eigen::Map<const Eigen::VectorXd>(omega_grid.data(),
                                                static_cast<Eigen::Index>(omega_grid.size()));
  const std::vector<double> vals = half_range_transform(c, series.dt, omega_rel);
  out.value = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                static_cast<Eigen::Index>(vals.size()));
  out.meta.omega_p = omega_p;
  out.meta.n_trajectories = series.n_trajectories;
  out.tail_ratio = peak > 0.0 ? tail / peak : 0.0;
  out.tail_warning = out.tail_ratio > tail_floor;

  out.stderr_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(omega_grid.size()));
  if (series.se_re.size() == series.value.size()) {
    for (std::size_t iw = 0; iw < omega_grid.size(); ++iw) {
      const double w = omega_rel[iw];
      double var = 0.0;
      for (Eigen::Index l = 0; l <= L; ++l) {
        const double weight = (l == 0 || l == L) ? 0.5 : 1.0;
        const double th = -w * series.dt * static_cast<double>(l);
        const double cw = std::cos(th) * weight * series.dt;
        const double sw = std::sin(th) * weight * series.dt;
        var += cw * cw * series.se_re(l) * series.se_re(l) +
               sw * sw * series.se_im(l) * series.se_im(l);
      }
      out.stderr_(static_cast<Eigen::Index>(iw)) = std::sqrt(var);
    }
  }
  return out;
}

}  // namespace loopqed
