#include <cmath>
#include <sstream>

#include "loopqed/analytic.hpp"
#include "loopqed/engine.hpp"
#include "loopqed/experiments.hpp"
#include "loopqed/fitting.hpp"
#include "loopqed/observables.hpp"
#include "loopqed/scheduling.hpp"
#include "loopqed/transform.hpp"

namespace loopqed {

namespace {

void check(ValidateReport& rep, const std::string& name, bool pass, const std::string& detail) {
  rep.items.push_back({name, pass, detail});
  if (!pass) rep.all_pass = false;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

ValidateReport run_validate(std::uint64_t seed, int threads) {
  ValidateReport rep;

  {  // basis dimensions and index bijection
    const auto b1 = build_basis(2, 1, 1);
    const auto b2 = build_basis(3, 2, 1);
    const auto b3 = build_basis(10, 2, 1);
    bool bijection = true;
    for (std::size_t i = 0; i < b3->dimension(); ++i) {
      const auto occ = b3->occupation(i);
      if (b3->index_of(b3->qubit_level(i), occ) != i) bijection = false;
    }
    check(rep, "basis dimensions", b1->dimension() == 6 && b2->dimension() == 14 &&
                                       b3->dimension() == 112,
          "expected 6/14/112, got " + std::to_string(b1->dimension()) + "/" +
              std::to_string(b2->dimension()) + "/" + std::to_string(b3->dimension()));
    check(rep, "basis index bijection", bijection, "index_of(occupation(i)) == i");
  }

  {  // ladder adjointness on a random state
    const auto b = build_basis(3, 2, 1);
    TrajectoryRng rng(seed);
    StateVector psi(b), phi(b);
    for (std::size_t i = 0; i < b->dimension(); ++i) {
      psi.set_amplitude(i, Complex(rng.uniform() - 0.5, rng.uniform() - 0.5));
      phi.set_amplitude(i, Complex(rng.uniform() - 0.5, rng.uniform() - 0.5));
    }
    const auto low = apply_ladder(psi, bin_op(1), LadderDirection::lower);
    const auto rai = apply_ladder(phi, bin_op(1), LadderDirection::raise);
    const Complex lhs = phi.inner(low);
    const Complex rhs = std::conj(psi.inner(rai));
    check(rep, "ladder adjointness", std::abs(lhs - rhs) < 1e-12,
          "<phi|b|psi> vs conj(<psi|b+|phi>) diff " + fmt(std::abs(lhs - rhs)));
  }

  {  // drive preparation
    const auto amps = fresh_input_bin(1.0, 0.01);
    const bool norm_ok = std::abs(amps[0] * amps[0] + amps[1] * amps[1] - 1.0) < 1e-14;
    const bool anti = std::abs(effective_rabi(1.0, 0.0) - Complex(2.0, 0.0)) < 1e-14;
    const bool node = std::abs(effective_rabi(1.0, kPi)) < 1e-12;
    check(rep, "fresh input bin norm", norm_ok, "|a0|^2+|a1|^2 = 1");
    check(rep, "effective rabi endpoints", anti && node, "2 Omega at antinode, 0 at node");
  }

  {  // markovian reflection circle invariant
    MarkovianQubit m{2.0, 1.3, 100.0};
    double worst = 0.0;
    const Complex center(1.0 - m.Gamma_tilde / (2.0 * m.gamma_d), 0.0);
    const double radius = m.Gamma_tilde / (2.0 * m.gamma_d);
    for (int i = -50; i <= 50; ++i) {
      const Complex r = markovian_reflection(100.0 + 0.3 * i, m);
      worst = std::max(worst, std::abs(std::abs(r - center) - radius));
    }
    check(rep, "markovian reflection circle", worst < 1e-12, "max residual " + fmt(worst));
  }

  {  // circle-fit round trip, noiseless
    MarkovianQubit m{1.6, 1.1, 50.0};
    ReflectionTrace trace;
    const int n = 81;
    trace.omega_p.resize(n);
    trace.r.resize(n);
    trace.se_re = Eigen::VectorXd::Zero(n);
    trace.se_im = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const double w = 50.0 + (i - 40) * 0.25;
      trace.omega_p(i) = w;
      trace.r(i) = markovian_reflection(w, m);
    }
    const CircleFitResult fit = circle_fit(trace);
    const double err = std::max({std::abs(fit.Gamma_tilde - m.Gamma_tilde) / m.Gamma_tilde,
                                 std::abs(fit.gamma_d - m.gamma_d) / m.gamma_d,
                                 std::abs(fit.omega0_tilde - m.omega0_tilde) / m.omega0_tilde});
    check(rep, "circle fit round trip", err < 1e-6, "max relative error " + fmt(err));
  }

  {  // decoupled transport: photon circulates N steps, exits with e^{i phi_p}
    LoopConfig loop{1.0, 8, kPi, 0.9, 0.0};
    QubitParams qubit{0.0, 0.0, 0.0, 0.0};
    DriveParams drive;
    drive.mode = DriveMode::linear;
    drive.Omega_L = 0.0;
    const LoopEngine engine(loop, qubit, drive, 1, 1);
    StateVector psi(engine.basis());
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(engine.n_slots()), 0);
    const std::size_t vac = engine.basis()->index_of(0, occ);
    occ[LoopEngine::input_slot] = 1;
    const std::size_t one = engine.basis()->index_of(0, occ);
    psi.set_amplitude(vac, Complex(std::sqrt(0.5), 0.0));
    psi.set_amplitude(one, Complex(std::sqrt(0.5), 0.0));
    TrajectoryRng rng(seed);
    Complex exit_amp{};
    for (int t = 0; t < loop.n_bins; ++t) {
      engine.apply_step_unitary(psi);
      if (t == loop.n_bins - 1) exit_amp = engine.exit_amplitude(psi);
      engine.measure_exit_bin(psi, rng);
      engine.reset_exit_bin(psi);
      engine.advance_ring(psi);
    }
    const Complex expected = 0.5 * std::polar(1.0, engine.drive().phi_p);
    check(rep, "decoupled ring transport", std::abs(exit_amp - expected) < 1e-12,
          "exit amplitude " + fmt(std::abs(exit_amp)) + " expected 0.5 with round-trip phase");
  }

  {  // Markov-limit decay against the rate 2 Gamma at the antinode
    const double Gamma = 1.0;
    LoopConfig loop{0.01, 5, kPi, 0.0, 0.0};
    QubitParams qubit{0.0, Gamma, 0.0, 0.0};
    DriveParams drive;
    drive.mode = DriveMode::linear;
    const LoopEngine engine(loop, qubit, drive, 1, 1);
    const long steps = 900;
    const int n_traj = 2000;
    auto pops = schedule_trajectories<Eigen::VectorXd>(
        n_traj, seed, threads, [&](long, std::uint64_t s) {
          LoopEngine::RunOptions run;
          run.n_steps = steps;
          run.seed = s;
          run.initial_qubit_level = 1;
          run.observables = {std::string(observable_keys::qubit_population)};
          return engine.run_trajectory(run).series[0].real().eval();
        });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(steps);
    for (const auto& p : pops) mean += p;
    mean /= n_traj;
    // weighted log-linear fit over the first 1.5 lifetimes
    double sx = 0, sy = 0, sxx = 0, sxy = 0, count = 0;
    for (long t = 0; t < steps; ++t) {
      if (mean(t) < 0.2) break;
      const double x = (t + 1) * loop.dt();
      const double y = std::log(mean(t));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      count += 1;
    }
    const double rate = -(count * sxy - sx * sy) / (count * sxx - sx * sx);
    check(rep, "markov-limit decay rate", std::abs(rate - 2.0 * Gamma) < 0.1,
          "fit " + fmt(rate) + " expected 2");
  }

  {  // Lorentzian spectrum closed form through the shared transform
    const double gamma = 0.8, A = 0.6, dt = 0.002;
    const long L = 12000;
    std::vector<Complex> c(L + 1);
    for (long l = 0; l <= L; ++l) c[l] = A * std::exp(-gamma * l * dt);
    std::vector<double> w{0.0};
    const double s0 = half_range_transform(c, dt, w)[0];
    check(rep, "lorentzian transform peak", std::abs(s0 - A / gamma) < 1e-3 * A / gamma,
          "S(omega_p) " + fmt(s0) + " expected " + fmt(A / gamma));
  }

  {  // node/antinode interleaving
    const auto nodes = node_frequencies(0.7, 5.0, 2.0, -2, 2);
    const auto anti = antinode_frequencies(0.7, 5.0, 2.0, -2, 2);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < anti.size(); ++i) {
      const double mid = 0.5 * (anti[i] + anti[i + 1]);
      bool found = false;
      for (double nf : nodes)
        if (std::abs(nf - mid) < 1e-9) found = true;
      ok = ok && found;
    }
    check(rep, "node/antinode interleave", ok, "nodes sit midway between antinodes");
  }

  {  // transmon flux map monotone on [0, Phi0/2)
    TransmonParams t{2.0 * kPi * 17e9, 2.0 * kPi * 0.27e9, 1.0};
    bool monotone = true;
    double prev = transmon_frequency(0.0, t);
    for (int i = 1; i <= 40; ++i) {
      const double f = transmon_frequency(0.012 * i, t);
      if (f >= prev) monotone = false;
      prev = f;
    }
    check(rep, "transmon flux map monotone", monotone, "omega0 decreasing toward half quantum");
  }

  return rep;
}

}  // namespace loopqed
