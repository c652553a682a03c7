#include "loopqed/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace loopqed {

namespace {

struct WeightedPoints {
  std::vector<Complex> z;
  std::vector<double> w;
  std::vector<double> omega;
};

// Pratt algebraic circle fit: minimize sum w (a|z|^2 + b x + c y + d)^2 with
// b^2 + c^2 - 4 a d = 1; generalized eigenproblem of the moment matrix.
void pratt_circle(const WeightedPoints& pts, Complex& center, double& radius) {
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  double wsum = 0.0;
  for (std::size_t i = 0; i < pts.z.size(); ++i) {
    const double x = pts.z[i].real();
    const double y = pts.z[i].imag();
    const double zz = x * x + y * y;
    Eigen::Vector4d v(zz, x, y, 1.0);
    M += pts.w[i] * v * v.transpose();
    wsum += pts.w[i];
  }
  M /= wsum;
  Eigen::Matrix4d B = Eigen::Matrix4d::Zero();
  B(0, 3) = B(3, 0) = -2.0;
  B(1, 1) = B(2, 2) = 1.0;
  Eigen::GeneralizedEigenSolver<Eigen::Matrix4d> ges(M, B);
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector4d p = Eigen::Vector4d::Zero();
  for (int i = 0; i < 4; ++i) {
    if (std::abs(ges.betas()(i)) < 1e-30) continue;
    const std::complex<double> ev = ges.eigenvalues()(i);
    if (std::abs(ev.imag()) > 1e-9 * std::max(1.0, std::abs(ev.real()))) continue;
    const double lam = ev.real();
    if (lam < -1e-12) continue;
    Eigen::Vector4d cand = ges.eigenvectors().col(i).real();
    const double con = cand(1) * cand(1) + cand(2) * cand(2) - 4.0 * cand(0) * cand(3);
    if (con <= 0.0 || std::abs(cand(0)) < 1e-14) continue;
    if (lam < best) {
      best = lam;
      p = cand / std::sqrt(con);
    }
  }
  if (!std::isfinite(best)) throw NoResonanceError("circle_fit: degenerate trace geometry");
  center = Complex(-p(1) / (2.0 * p(0)), -p(2) / (2.0 * p(0)));
  radius = 1.0 / (2.0 * std::abs(p(0)));
}

// unwrapped angles of (z - center), ordered by frequency
std::vector<double> unwrapped_angles(const WeightedPoints& pts, Complex center) {
  std::vector<double> th(pts.z.size());
  for (std::size_t i = 0; i < pts.z.size(); ++i) th[i] = std::arg(pts.z[i] - center);
  for (std::size_t i = 1; i < th.size(); ++i) {
    double d = th[i] - th[i - 1];
    while (d > kPi) d -= 2.0 * kPi;
    while (d <= -kPi) d += 2.0 * kPi;
    th[i] = th[i - 1] + d;
  }
  return th;
}

struct PhaseFit {
  double theta0, omega0, gamma_d, chi2;
};

// model theta(w) = theta0 + 2 s atan((w - omega0)/gamma_d); Gauss-Newton with
// damped steps; returns best over orientation s = +-1 and gamma_d restarts
PhaseFit fit_phase(const WeightedPoints& pts, const std::vector<double>& theta) {
  const double wmin = pts.omega.front();
  const double wmax = pts.omega.back();
  const double span = wmax - wmin;

  auto chi2_of = [&](double t0, double w0, double gd, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double m = t0 + 2.0 * s * std::atan((pts.omega[i] - w0) / gd);
      const double r = theta[i] - m;
      acc += pts.w[i] * r * r;
    }
    return acc;
  };

  PhaseFit best{0.0, 0.0, span / 8.0, std::numeric_limits<double>::infinity()};
  for (double s : {1.0, -1.0}) {
    for (double gd0 : {span / 40.0, span / 10.0, span / 3.0}) {
      // initial omega0: steepest phase change
      std::size_t imax = 1;
      double dmax = 0.0;
      for (std::size_t i = 1; i < theta.size(); ++i) {
        const double d = std::abs(theta[i] - theta[i - 1]) /
                         std::max(pts.omega[i] - pts.omega[i - 1], 1e-300);
        if (d > dmax) {
          dmax = d;
          imax = i;
        }
      }
      double w0 = 0.5 * (pts.omega[imax] + pts.omega[imax - 1]);
      double gd = gd0;
      double t0 = theta[imax] - 2.0 * s * std::atan((pts.omega[imax] - w0) / gd);
      double lambda = 1e-3;
      double chi = chi2_of(t0, w0, gd, s);
      for (int it = 0; it < 80; ++it) {
        Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
        Eigen::Vector3d Jtr = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < theta.size(); ++i) {
          const double u = (pts.omega[i] - w0) / gd;
          const double denom = 1.0 + u * u;
          const double m = t0 + 2.0 * s * std::atan(u);
          const double r = theta[i] - m;
          Eigen::Vector3d J;
          J(0) = 1.0;
          J(1) = -2.0 * s / (gd * denom);   // d m / d w0
          J(2) = -2.0 * s * u / (gd * denom);  // d m / d gamma_d
          JtJ += pts.w[i] * J * J.transpose();
          Jtr += pts.w[i] * J * r;
        }
        Eigen::Matrix3d A = JtJ;
        for (int k = 0; k < 3; ++k) A(k, k) *= (1.0 + lambda);
        const Eigen::Vector3d step = A.ldlt().solve(Jtr);
        if (!step.allFinite()) break;
        const double t0n = t0 + step(0);
        const double w0n = w0 + step(1);
        double gdn = gd + step(2);
        if (gdn <= span * 1e-6) gdn = span * 1e-6;
        const double chin = chi2_of(t0n, w0n, gdn, s);
        if (chin < chi) {
          t0 = t0n;
          w0 = w0n;
          gd = gdn;
          lambda = std::max(lambda * 0.3, 1e-12);
          if (chi - chin < 1e-15 * (1.0 + chi)) {
            chi = chin;
            break;
          }
          chi = chin;
        } else {
          lambda *= 10.0;
          if (lambda > 1e12) break;
        }
      }
      if (chi < best.chi2) best = {t0, w0, gd, chi};
    }
  }
  return best;
}

}  // namespace

CircleFitResult circle_fit(const ReflectionTrace& trace, const CircleFitOptions& opts) {
  const std::size_t n = static_cast<std::size_t>(trace.omega_p.size());
  if (n < 8) throw std::invalid_argument("circle_fit: need at least 8 points");
  if (static_cast<std::size_t>(trace.r.size()) != n)
    throw std::invalid_argument("circle_fit: trace size mismatch");

  // order by frequency
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return trace.omega_p(static_cast<Eigen::Index>(a)) <
           trace.omega_p(static_cast<Eigen::Index>(b));
  });

  WeightedPoints pts;
  pts.z.resize(n);
  pts.w.assign(n, 1.0);
  pts.omega.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.z[i] = trace.r(static_cast<Eigen::Index>(order[i]));
    pts.omega[i] = trace.omega_p(static_cast<Eigen::Index>(order[i]));
  }

  // off-resonant anchor: mean of the outer fraction on both ends
  const std::size_t edge = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                        std::floor(n * opts.anchor_fraction / 2)));
  Complex anchor{0.0, 0.0};
  double anchor_var = 0.0;
  for (std::size_t i = 0; i < edge; ++i) anchor += pts.z[i] + pts.z[n - 1 - i];
  anchor /= static_cast<double>(2 * edge);
  for (std::size_t i = 0; i < edge; ++i)
    anchor_var += std::norm(pts.z[i] - anchor) + std::norm(pts.z[n - 1 - i] - anchor);
  const double anchor_scatter = std::sqrt(anchor_var / (2.0 * edge));

  CircleFitResult out;
  out.anchor = anchor;
  if (opts.anchor_normalize) {
    if (std::abs(anchor) < 1e-12)
      throw std::invalid_argument("circle_fit: off-resonant anchor vanishes");
    for (auto& z : pts.z) z /= anchor;
  }

  // stage 1, pass 1: unweighted circle; pass 2: density weights along the arc
  pratt_circle(pts, out.center, out.radius);
  {
    std::vector<double> th = unwrapped_angles(pts, out.center);
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = (i == 0) ? th[1] - th[0] : th[i] - th[i - 1];
      const double hi = (i + 1 == n) ? th[n - 1] - th[n - 2] : th[i + 1] - th[i];
      pts.w[i] = std::max(1e-6, 0.5 * (std::abs(lo) + std::abs(hi)));
    }
    pratt_circle(pts, out.center, out.radius);
  }

  const double scatter_ref =
      opts.anchor_normalize && std::abs(anchor) > 0.0 ? anchor_scatter / std::abs(anchor)
                                                      : anchor_scatter;
  if (out.radius < std::max(opts.noise_floor_scale * scatter_ref, 1e-9))
    throw NoResonanceError("circle_fit: no resonance (radius below noise floor)");

  double res2 = 0.0;
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(pts.z[i] - out.center) - out.radius;
    res2 += pts.w[i] * d * d;
    wsum += pts.w[i];
  }
  out.rms_residual = std::sqrt(res2 / wsum);
  out.non_circular_warning = out.rms_residual > opts.residual_warning * out.radius;

  // stage 2: phase fit
  const std::vector<double> theta = unwrapped_angles(pts, out.center);
  const PhaseFit pf = fit_phase(pts, theta);
  out.omega0_tilde = pf.omega0;
  out.gamma_d = pf.gamma_d;
  out.Gamma_tilde = 2.0 * out.radius * out.gamma_d;

  // stage 3: tilt relative to the off-resonant anchor (at 1 after normalization)
  const Complex z_res =
      out.center + std::polar(out.radius, pf.theta0);  // theta(omega0_tilde) = theta0
  out.resonance_point = z_res;
  const Complex ref = opts.anchor_normalize ? Complex{1.0, 0.0} : anchor;
  out.tilt = std::arg(ref - z_res);

  // uncertainty estimates: phase-fit covariance plus circle scatter
  {
    const double dof = std::max(1.0, static_cast<double>(n) - 3.0);
    const double sigma2 = pf.chi2 / (wsum * dof / n);
    Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (pts.omega[i] - pf.omega0) / pf.gamma_d;
      const double denom = 1.0 + u * u;
      Eigen::Vector3d J(1.0, -2.0 / (pf.gamma_d * denom), -2.0 * u / (pf.gamma_d * denom));
      JtJ += pts.w[i] * J * J.transpose();
    }
    const Eigen::Matrix3d cov = sigma2 * JtJ.inverse();
    out.se_omega0_tilde = std::sqrt(std::max(0.0, cov(1, 1)));
    out.se_gamma_d = std::sqrt(std::max(0.0, cov(2, 2)));
    const double se_radius = out.rms_residual / std::sqrt(static_cast<double>(n));
    out.se_Gamma_tilde =
        2.0 * std::hypot(out.radius * out.se_gamma_d, out.gamma_d * se_radius);
    out.se_tilt = std::hypot(out.rms_residual / (out.radius * std::sqrt(double(n) / 4.0)),
                             std::sqrt(std::max(0.0, cov(0, 0))));
  }
  return out;
}

TiltConsistency tilt_consistency(const CircleFitResult& fit, double omega0_bare, double tau) {
  TiltConsistency out;
  out.predicted = (fit.omega0_tilde - omega0_bare) * tau;
  out.measured = fit.tilt;
  out.difference = out.measured - out.predicted;
  return out;
}

}  // namespace loopqed
