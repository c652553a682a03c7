#include "loopqed/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "loopqed/analytic.hpp"
#include "loopqed/scheduling.hpp"

namespace loopqed {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> SweepRange::values(double center) const {
  if (points <= 0) return {};
  std::vector<double> out(static_cast<std::size_t>(points));
  const double base = relative ? center : 0.0;
  if (points == 1) {
    out[0] = base + start;
    return out;
  }
  const double step = (stop - start) / (points - 1);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = base + start + i * step;
  return out;
}

namespace {

constexpr const char* kExperiments[] = {"reflection-map", "reflection-cut", "tilt-scan",
                                        "spectrum-single", "spectrum-power-sweep", "validate"};

bool known_experiment(const std::string& name) {
  for (const char* e : kExperiments)
    if (name == e) return true;
  return false;
}

double jget(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
  return j.at(key).get<double>();
}

long jget_long(const json& j, const char* key, long fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<long>();
}

SweepRange parse_sweep(const json& j) {
  SweepRange r;
  r.start = jget(j, "start", 0.0);
  r.stop = jget(j, "stop", 0.0);
  r.points = static_cast<int>(jget_long(j, "points", 0));
  r.relative = j.value("relative", false);
  return r;
}

json sweep_to_json(const SweepRange& r) {
  return json{{"start", r.start}, {"stop", r.stop}, {"points", r.points}, {"relative", r.relative}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_json_text(buf.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.experiment = j.value("experiment", "");
    if (j.contains("loop")) {
      const json& l = j.at("loop");
      c.loop.tau = jget(l, "tau", 0.0);
      c.loop.n_bins = static_cast<int>(jget_long(l, "n_bins", 0));
      c.loop.phi_M = jget(l, "phi_M", kPi);
      c.loop.reference_antinode_freq = jget(l, "reference_antinode_freq", 0.0);
      if (l.contains("phi")) {
        c.loop.phi = l.at("phi").get<double>();
        c.phi_explicit = true;
      }
      if (l.contains("phase_calibration"))
        for (const auto& row : l.at("phase_calibration"))
          c.phase_calibration.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    }
    if (j.contains("qubit")) {
      const json& q = j.at("qubit");
      c.qubit.omega0 = jget(q, "omega0", 0.0);
      c.qubit.Gamma = jget(q, "Gamma", 0.0);
      c.qubit.gamma_phi = jget(q, "gamma_phi", 0.0);
      c.qubit.gamma_L = jget(q, "gamma_L", 0.0);
    }
    if (j.contains("drive")) {
      const json& d = j.at("drive");
      const std::string mode = d.value("mode", "linear");
      if (mode == "linear")
        c.drive.mode = DriveMode::linear;
      else if (mode == "nonlinear")
        c.drive.mode = DriveMode::nonlinear;
      else
        throw ConfigError("config: drive.mode must be linear or nonlinear");
      c.drive.omega_p = jget(d, "omega_p", 0.0);
      c.omega_p_relative = d.value("omega_p_relative", false);
      c.drive.Omega_L = jget(d, "Omega_L", 0.0);
      c.drive.Omega_NL = jget(d, "Omega_NL", 0.0);
    }
    if (j.contains("basis")) {
      c.max_total = static_cast<int>(jget_long(j.at("basis"), "max_total", 2));
      c.per_bin_cap = static_cast<int>(jget_long(j.at("basis"), "per_bin_cap", 1));
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      if (s.contains("omega_p")) c.sweep_omega_p = parse_sweep(s.at("omega_p"));
      if (s.contains("omega0")) c.sweep_omega0 = parse_sweep(s.at("omega0"));
      if (s.contains("powers_Omega_NL"))
        c.powers_Omega_NL = s.at("powers_Omega_NL").get<std::vector<double>>();
      if (s.contains("powers_dbm")) c.powers_dbm = s.at("powers_dbm").get<std::vector<double>>();
      c.kappa = jget(s, "kappa", 0.0);
    }
    if (j.contains("estimators")) {
      const json& e = j.at("estimators");
      if (e.contains("reflection")) {
        const json& r = e.at("reflection");
        c.reflection.n_trajectories = static_cast<int>(jget_long(r, "n_trajectories", 8));
        c.reflection.max_steps = jget_long(r, "max_steps", 0);
        c.reflection.window = jget_long(r, "window", 0);
        c.reflection.tol = jget(r, "tol", 2e-3);
      }
      if (e.contains("g1")) {
        const json& g = e.at("g1");
        c.g1.lag_steps = jget_long(g, "lag_steps", 0);
        c.g1.anchors_per_trajectory = static_cast<int>(jget_long(g, "anchors_per_trajectory", 2));
        c.g1.settle_steps = jget_long(g, "settle_steps", 0);
        c.g1.steady_window = jget_long(g, "steady_window", 0);
        c.g1.steady_tol = jget(g, "steady_tol", 5e-3);
      }
    }
    if (j.contains("spectrum_grid")) c.spectrum_grid = parse_sweep(j.at("spectrum_grid"));
    c.n_trajectories = jget_long(j, "trajectories", 1000);
    c.master_seed = j.value("master_seed", std::uint64_t{1});
    c.threads = static_cast<int>(jget_long(j, "threads", 0));
    c.output_dir = j.value("output_dir", "out");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: schema error: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::to_json_text() const {
  json l{{"tau", loop.tau},
         {"n_bins", loop.n_bins},
         {"phi_M", loop.phi_M},
         {"phi", loop.phi},
         {"reference_antinode_freq", loop.reference_antinode_freq}};
  if (!phase_calibration.empty()) {
    json cal = json::array();
    for (const auto& [w, p] : phase_calibration) cal.push_back(json::array({w, p}));
    l["phase_calibration"] = cal;
  }
  json j{
      {"experiment", experiment},
      {"loop", l},
      {"qubit",
       {{"omega0", qubit.omega0},
        {"Gamma", qubit.Gamma},
        {"gamma_phi", qubit.gamma_phi},
        {"gamma_L", qubit.gamma_L}}},
      {"drive",
       {{"mode", drive.mode == DriveMode::linear ? "linear" : "nonlinear"},
        {"omega_p", drive.omega_p},
        {"Omega_L", drive.Omega_L},
        {"Omega_NL", drive.Omega_NL}}},
      {"basis", {{"max_total", max_total}, {"per_bin_cap", per_bin_cap}}},
      {"sweep",
       {{"omega_p", sweep_to_json(sweep_omega_p)},
        {"omega0", sweep_to_json(sweep_omega0)},
        {"powers_Omega_NL", powers_Omega_NL},
        {"powers_dbm", powers_dbm},
        {"kappa", kappa}}},
      {"estimators",
       {{"reflection",
         {{"n_trajectories", reflection.n_trajectories},
          {"max_steps", reflection.max_steps},
          {"window", reflection.window},
          {"tol", reflection.tol}}},
        {"g1",
         {{"lag_steps", g1.lag_steps},
          {"anchors_per_trajectory", g1.anchors_per_trajectory},
          {"settle_steps", g1.settle_steps},
          {"steady_window", g1.steady_window},
          {"steady_tol", g1.steady_tol}}}}},
      {"spectrum_grid", sweep_to_json(spectrum_grid)},
      {"trajectories", n_trajectories},
      {"master_seed", master_seed},
      {"threads", threads},
      {"output_dir", output_dir}};
  return j.dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
  ExperimentConfig canonical = *this;
  canonical.threads = 0;  // worker budget must not change results
  const std::string text = canonical.to_json_text();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void ExperimentConfig::validate() const {
  if (!known_experiment(experiment))
    throw ConfigError("config: unknown experiment '" + experiment + "'");
  if (experiment == "validate") return;
  try {
    loop.validate();
    qubit.validate();
    drive.validate(loop, qubit);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (n_trajectories < 1) throw ConfigError("config: trajectories must be >= 1");
  if ((experiment == "reflection-map" || experiment == "reflection-cut" ||
       experiment == "tilt-scan") &&
      sweep_omega_p.empty())
    throw ConfigError("config: sweep.omega_p required for reflection experiments");
  if ((experiment == "reflection-map" || experiment == "tilt-scan") && sweep_omega0.empty())
    throw ConfigError("config: sweep.omega0 required for map/scan experiments");
  if (experiment == "spectrum-power-sweep" && powers_Omega_NL.empty() && powers_dbm.empty())
    throw ConfigError("config: sweep.powers_Omega_NL or sweep.powers_dbm required");
  if (!powers_dbm.empty() && !(kappa > 0.0))
    throw ConfigError("config: sweep.kappa required with powers_dbm");
  if ((experiment == "spectrum-single" || experiment == "spectrum-power-sweep") &&
      spectrum_grid.empty())
    throw ConfigError("config: spectrum_grid required for spectrum experiments");
}

void ExperimentConfig::finalize() {
  if (!phi_explicit) {
    if (!phase_calibration.empty())
      loop.phi = PhaseCalibration(phase_calibration).phi_at(qubit.omega0);
    else
      loop.phi = round_trip_phase(qubit.omega0, loop.tau, loop.reference_antinode_freq);
  }
  if (omega_p_relative) {
    drive.omega_p = qubit.omega0 + drive.omega_p;
    omega_p_relative = false;
  }
  if (loop.n_bins == 0) loop.n_bins = default_n_bins(loop.tau, qubit, drive);
  validate();
}

// ---------------------------------------------------------------------------
// serialization

void write_spectrum_csv(const std::string& path, const Spectrum& spectrum) {
  auto os = open_out(path);
  os << "omega_hz,s_value,s_stderr\n";
  for (Eigen::Index i = 0; i < spectrum.omega.size(); ++i)
    os << format_double(spectrum.omega(i) / (2.0 * kPi)) << ',' << format_double(spectrum.value(i))
       << ',' << format_double(spectrum.stderr_(i)) << '\n';
}

void write_correlation_csv(const std::string& path, const CorrelationSeries& series) {
  auto os = open_out(path);
  os << "lag_s,re_c,im_c,se_re,se_im\n";
  for (Eigen::Index i = 0; i < series.value.size(); ++i)
    os << format_double(i * series.dt) << ',' << format_double(series.value(i).real()) << ','
       << format_double(series.value(i).imag()) << ',' << format_double(series.se_re(i)) << ','
       << format_double(series.se_im(i)) << '\n';
}

void write_reflection_csv(const std::string& path, const ReflectionTrace& trace) {
  auto os = open_out(path);
  os << "freq_hz,re_r,im_r,se_re,se_im\n";
  for (Eigen::Index i = 0; i < trace.omega_p.size(); ++i)
    os << format_double(trace.omega_p(i) / (2.0 * kPi)) << ',' << format_double(trace.r(i).real())
       << ',' << format_double(trace.r(i).imag()) << ',' << format_double(trace.se_re(i)) << ','
       << format_double(trace.se_im(i)) << '\n';
}

ReflectionTrace read_reflection_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read trace file: " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty trace file: " + path);
  std::vector<double> f, re, im, sre, sim;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a, b, c, d = 0.0, e = 0.0;
    if (!(row >> a >> b >> c)) throw IoError("malformed trace row in " + path + ": " + line);
    row >> d >> e;
    f.push_back(a);
    re.push_back(b);
    im.push_back(c);
    sre.push_back(d);
    sim.push_back(e);
  }
  ReflectionTrace t;
  const Eigen::Index n = static_cast<Eigen::Index>(f.size());
  t.omega_p.resize(n);
  t.r.resize(n);
  t.se_re.resize(n);
  t.se_im.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.omega_p(i) = f[static_cast<std::size_t>(i)] * 2.0 * kPi;
    t.r(i) = Complex(re[static_cast<std::size_t>(i)], im[static_cast<std::size_t>(i)]);
    t.se_re(i) = sre[static_cast<std::size_t>(i)];
    t.se_im(i) = sim[static_cast<std::size_t>(i)];
  }
  return t;
}

void write_circle_fit_json(const std::string& path, const CircleFitResult& fit) {
  json j{{"Gamma_tilde", fit.Gamma_tilde},
         {"gamma_d", fit.gamma_d},
         {"omega0_tilde", fit.omega0_tilde},
         {"omega0_tilde_hz", fit.omega0_tilde / (2.0 * kPi)},
         {"center", {fit.center.real(), fit.center.imag()}},
         {"radius", fit.radius},
         {"tilt", fit.tilt},
         {"rms_residual", fit.rms_residual},
         {"se", {{"Gamma_tilde", fit.se_Gamma_tilde},
                  {"gamma_d", fit.se_gamma_d},
                  {"omega0_tilde", fit.se_omega0_tilde},
                  {"tilt", fit.se_tilt}}},
         {"non_circular_warning", fit.non_circular_warning}};
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

namespace {

void write_sidecar(const ExperimentConfig& cfg, const RunOutputs& outputs) {
  json j{{"config", json::parse(cfg.to_json_text())},
         {"config_hash", cfg.hash()},
         {"master_seed", cfg.master_seed},
         {"partial", outputs.partial},
         {"outputs", outputs.files}};
  auto os = open_out(cfg.output_dir + "/meta.json");
  os << j.dump(2) << '\n';
}

ReflectionTrace sweep_reflection(const ExperimentConfig& cfg, const QubitParams& qubit,
                                 double phi, const std::vector<double>& omega_ps) {
  ReflectionTrace trace;
  const Eigen::Index n = static_cast<Eigen::Index>(omega_ps.size());
  trace.omega_p.resize(n);
  trace.r.resize(n);
  trace.se_re.resize(n);
  trace.se_im.resize(n);
  trace.drive_Omega_L = cfg.drive.Omega_L;
  LoopConfig loop = cfg.loop;
  loop.phi = phi;
  for (Eigen::Index i = 0; i < n; ++i) {
    DriveParams d = cfg.drive;
    d.omega_p = omega_ps[static_cast<std::size_t>(i)];
    ReflectionOptions opts = cfg.reflection;
    opts.seed = derive_seed(cfg.master_seed, 1000003ull * static_cast<std::uint64_t>(i));
    opts.threads = cfg.threads;
    const ReflectionResult res =
        reflection_coefficient(loop, qubit, d, opts, cfg.max_total, cfg.per_bin_cap);
    trace.omega_p(i) = d.omega_p;
    trace.r(i) = res.r;
    trace.se_re(i) = res.se_re;
    trace.se_im(i) = res.se_im;
  }
  trace.meta.phi = phi;
  trace.meta.Gamma = qubit.Gamma;
  trace.meta.gamma_phi = qubit.gamma_phi;
  trace.meta.gamma_L = qubit.gamma_L;
  trace.meta.n_trajectories = cfg.reflection.n_trajectories;
  trace.meta.master_seed = cfg.master_seed;
  return trace;
}

double phi_for_omega0(const ExperimentConfig& cfg, double omega0) {
  if (!cfg.phase_calibration.empty())
    return PhaseCalibration(cfg.phase_calibration).phi_at(omega0);
  return round_trip_phase(omega0, cfg.loop.tau, cfg.loop.reference_antinode_freq);
}

RunOutputs run_reflection_cut(const ExperimentConfig& cfg) {
  RunOutputs out;
  const std::vector<double> omega_ps = cfg.sweep_omega_p.values(cfg.qubit.omega0);
  const ReflectionTrace trace = sweep_reflection(cfg, cfg.qubit, cfg.loop.phi, omega_ps);
  write_reflection_csv(cfg.output_dir + "/reflection.csv", trace);
  out.files.push_back("reflection.csv");
  const CircleFitResult fit = circle_fit(trace);
  write_circle_fit_json(cfg.output_dir + "/circlefit.json", fit);
  out.files.push_back("circlefit.json");
  return out;
}

RunOutputs run_reflection_map(const ExperimentConfig& cfg) {
  RunOutputs out;
  const std::string path = cfg.output_dir + "/reflection_map.csv";
  auto os = open_out(path);
  os << "omega0_hz,omega_p_hz,re_r,im_r\n";
  out.files.push_back("reflection_map.csv");
  const std::vector<double> omega0s = cfg.sweep_omega0.values(cfg.qubit.omega0);
  try {
    for (double w0 : omega0s) {
      QubitParams q = cfg.qubit;
      q.omega0 = w0;
      const double phi = cfg.phi_explicit ? cfg.loop.phi : phi_for_omega0(cfg, w0);
      const std::vector<double> omega_ps = cfg.sweep_omega_p.values(w0);
      const ReflectionTrace trace = sweep_reflection(cfg, q, phi, omega_ps);
      for (Eigen::Index i = 0; i < trace.omega_p.size(); ++i)
        os << format_double(w0 / (2.0 * kPi)) << ','
           << format_double(trace.omega_p(i) / (2.0 * kPi)) << ','
           << format_double(trace.r(i).real()) << ',' << format_double(trace.r(i).imag()) << '\n';
      os.flush();
    }
  } catch (...) {
    os.flush();
    out.partial = true;
    throw;
  }
  return out;
}

RunOutputs run_tilt_scan(const ExperimentConfig& cfg) {
  RunOutputs out;
  const std::string path = cfg.output_dir + "/tilt_scan.csv";
  auto os = open_out(path);
  os << "omega0_hz,omega0_tilde_hz,predicted_tilt,measured_tilt,difference\n";
  out.files.push_back("tilt_scan.csv");
  const std::vector<double> omega0s = cfg.sweep_omega0.values(cfg.qubit.omega0);
  try {
    for (double w0 : omega0s) {
      QubitParams q = cfg.qubit;
      q.omega0 = w0;
      const double phi = cfg.phi_explicit ? cfg.loop.phi : phi_for_omega0(cfg, w0);
      const std::vector<double> omega_ps = cfg.sweep_omega_p.values(w0);
      const ReflectionTrace trace = sweep_reflection(cfg, q, phi, omega_ps);
      const CircleFitResult fit = circle_fit(trace);
      const TiltConsistency tc = tilt_consistency(fit, w0, cfg.loop.tau);
      os << format_double(w0 / (2.0 * kPi)) << ','
         << format_double(fit.omega0_tilde / (2.0 * kPi)) << ',' << format_double(tc.predicted)
         << ',' << format_double(tc.measured) << ',' << format_double(tc.difference) << '\n';
      os.flush();
    }
  } catch (...) {
    os.flush();
    out.partial = true;
    throw;
  }
  return out;
}

Spectrum one_spectrum(const ExperimentConfig& cfg, const DriveParams& drive,
                      std::uint64_t seed) {
  G1Options g1 = cfg.g1;
  g1.n_trajectories = static_cast<int>(cfg.n_trajectories);
  g1.seed = seed;
  g1.threads = cfg.threads;
  const CorrelationSeries c =
      g1_correlation(cfg.loop, cfg.qubit, drive, g1, cfg.max_total, cfg.per_bin_cap);
  const std::vector<double> grid = cfg.spectrum_grid.values(drive.omega_p);
  Spectrum s = incoherent_spectrum(c, grid, drive.omega_p);
  const DriveDerived der = derive_drive(cfg.loop, cfg.qubit, drive);
  s.meta.phi = cfg.loop.phi;
  s.meta.phi_p = der.phi_p;
  s.meta.Omega = std::abs(der.Omega_eff);
  s.meta.Gamma = cfg.qubit.Gamma;
  s.meta.gamma_phi = cfg.qubit.gamma_phi;
  s.meta.gamma_L = cfg.qubit.gamma_L;
  s.meta.master_seed = seed;
  return s;
}

RunOutputs run_spectrum_single(const ExperimentConfig& cfg) {
  RunOutputs out;
  G1Options g1 = cfg.g1;
  g1.n_trajectories = static_cast<int>(cfg.n_trajectories);
  g1.seed = cfg.master_seed;
  g1.threads = cfg.threads;
  const CorrelationSeries c =
      g1_correlation(cfg.loop, cfg.qubit, cfg.drive, g1, cfg.max_total, cfg.per_bin_cap);
  write_correlation_csv(cfg.output_dir + "/correlation.csv", c);
  out.files.push_back("correlation.csv");
  const std::vector<double> grid = cfg.spectrum_grid.values(cfg.drive.omega_p);
  Spectrum s = incoherent_spectrum(c, grid, cfg.drive.omega_p);
  const DriveDerived der = derive_drive(cfg.loop, cfg.qubit, cfg.drive);
  s.meta.phi = cfg.loop.phi;
  s.meta.phi_p = der.phi_p;
  s.meta.Omega = std::abs(der.Omega_eff);
  s.meta.n_trajectories = static_cast<int>(cfg.n_trajectories);
  write_spectrum_csv(cfg.output_dir + "/spectrum.csv", s);
  out.files.push_back("spectrum.csv");
  return out;
}

RunOutputs run_spectrum_power_sweep(const ExperimentConfig& cfg) {
  RunOutputs out;
  std::vector<double> powers = cfg.powers_Omega_NL;
  if (powers.empty())
    for (double dbm : cfg.powers_dbm) powers.push_back(omega_nl_from_dbm(dbm, cfg.kappa));

  auto pred = open_out(cfg.output_dir + "/predictors.csv");
  pred << "power_index,Omega_NL,Omega_eff_abs,kind,k,freq_hz\n";
  out.files.push_back("predictors.csv");
  try {
    for (std::size_t ip = 0; ip < powers.size(); ++ip) {
      DriveParams d = cfg.drive;
      d.mode = DriveMode::nonlinear;
      d.Omega_L = 0.0;
      d.Omega_NL = powers[ip];
      const Spectrum s =
          one_spectrum(cfg, d, derive_seed(cfg.master_seed, 7919ull * (ip + 1)));
      const std::string name = "spectrum_" + std::to_string(ip) + ".csv";
      write_spectrum_csv(cfg.output_dir + "/" + name, s);
      out.files.push_back(name);
      const DriveDerived der = derive_drive(cfg.loop, cfg.qubit, d);
      const auto nodes = node_frequencies(der.phi_p, d.omega_p, cfg.loop.tau, -3, 4);
      const auto antinodes = antinode_frequencies(der.phi_p, d.omega_p, cfg.loop.tau, -3, 3);
      int k = -3;
      for (double w : nodes)
        pred << ip << ',' << format_double(d.Omega_NL) << ','
             << format_double(std::abs(der.Omega_eff)) << ",node," << k++ << ','
             << format_double(w / (2.0 * kPi)) << '\n';
      k = -3;
      for (double w : antinodes)
        pred << ip << ',' << format_double(d.Omega_NL) << ','
             << format_double(std::abs(der.Omega_eff)) << ",antinode," << k++ << ','
             << format_double(w / (2.0 * kPi)) << '\n';
      pred.flush();
    }
  } catch (...) {
    pred.flush();
    out.partial = true;
    throw;
  }
  return out;
}

}  // namespace

RunOutputs run_experiment(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.finalize();
  ensure_dir(cfg.output_dir);
  RunOutputs out;
  try {
    if (cfg.experiment == "reflection-cut")
      out = run_reflection_cut(cfg);
    else if (cfg.experiment == "reflection-map")
      out = run_reflection_map(cfg);
    else if (cfg.experiment == "tilt-scan")
      out = run_tilt_scan(cfg);
    else if (cfg.experiment == "spectrum-single")
      out = run_spectrum_single(cfg);
    else if (cfg.experiment == "spectrum-power-sweep")
      out = run_spectrum_power_sweep(cfg);
    else if (cfg.experiment == "validate") {
      const ValidateReport rep = run_validate(cfg.master_seed, cfg.threads);
      json items = json::array();
      for (const auto& item : rep.items)
        items.push_back({{"name", item.name}, {"pass", item.pass}, {"detail", item.detail}});
      auto os = open_out(cfg.output_dir + "/validate.json");
      os << json{{"all_pass", rep.all_pass}, {"items", items}}.dump(2) << '\n';
      out.files.push_back("validate.json");
      if (!rep.all_pass) throw std::runtime_error("validate: oracle suite reported failures");
    } else {
      throw ConfigError("run_experiment: unknown experiment " + cfg.experiment);
    }
  } catch (...) {
    out.partial = true;
    write_sidecar(cfg, out);
    throw;
  }
  write_sidecar(cfg, out);
  return out;
}

}  // namespace loopqed
