// Command-line front end: simulate, fit, relaxmap, debye, eseem, identify.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spinbench/spinbench.hpp"

namespace fs = std::filesystem;
using namespace spinbench;

namespace {

// Exit-code contract: 0 success, 2 usage error, 3 data error, 4 non-convergence.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNoConvergence = 4;

struct GlobalOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool verbose = false;
  std::string isotope_path;
};

// Resolved key=value pairs for the sidecar and the output headers, in
// insertion order.
class ResolvedConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& kv : items_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    items_.emplace_back(key, value);
  }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value) { set(key, csv::format_double(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  std::vector<std::string> header(const std::string& command) const {
    std::vector<std::string> lines;
    lines.push_back(std::string("spinbench ") + kVersion);
    lines.push_back("command: " + command);
    for (const auto& [k, v] : items_) lines.push_back(k + " = " + v);
    return lines;
  }

  void write_sidecar(const fs::path& dir, const std::string& command) const {
    std::ofstream out(dir / "run_config.txt");
    if (!out) throw DataError("cannot write sidecar in '" + dir.string() + "'");
    out << "# resolved configuration (sidecar metadata)\n";
    out << "tool = spinbench " << kVersion << "\n";
    out << "command = " << command << "\n";
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "timestamp = " << stamp << "\n";
    for (const auto& [k, v] : items_) out << k << " = " << v << "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

fs::path ensure_out_dir(const GlobalOptions& global) {
  fs::path dir(global.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw DataError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

IsotopeTable load_isotopes(const GlobalOptions& global) {
  std::vector<std::string> candidates;
  if (!global.isotope_path.empty()) candidates.push_back(global.isotope_path);
  if (const char* env = std::getenv("SPINBENCH_ISOTOPES")) candidates.push_back(env);
  candidates.push_back("data/isotopes.txt");
  candidates.push_back("isotopes.txt");
  for (const auto& path : candidates)
    if (fs::exists(path)) return IsotopeTable::load(path);
  throw DataError(
      "no isotope table found; pass --isotopes, set SPINBENCH_ISOTOPES, or "
      "provide data/isotopes.txt");
}

TimeTrace select_channel(const ComplexTrace& trace, const std::string& column) {
  if (column == "real") return trace.real_part();
  if (column == "imag") return trace.imag_part();
  if (column == "mag") return trace.magnitude();
  throw ParameterError("unknown --column '" + column + "'");
}

std::string format_estimate(const Estimate& e) {
  return csv::format_double(e.value) + " +- " + csv::format_double(e.sigma);
}

void write_fit_outputs(const fs::path& dir, const FitResult& fit,
                       const TimeTrace& data, const ResolvedConfig& config,
                       const std::string& command,
                       const std::function<double(double)>& model,
                       const std::vector<std::string>& extra_report_lines = {}) {
  const auto header = config.header(command);

  {
    std::ofstream out(dir / "fit_parameters.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "parameter,value,sigma\n";
    for (const auto& name : fit.parameter_names)
      out << name << ',' << csv::format_double(fit.at(name).value) << ','
          << csv::format_double(fit.at(name).sigma) << "\n";
  }
  {
    std::ofstream out(dir / "fit_residuals.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "time_ns,data,model,residual\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double m = model(data.times_ns[i]);
      out << csv::format_double(data.times_ns[i]) << ','
          << csv::format_double(data.values[i]) << ',' << csv::format_double(m) << ','
          << csv::format_double(data.values[i] - m) << "\n";
    }
  }
  {
    std::ofstream out(dir / "fit_report.txt", std::ios::binary);
    for (const auto& line : header) out << "# " << line << "\n";
    out << "model: " << fit.model_id << "\n";
    out << "points: " << data.size() << "\n";
    out << "converged: " << (fit.converged ? "yes" : "no") << " (" << fit.iterations
        << " iterations)\n";
    out << "residual_norm: " << csv::format_double(fit.residual_norm) << "\n";
    out << "parameters:\n";
    for (const auto& name : fit.parameter_names)
      out << "  " << name << " = " << format_estimate(fit.at(name)) << "\n";
    if (!fit.warnings.empty()) {
      out << "warnings:\n";
      for (const auto& w : fit.warnings) out << "  " << w << "\n";
    }
    for (const auto& line : extra_report_lines) out << line << "\n";
  }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string kind;
  int n = 1;
  int points = 512;
  double tau_start_ns = 150.0;
  double dtau_ns = 8.0;
  double t_start_ns = 400.0;
  double dt_ns = 1000.0;
  double t_stop_ns = 0.0;
  std::string spacing = "linear";
  double tau_ns = 150.0;
  double dead_time_ns = 150.0;
  double window_ns = 32.0;
  double t1_us = 359.0;
  double t2_us = 1.3;
  double ts_us = 0.0;
  double sd_weight = 0.0;
  int isochromats = 512;
  double offset_sigma_mhz = 5.0;
  bool eseem_detect = false;
  double b0_t = 0.0;
  std::vector<std::string> modulate;
  double noise_sigma = 0.0;
  int threads = 0;
};

std::vector<ModulationSpec> parse_modulations(const std::vector<std::string>& specs,
                                              const IsotopeTable& table) {
  std::vector<ModulationSpec> mods;
  for (const auto& raw : specs) {
    std::istringstream in(raw);
    std::string label, depth_str, mult_str;
    std::getline(in, label, ':');
    std::getline(in, depth_str, ':');
    std::getline(in, mult_str);
    if (label.empty() || depth_str.empty())
      throw ParameterError("--modulate expects label:depth[:multiplicity], got '" +
                           raw + "'");
    ModulationSpec mod;
    mod.nucleus = table.at(label);
    try {
      mod.depth_k = std::stod(depth_str);
      mod.multiplicity = mult_str.empty() ? 1 : std::stoi(mult_str);
    } catch (const std::exception&) {
      throw ParameterError("--modulate: malformed numbers in '" + raw + "'");
    }
    mod.validate();
    mods.push_back(std::move(mod));
  }
  return mods;
}

int run_simulate(const GlobalOptions& global, const SimulateOptions& opt) {
  SequenceKind kind;
  if (opt.kind == "hahn") kind = SequenceKind::hahn;
  else if (opt.kind == "cpmg") kind = SequenceKind::cpmg;
  else if (opt.kind == "inversion_recovery") kind = SequenceKind::inversion_recovery;
  else if (opt.kind == "three_pulse_eseem") kind = SequenceKind::three_pulse_eseem;
  else
    throw ParameterError(
        "--kind must be one of hahn|cpmg|inversion_recovery|three_pulse_eseem");

  SequenceOptions seq_opts;
  seq_opts.cpmg_n = opt.n;
  seq_opts.tau_ns = opt.tau_ns;
  seq_opts.dead_time_ns = opt.dead_time_ns;
  seq_opts.window_ns = opt.window_ns;
  seq_opts.eseem_detection = opt.eseem_detect;
  // Long CPMG trains are the nuclear-detection regime: complete 2^{n+1}
  // cycling is impractical there, so the two-step first-pulse cycle takes
  // over (recorded in the resolved config).
  const bool auto_detect_cycle = kind == SequenceKind::cpmg && opt.n >= 9;
  if (auto_detect_cycle) seq_opts.eseem_detection = true;
  Sequence sequence = make_sequence(kind, seq_opts);

  SweepSpec sweep;
  sweep.points = opt.points;
  const bool tau_swept = sequence.sweep_tag == "tau";
  if (opt.spacing == "log") {
    sweep.spacing = SweepSpec::Spacing::geometric;
    sweep.start_ns = tau_swept ? opt.tau_start_ns : opt.t_start_ns;
    sweep.stop_ns = opt.t_stop_ns;
    if (sweep.stop_ns <= sweep.start_ns)
      throw ParameterError("--t-stop-ns must exceed the sweep start for log spacing");
  } else if (opt.spacing == "linear") {
    sweep.spacing = SweepSpec::Spacing::linear;
    sweep.start_ns = tau_swept ? opt.tau_start_ns : opt.t_start_ns;
    sweep.step_ns = tau_swept ? opt.dtau_ns : opt.dt_ns;
  } else {
    throw ParameterError("--spacing must be linear or log");
  }

  RelaxationTimes relax;
  relax.t1_us = opt.t1_us;
  relax.t2_us = opt.t2_us;
  if (opt.ts_us > 0.0) {
    relax.spectral_diffusion_time_Ts_us = opt.ts_us;
    relax.spectral_diffusion_weight = opt.sd_weight;
  } else if (opt.sd_weight > 0.0) {
    throw ParameterError("--sd-weight requires --ts-us");
  }
  relax.validate();

  EnsembleSpec ensemble;
  ensemble.count = opt.isochromats;
  ensemble.offset_sigma_MHz = opt.offset_sigma_mhz;
  ensemble.seed = global.seed;

  SimOptions sim;
  sim.threads = opt.threads;

  ComplexTrace trace = simulate_sweep(sequence, sweep, ensemble, relax, sim);

  if (!opt.modulate.empty()) {
    if (opt.b0_t <= 0.0)
      throw ParameterError("--modulate requires --b0-t (field for the Larmor ladder)");
    const IsotopeTable table = load_isotopes(global);
    const auto mods = parse_modulations(opt.modulate, table);
    trace = eseem_modulate(trace, mods, opt.b0_t, kind);
  }
  if (opt.noise_sigma > 0.0) trace = add_noise(trace, opt.noise_sigma, global.seed + 1);

  ResolvedConfig config;
  config.set("kind", opt.kind);
  if (kind == SequenceKind::cpmg) {
    config.set("n", opt.n);
    config.set("phase_cycle", seq_opts.eseem_detection
                                  ? (auto_detect_cycle && !opt.eseem_detect
                                         ? "first_pulse_2step (auto, n >= 9)"
                                         : "first_pulse_2step")
                                  : "complete_2^(n+1)");
  }
  config.set("points", opt.points);
  config.set("spacing", opt.spacing);
  if (tau_swept) {
    config.set("tau_start_ns", sweep.start_ns);
    if (sweep.spacing == SweepSpec::Spacing::linear) config.set("dtau_ns", sweep.step_ns);
  } else {
    config.set("t_start_ns", sweep.start_ns);
    if (sweep.spacing == SweepSpec::Spacing::linear) config.set("dt_ns", sweep.step_ns);
    config.set("tau_ns", opt.tau_ns);
  }
  if (sweep.spacing == SweepSpec::Spacing::geometric)
    config.set("t_stop_ns", sweep.stop_ns);
  config.set("dead_time_ns", opt.dead_time_ns);
  config.set("window_ns", opt.window_ns);
  config.set("t1_us", opt.t1_us);
  config.set("t2_us", opt.t2_us);
  if (opt.ts_us > 0.0) {
    config.set("ts_us", opt.ts_us);
    config.set("sd_weight", opt.sd_weight);
  }
  config.set("isochromats", opt.isochromats);
  config.set("offset_sigma_mhz", opt.offset_sigma_mhz);
  config.set("seed", global.seed);
  config.set("noise_sigma", opt.noise_sigma);
  if (!opt.modulate.empty()) {
    config.set("b0_t", opt.b0_t);
    std::string joined;
    for (const auto& m : opt.modulate) joined += (joined.empty() ? "" : ";") + m;
    config.set("modulate", joined);
  }
  config.set("time_axis", "total_evolution_time");

  const fs::path dir = ensure_out_dir(global);
  csv::write_trace((dir / "trace.csv").string(), trace, config.header("simulate"));
  config.write_sidecar(dir, "simulate");
  if (global.verbose)
    std::cerr << "wrote " << (dir / "trace.csv").string() << " (" << trace.size()
              << " rows)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitCmdOptions {
  std::string input;
  std::string model;
  std::string time_scale = "direct";
  int n = 1;
  std::string column = "real";
  double t1_us = 0.0;  // optional consistency reference
};

int run_fit(const GlobalOptions& global, const FitCmdOptions& opt) {
  const ComplexTrace raw = csv::read_trace(opt.input);
  const TimeTrace data = select_channel(raw, opt.column);

  ResolvedConfig config;
  config.set("input", opt.input);
  config.set("model", opt.model);
  config.set("column", opt.column);
  config.set("seed", global.seed);

  const fs::path dir = ensure_out_dir(global);
  std::vector<std::string> extra;

  FitResult fit;
  std::function<double(double)> model_fn;
  if (opt.model == "monoexp") {
    DecayAxis axis = DecayAxis::direct();
    if (opt.time_scale == "2tau") axis = DecayAxis::hahn();
    else if (opt.time_scale == "2ntau") axis = DecayAxis::cpmg(opt.n);
    else if (opt.time_scale != "direct")
      throw ParameterError("--time-scale must be 2tau, 2ntau, or direct");
    config.set("time_scale", axis.label());

    fit = fit_monoexp(data, axis);
    const double a = fit.at("A").value;
    const double tm = fit.at("T_m").value;
    const double i0 = fit.at("I_0").value;
    model_fn = [=](double t) { return a * std::exp(-t / tm) + i0; };

    if (opt.t1_us > 0.0) {
      const double tm_us = tm * 1e-3;
      config.set("t1_reference_us", opt.t1_us);
      if (tm_us > 2.0 * opt.t1_us)
        extra.push_back("consistency: WARNING T_m exceeds 2*T1 (" +
                        csv::format_double(tm_us) + " us vs 2*" +
                        csv::format_double(opt.t1_us) + " us)");
      else
        extra.push_back("consistency: T_m within the 2*T1 ceiling");
    }
  } else if (opt.model == "biexp") {
    fit = fit_biexp(data);
    const double as = fit.at("A_s").value;
    const double ts = fit.at("T_s").value;
    const double a = fit.at("A").value;
    const double t1 = fit.at("T_1").value;
    const double i0 = fit.at("I_0").value;
    model_fn = [=](double t) {
      return as * std::exp(-t / ts) + a * std::exp(-t / t1) + i0;
    };
  } else {
    throw ParameterError("--model must be monoexp or biexp");
  }

  write_fit_outputs(dir, fit, data, config, "fit", model_fn, extra);
  config.write_sidecar(dir, "fit");

  std::cout << "model " << fit.model_id << ":";
  for (const auto& name : fit.parameter_names)
    std::cout << ' ' << name << '=' << csv::format_double(fit.at(name).value);
  for (const auto& w : fit.warnings) std::cout << " [" << w << "]";
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// relaxmap
// ---------------------------------------------------------------------------

struct RelaxmapOptions {
  std::string input;
  double debye_temperature_k = 0.0;
  double wavenumber_cm = 1610.0;
  bool wavenumber_explicit = false;
};

int run_relaxmap(const GlobalOptions& global, const RelaxmapOptions& opt) {
  if (opt.debye_temperature_k <= 0.0)
    throw ParameterError("--debye-temperature-k must be positive");
  const auto series = csv::read_temperature_series(opt.input);
  std::vector<RatePoint> points;
  for (std::size_t i = 0; i < series.temperature_K.size(); ++i)
    points.push_back({series.temperature_K[i], series.value[i]});

  const FitResult fit =
      fit_relaxation_prefactors(points, opt.debye_temperature_k, opt.wavenumber_cm);
  const RelaxationParams params{fit.at("A_Ram").value, fit.at("A_Loc").value,
                                opt.debye_temperature_k, opt.wavenumber_cm};

  double t_lo = points.front().temperature_K;
  double t_hi = points.front().temperature_K;
  for (const auto& p : points) {
    t_lo = std::min(t_lo, p.temperature_K);
    t_hi = std::max(t_hi, p.temperature_K);
  }
  const auto crossover = channel_crossover_temperature(params, t_lo, t_hi);
  const Estimate exponent = powerlaw_exponent(points);

  ResolvedConfig config;
  config.set("input", opt.input);
  config.set("debye_temperature_k", opt.debye_temperature_k);
  config.set("wavenumber_cm", opt.wavenumber_cm);
  config.set("wavenumber_source",
             opt.wavenumber_explicit ? "user" : "default C-C stretch (inferred)");
  config.set("seed", global.seed);
  const auto header = config.header("relaxmap");
  const fs::path dir = ensure_out_dir(global);

  {
    std::ofstream out(dir / "relaxmap_parameters.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "parameter,value,sigma\n";
    for (const auto& name : fit.parameter_names)
      out << name << ',' << csv::format_double(fit.at(name).value) << ','
          << csv::format_double(fit.at(name).sigma) << "\n";
    out << "exponent," << csv::format_double(exponent.value) << ','
        << csv::format_double(exponent.sigma) << "\n";
  }
  {
    std::ofstream out(dir / "relaxmap_decomposition.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "temperature_K,measured_rate,total_rate,raman_rate,local_mode_rate,"
           "local_exponent\n";
    auto sorted = points;
    std::sort(sorted.begin(), sorted.end(),
              [](const RatePoint& a, const RatePoint& b) {
                return a.temperature_K < b.temperature_K;
              });
    for (const auto& p : sorted) {
      const double total = relaxation_rate(p.temperature_K, params);
      const double raman = raman_rate(p.temperature_K, params);
      const double local = local_mode_rate(p.temperature_K, params);
      // centered log-log slope of the fitted law
      const double h = 1e-3 * p.temperature_K;
      const double slope =
          (std::log(relaxation_rate(p.temperature_K + h, params)) -
           std::log(relaxation_rate(p.temperature_K - h, params))) /
          (std::log(p.temperature_K + h) - std::log(p.temperature_K - h));
      out << csv::format_double(p.temperature_K) << ',' << csv::format_double(p.rate)
          << ',' << csv::format_double(total) << ',' << csv::format_double(raman)
          << ',' << csv::format_double(local) << ',' << csv::format_double(slope)
          << "\n";
    }
  }
  {
    std::ofstream out(dir / "relaxmap_report.txt", std::ios::binary);
    for (const auto& line : header) out << "# " << line << "\n";
    out << "A_Ram = " << format_estimate(fit.at("A_Ram")) << " 1/s\n";
    out << "A_Loc = " << format_estimate(fit.at("A_Loc")) << " 1/s\n";
    out << "log-log exponent = " << format_estimate(exponent) << "\n";
    if (crossover)
      out << "channel crossover temperature = " << csv::format_double(*crossover)
          << " K (raman dominates below, local mode above)\n";
    else
      out << "channel crossover temperature = none within the data range\n";
    if (!opt.wavenumber_explicit)
      out << "note: mode wavenumber defaulted to 1610 1/cm (C-C stretch); pass "
             "--wavenumber-cm to override\n";
    if (!fit.warnings.empty()) {
      out << "warnings:\n";
      for (const auto& w : fit.warnings) out << "  " << w << "\n";
    }
  }
  config.write_sidecar(dir, "relaxmap");

  std::cout << "A_Ram=" << csv::format_double(fit.at("A_Ram").value)
            << " A_Loc=" << csv::format_double(fit.at("A_Loc").value)
            << " exponent=" << csv::format_double(exponent.value);
  if (crossover) std::cout << " crossover_K=" << csv::format_double(*crossover);
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// debye
// ---------------------------------------------------------------------------

struct DebyeCmdOptions {
  std::string input;
  int dimensionality = 0;
  double cutoff_k = 8.0;
};

int run_debye(const GlobalOptions& global, const DebyeCmdOptions& opt) {
  if (opt.dimensionality != 2 && opt.dimensionality != 3)
    throw ParameterError("--dimensionality must be 2 or 3");
  const auto series = csv::read_temperature_series(opt.input);
  std::vector<HeatCapacityPoint> all;
  std::vector<HeatCapacityPoint> kept;
  for (std::size_t i = 0; i < series.temperature_K.size(); ++i)
    all.push_back({series.temperature_K[i], series.value[i]});
  for (const auto& p : all)
    if (p.temperature_K < opt.cutoff_k) kept.push_back(p);
  if (kept.empty()) throw DataError("no points below the cutoff temperature");

  const FitResult fit = fit_debye(kept, opt.dimensionality, opt.cutoff_k);
  const int other_dim = opt.dimensionality == 2 ? 3 : 2;
  const FitResult alt = fit_debye(kept, other_dim, opt.cutoff_k);

  ResolvedConfig config;
  config.set("input", opt.input);
  config.set("dimensionality", opt.dimensionality);
  config.set("cutoff_k", opt.cutoff_k);
  config.set("points_total", static_cast<int>(all.size()));
  config.set("points_below_cutoff", static_cast<int>(kept.size()));
  config.set("seed", global.seed);
  const auto header = config.header("debye");
  const fs::path dir = ensure_out_dir(global);

  const double td = fit.at("T_D").value;
  const DebyeModel model{td, opt.dimensionality};
  {
    std::ofstream out(dir / "debye_parameters.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "parameter,value,sigma\n";
    out << "T_D," << csv::format_double(td) << ','
        << csv::format_double(fit.at("T_D").sigma) << "\n";
  }
  {
    std::ofstream out(dir / "debye_curve.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "temperature_K,value\n";
    const int samples = 100;
    for (int i = 1; i <= samples; ++i) {
      const double t = opt.cutoff_k * i / samples;
      out << csv::format_double(t) << ',' << csv::format_double(debye_cp(t, model))
          << "\n";
    }
  }
  {
    std::ofstream out(dir / "debye_report.txt", std::ios::binary);
    for (const auto& line : header) out << "# " << line << "\n";
    out << "T_D = " << format_estimate(fit.at("T_D")) << " K\n";
    out << "residual_norm = " << csv::format_double(fit.residual_norm) << "\n";
    out << "residual_norm_other_dimensionality = "
        << csv::format_double(alt.residual_norm) << " (d=" << other_dim << ")\n";
    if (fit.residual_norm > 10.0 * std::max(alt.residual_norm, 1e-300))
      out << "warning: the d=" << other_dim
          << " model fits at least 10x better; check the dimensionality\n";
    if (all.size() != kept.size())
      out << "note: " << all.size() - kept.size()
          << " points at/above the cutoff were excluded from the fit\n";
  }
  config.write_sidecar(dir, "debye");

  std::cout << "T_D=" << csv::format_double(td) << " K (sigma "
            << csv::format_double(fit.at("T_D").sigma) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eseem
// ---------------------------------------------------------------------------

struct EseemCmdOptions {
  std::string input;
  double b0_t = 0.0;
  int degree = 3;
  int zero_fill = 4;
  double prominence = 0.05;
  double tolerance_mhz = 0.3;
  int n_max = 4;
  double min_freq_mhz = 2.0;
  std::string column = "real";
  bool normalize_1h = true;
};

int run_eseem(const GlobalOptions& global, const EseemCmdOptions& opt) {
  const ComplexTrace raw = csv::read_trace(opt.input);
  const TimeTrace data = select_channel(raw, opt.column);
  const IsotopeTable table = load_isotopes(global);

  EseemConfig config;
  config.background_degree = opt.degree;
  config.zero_fill_factor = opt.zero_fill;
  config.prominence = opt.prominence;
  config.tolerance_MHz = opt.tolerance_mhz;
  config.n_max = opt.n_max;
  config.min_frequency_MHz = opt.min_freq_mhz;
  config.b0_T = opt.b0_t;

  auto [spectrum, result] = process_eseem(data, config, table);
  if (!opt.normalize_1h) {
    spectrum.normalization_anchor_MHz.reset();
    for (auto& a : result.assignments) a.normalized_frequency.reset();
  }

  ResolvedConfig resolved;
  resolved.set("input", opt.input);
  resolved.set("column", opt.column);
  resolved.set("b0_t", opt.b0_t);
  resolved.set("background_degree", opt.degree);
  resolved.set("zero_fill_factor", opt.zero_fill);
  resolved.set("prominence", opt.prominence);
  resolved.set("tolerance_mhz", opt.tolerance_mhz);
  resolved.set("n_max", opt.n_max);
  resolved.set("min_frequency_mhz", opt.min_freq_mhz);
  resolved.set("normalize_1h", opt.normalize_1h);
  resolved.set("seed", global.seed);
  const auto header = resolved.header("eseem");
  const fs::path dir = ensure_out_dir(global);

  {
    std::ofstream out(dir / "spectrum.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "frequency_MHz,magnitude,normalized_frequency\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      out << csv::format_double(spectrum.frequencies_MHz[i]) << ','
          << csv::format_double(spectrum.magnitudes[i]) << ',';
      if (spectrum.normalization_anchor_MHz)
        out << csv::format_double(spectrum.frequencies_MHz[i] /
                                  *spectrum.normalization_anchor_MHz);
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "assignments.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "nucleus,harmonic,frequency_MHz,deviation_MHz,magnitude,ambiguous,"
           "normalized_frequency\n";
    for (const auto& a : result.assignments) {
      out << a.nucleus << ',' << a.harmonic << ','
          << csv::format_double(a.frequency_MHz) << ','
          << csv::format_double(a.deviation_MHz) << ','
          << csv::format_double(a.magnitude) << ',' << (a.ambiguous ? 1 : 0) << ',';
      if (a.normalized_frequency) out << csv::format_double(*a.normalized_frequency);
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "unassigned_peaks.csv", std::ios::binary);
    csv::write_lines(out, header);
    out << "frequency_MHz,magnitude\n";
    for (const auto& [freq, mag] : result.unassigned)
      out << csv::format_double(freq) << ',' << csv::format_double(mag) << "\n";
  }
  resolved.write_sidecar(dir, "eseem");

  std::cout << result.assignments.size() << " assignments, "
            << result.unassigned.size() << " unassigned peaks\n";
  return 0;
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

struct IdentifyOptions {
  double b0_t = 0.0;
  int n_max = 4;
  std::vector<double> freqs;
  double tolerance_mhz = 0.3;
};

int run_identify(const GlobalOptions& global, const IdentifyOptions& opt) {
  const IsotopeTable table = load_isotopes(global);
  const NucleusSpec* proton = table.find("1H");

  ResolvedConfig resolved;
  resolved.set("b0_t", opt.b0_t);
  resolved.set("n_max", opt.n_max);
  resolved.set("tolerance_mhz", opt.tolerance_mhz);
  const fs::path dir = ensure_out_dir(global);

  if (opt.freqs.empty()) {
    std::cout << "nucleus,harmonic,frequency_MHz";
    if (proton) std::cout << ",normalized_to_1H";
    std::cout << "\n";
    for (const auto& nucleus : table.entries()) {
      for (const auto& [n, f] : larmor_ladder(nucleus, opt.b0_t, opt.n_max)) {
        std::cout << nucleus.label << ',' << n << ',' << csv::format_double(f);
        if (proton)
          std::cout << ',' << csv::format_double(f / proton->larmor_MHz(opt.b0_t));
        std::cout << "\n";
      }
    }
  } else {
    std::vector<std::pair<double, double>> peaks;
    for (double f : opt.freqs) peaks.emplace_back(f, 1.0);
    const auto result =
        assign_nuclei(peaks, opt.b0_t, table, opt.n_max, opt.tolerance_mhz);
    std::cout << "nucleus,harmonic,frequency_MHz,deviation_MHz,ambiguous\n";
    for (const auto& a : result.assignments)
      std::cout << a.nucleus << ',' << a.harmonic << ','
                << csv::format_double(a.frequency_MHz) << ','
                << csv::format_double(a.deviation_MHz) << ',' << (a.ambiguous ? 1 : 0)
                << "\n";
    for (const auto& [freq, mag] : result.unassigned)
      std::cout << "unassigned,," << csv::format_double(freq) << ",,\n";
  }
  resolved.write_sidecar(dir, "identify");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinbench: pulse-EPR simulation and relaxometry workbench"};
  app.require_subcommand(1);
  app.set_config("--config");
  app.allow_config_extras(false);  // unknown config keys are an error

  GlobalOptions global;
  app.add_option("--out", global.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", global.seed, "Deterministic seed")->capture_default_str();
  app.add_flag("--verbose", global.verbose, "Chatty progress output");
  app.add_option("--isotopes", global.isotope_path, "Isotope table file");

  SimulateOptions sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate pulse-sequence sweep traces");
  simulate->fallthrough();
  simulate->add_option("--kind", sim.kind,
                       "hahn|cpmg|inversion_recovery|three_pulse_eseem")
      ->required();
  simulate->add_option("--n", sim.n, "CPMG order")->capture_default_str();
  simulate->add_option("--points", sim.points, "Sweep points")->capture_default_str();
  simulate->add_option("--tau-start-ns", sim.tau_start_ns)->capture_default_str();
  simulate->add_option("--dtau-ns", sim.dtau_ns)->capture_default_str();
  simulate->add_option("--t-start-ns", sim.t_start_ns)->capture_default_str();
  simulate->add_option("--dt-ns", sim.dt_ns)->capture_default_str();
  simulate->add_option("--t-stop-ns", sim.t_stop_ns, "End of a log-spaced sweep");
  simulate->add_option("--spacing", sim.spacing, "linear|log")->capture_default_str();
  simulate->add_option("--tau-ns", sim.tau_ns, "Fixed tau (IR / 3-pulse)")
      ->capture_default_str();
  simulate->add_option("--dead-time-ns", sim.dead_time_ns)->capture_default_str();
  simulate->add_option("--window-ns", sim.window_ns)->capture_default_str();
  simulate->add_option("--t1-us", sim.t1_us)->capture_default_str();
  simulate->add_option("--t2-us", sim.t2_us)->capture_default_str();
  simulate->add_option("--ts-us", sim.ts_us, "Spectral-diffusion time constant");
  simulate->add_option("--sd-weight", sim.sd_weight, "Spectral-diffusion weight");
  simulate->add_option("--isochromats", sim.isochromats)->capture_default_str();
  simulate->add_option("--offset-sigma-mhz", sim.offset_sigma_mhz)
      ->capture_default_str();
  simulate->add_flag("--eseem-detect", sim.eseem_detect,
                     "CPMG: two-step first-pulse phase cycle");
  simulate->add_option("--b0-t", sim.b0_t, "Field for nuclear modulation");
  simulate->add_option("--modulate", sim.modulate,
                       "label:depth[:multiplicity], repeatable");
  simulate->add_option("--noise-sigma", sim.noise_sigma)->capture_default_str();
  simulate->add_option("--threads", sim.threads, "0 = hardware concurrency");

  FitCmdOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit decay models to a trace CSV");
  fit_cmd->fallthrough();
  fit_cmd->add_option("--in", fit.input, "Input trace CSV")->required();
  fit_cmd->add_option("--model", fit.model, "monoexp|biexp")->required();
  fit_cmd->add_option("--time-scale", fit.time_scale, "2tau|2ntau|direct")
      ->capture_default_str();
  fit_cmd->add_option("--n", fit.n, "CPMG order for 2ntau")->capture_default_str();
  fit_cmd->add_option("--column", fit.column, "real|imag|mag")->capture_default_str();
  fit_cmd->add_option("--t1-us", fit.t1_us, "Reference T1 for the 2*T1 ceiling check");

  RelaxmapOptions relaxmap;
  CLI::App* relaxmap_cmd =
      app.add_subcommand("relaxmap", "Fit the two-channel rate law and decompose it");
  relaxmap_cmd->fallthrough();
  relaxmap_cmd->add_option("--in", relaxmap.input, "Rate CSV (temperature_K,value)")
      ->required();
  relaxmap_cmd->add_option("--debye-temperature-k", relaxmap.debye_temperature_k)
      ->required();
  auto* wn_opt = relaxmap_cmd->add_option("--wavenumber-cm", relaxmap.wavenumber_cm)
                     ->capture_default_str();

  DebyeCmdOptions debye;
  CLI::App* debye_cmd =
      app.add_subcommand("debye", "Fit the Debye temperature to heat-capacity data");
  debye_cmd->fallthrough();
  debye_cmd->add_option("--in", debye.input, "Heat-capacity CSV (temperature_K,value)")
      ->required();
  debye_cmd->add_option("--dimensionality", debye.dimensionality, "2|3")->required();
  debye_cmd->add_option("--cutoff-k", debye.cutoff_k)->capture_default_str();

  EseemCmdOptions eseem;
  CLI::App* eseem_cmd =
      app.add_subcommand("eseem", "Time-domain to frequency-domain pipeline");
  eseem_cmd->fallthrough();
  eseem_cmd->add_option("--in", eseem.input, "Input trace CSV")->required();
  eseem_cmd->add_option("--b0-t", eseem.b0_t, "Static field in tesla")->required();
  eseem_cmd->add_option("--degree", eseem.degree)->capture_default_str();
  eseem_cmd->add_option("--zero-fill", eseem.zero_fill)->capture_default_str();
  eseem_cmd->add_option("--prominence", eseem.prominence)->capture_default_str();
  eseem_cmd->add_option("--tolerance-mhz", eseem.tolerance_mhz)->capture_default_str();
  eseem_cmd->add_option("--n-max", eseem.n_max)->capture_default_str();
  eseem_cmd->add_option("--min-freq-mhz", eseem.min_freq_mhz)->capture_default_str();
  eseem_cmd->add_option("--column", eseem.column)->capture_default_str();
  eseem_cmd->add_flag("--normalize-1H,!--no-normalize-1H", eseem.normalize_1h,
                      "Normalize frequencies to the proton fundamental");

  IdentifyOptions identify;
  CLI::App* identify_cmd = app.add_subcommand("identify", "Larmor-ladder lookup");
  identify_cmd->fallthrough();
  identify_cmd->add_option("--b0-t", identify.b0_t, "Static field in tesla")->required();
  identify_cmd->add_option("--n-max", identify.n_max)->capture_default_str();
  identify_cmd->add_option("--freq", identify.freqs, "Peak frequency in MHz, repeatable");
  identify_cmd->add_option("--tolerance-mhz", identify.tolerance_mhz)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return kExitUsage;
  }

  try {
    relaxmap.wavenumber_explicit = wn_opt->count() > 0;
    if (simulate->parsed()) return run_simulate(global, sim);
    if (fit_cmd->parsed()) return run_fit(global, fit);
    if (relaxmap_cmd->parsed()) return run_relaxmap(global, relaxmap);
    if (debye_cmd->parsed()) return run_debye(global, debye);
    if (eseem_cmd->parsed()) return run_eseem(global, eseem);
    if (identify_cmd->parsed()) return run_identify(global, identify);
    std::cerr << app.help() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
