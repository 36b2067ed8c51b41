#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spinbench/bloch.hpp"
#include "spinbench/errors.hpp"
#include "spinbench/isotopes.hpp"
#include "spinbench/rng.hpp"
#include "spinbench/sequence.hpp"
#include "spinbench/trace.hpp"

namespace spinbench {

/// Gaussian inhomogeneous ensemble: `count` isochromats with offsets drawn
/// from N(0, offset_sigma) by the deterministic seeded generator.
struct EnsembleSpec {
  int count = 1;
  double offset_sigma_MHz = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (count < 1) throw DomainError("EnsembleSpec: count must be >= 1");
    if (offset_sigma_MHz < 0.0) throw DomainError("EnsembleSpec: negative linewidth");
  }
};

struct SimOptions {
  int threads = 0;  // 0 = hardware concurrency
};

inline std::vector<double> make_offsets(const EnsembleSpec& ensemble) {
  ensemble.validate();
  GaussianRng rng(ensemble.seed);
  std::vector<double> offsets(static_cast<std::size_t>(ensemble.count));
  for (auto& x : offsets) x = rng.normal(0.0, ensemble.offset_sigma_MHz);
  return offsets;
}

namespace detail {

/// Decay-plus-precession rate per ns for the transverse components.
inline std::complex<double> transverse_rate_per_ns(double offset_MHz,
                                                   const RelaxationTimes& relax) {
  const double omega = 2.0 * std::numbers::pi * offset_MHz * 1e-3;  // rad/ns
  const double damp = relax.t2_us > 0.0 ? 1e-3 / relax.t2_us : 0.0;  // 1/ns
  return {-damp, omega};
}

/// ∫₀^w e^{λu} du, stable as λ → 0.
inline std::complex<double> window_integral_factor(std::complex<double> lambda,
                                                   double w_ns) {
  if (std::abs(lambda) * w_ns < 1e-8) return {w_ns, 0.0};
  return (std::exp(lambda * w_ns) - 1.0) / lambda;
}

/// Propagate one isochromat through the program with the given per-pulse
/// phases; returns the phased echo integral over the acquire window
/// (receiver convention: detected = −i · ∫ M⁺ dt, so an on-axis Hahn echo
/// is real and positive). When `pathway` is nonempty, the state is
/// projected after pulse k onto the desired coherence class
/// (0: longitudinal, 1: transverse).
inline std::complex<double> propagate_echo(const SequenceProgram& program,
                                           std::span<const double> phases_deg,
                                           double offset_MHz,
                                           const RelaxationTimes& relax,
                                           std::span<const int> pathway = {}) {
  Isochromat iso;
  iso.offset_MHz = offset_MHz;
  iso.magnetization = {0.0, 0.0, 1.0};

  const double window = program.acquire().integration_window_ns;
  const double half = 0.5 * window;
  if (program.final_delay_ns() < half)
    throw ProgramError("run_sequence: final delay shorter than half the acquire window");

  std::size_t pulse_idx = 0;
  const std::size_t n_events = program.events.size();
  for (std::size_t i = 0; i < n_events; ++i) {
    const auto& ev = program.events[i];
    if (const auto* p = std::get_if<PulseEvent>(&ev)) {
      iso = apply_pulse(iso, p->flip_angle_deg, phases_deg[pulse_idx]);
      if (!pathway.empty()) {
        if (pathway[pulse_idx] == 0) {
          iso.magnetization[0] = 0.0;
          iso.magnetization[1] = 0.0;
        } else {
          iso.magnetization[2] = 0.0;
        }
      }
      ++pulse_idx;
    } else if (const auto* d = std::get_if<DelayEvent>(&ev)) {
      // The delay feeding the acquire stops half a window early so the
      // integral runs symmetrically across the echo center.
      const bool feeds_acquire = (i + 2 == n_events);
      const double dur = feeds_acquire ? d->duration_ns - half : d->duration_ns;
      iso = free_evolve(iso, dur, relax);
    } else {
      // Window-averaged quadrature signal; a fully refocused unit echo at
      // zero offset reads exactly 1.
      const std::complex<double> mplus(iso.magnetization[0], iso.magnetization[1]);
      const auto lambda = transverse_rate_per_ns(offset_MHz, relax);
      const std::complex<double> integral =
          mplus * window_integral_factor(lambda, window) / window;
      return std::complex<double>(0.0, -1.0) * integral;
    }
  }
  throw ProgramError("run_sequence: program ended without acquire");
}

/// Deterministic parallel reduction over the (isochromat × cycle-step)
/// product space: fixed-size blocks of work items are summed internally in
/// index order and the block partials are combined in block order, so the
/// result is bit-identical for any thread count.
inline constexpr std::size_t kWorkBlock = 64;

template <typename PerItem>
std::complex<double> blocked_sum(std::size_t items, const PerItem& body, int threads) {
  const std::size_t blocks = (items + kWorkBlock - 1) / kWorkBlock;
  std::vector<std::complex<double>> partial(blocks, {0.0, 0.0});

  const auto run_block = [&](std::size_t b) {
    const std::size_t lo = b * kWorkBlock;
    const std::size_t hi = std::min(lo + kWorkBlock, items);
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = lo; i < hi; ++i) acc += body(i);
    partial[b] = acc;
  };

  int want = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  want = std::max(1, std::min<int>(want, static_cast<int>(blocks)));
  if (want == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(want));
    for (int t = 0; t < want; ++t)
      pool.emplace_back([&] {
        for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1))
          run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  std::complex<double> total{0.0, 0.0};
  for (const auto& p : partial) total += p;
  return total;
}

/// One phase-cycled ensemble average: work items enumerate
/// (isochromat, cycle step) pairs.
inline std::complex<double> cycled_ensemble_average(
    const SequenceProgram& program, const PhaseCycle& cycle,
    std::span<const double> offsets, const RelaxationTimes& relax, int threads,
    std::span<const int> pathway = {}) {
  const std::size_t steps = cycle.steps.size();
  const std::size_t items = offsets.size() * steps;
  const auto body = [&](std::size_t item) {
    const double offset = offsets[item / steps];
    const CycleStep& step = cycle.steps[item % steps];
    return step.receiver_sign *
           propagate_echo(program, step.phases_deg, offset, relax, pathway);
  };
  return blocked_sum(items, body, threads) / static_cast<double>(items);
}

} // namespace detail

/// Phase-cycled ensemble echo integral: simulate every isochromat through
/// every cycle step, weight by the receiver sign, and average over both.
inline std::complex<double> run_sequence(const SequenceProgram& program,
                                         const EnsembleSpec& ensemble,
                                         const RelaxationTimes& relax,
                                         const PhaseCycle& cycle,
                                         const SimOptions& options = {},
                                         std::span<const int> pathway = {}) {
  program.validate();
  cycle.validate(program);
  relax.validate();
  const std::vector<double> offsets = make_offsets(ensemble);
  return detail::cycled_ensemble_average(program, cycle, offsets, relax,
                                         options.threads, pathway);
}

/// Sweep grid for the sequence's variable delay: linear (start, step) or
/// geometric (start → stop), matching the varying step increments used for
/// wide recovery spans.
struct SweepSpec {
  enum class Spacing { linear, geometric };
  Spacing spacing = Spacing::linear;
  double start_ns = 150.0;
  double step_ns = 8.0;   // linear spacing
  double stop_ns = 0.0;   // geometric spacing endpoint (inclusive)
  int points = 512;

  void validate() const {
    if (points < 1) throw ParameterError("SweepSpec: need at least one point");
    if (start_ns < 0.0) throw ParameterError("SweepSpec: negative start");
    if (spacing == Spacing::linear) {
      if (step_ns <= 0.0) throw ParameterError("SweepSpec: step must be positive");
    } else {
      if (start_ns <= 0.0 || stop_ns <= start_ns || points < 2)
        throw ParameterError("SweepSpec: geometric sweep needs 0 < start < stop");
    }
  }

  std::vector<double> grid() const {
    validate();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(points));
    if (spacing == Spacing::linear) {
      for (int k = 0; k < points; ++k) values.push_back(start_ns + step_ns * k);
    } else {
      const double ratio = std::pow(stop_ns / start_ns,
                                    1.0 / static_cast<double>(points - 1));
      for (int k = 0; k < points; ++k)
        values.push_back(start_ns * std::pow(ratio, k));
    }
    return values;
  }
};

/// Sweep the sequence's variable delay and record the echo integral against
/// the total evolution time (2τ, 2nτ, or T depending on the kind).
inline ComplexTrace simulate_sweep(Sequence sequence, const SweepSpec& sweep,
                                   const EnsembleSpec& ensemble,
                                   const RelaxationTimes& relax,
                                   const SimOptions& options = {}) {
  sweep.validate();
  relax.validate();
  const std::vector<double> offsets = make_offsets(ensemble);
  const std::vector<double> sweep_values = sweep.grid();

  ComplexTrace trace;
  trace.times_ns.reserve(sweep_values.size());
  trace.values.reserve(sweep_values.size());

  for (const double swept : sweep_values) {
    sequence.bind_sweep(swept);
    sequence.program.validate();
    trace.times_ns.push_back(sequence.evolution_time_ns(swept));
    trace.values.push_back(detail::cycled_ensemble_average(
        sequence.program, sequence.cycle, offsets, relax, options.threads));
  }

  std::ostringstream meta;
  meta << "kind=" << to_string(sequence.kind);
  if (sequence.kind == SequenceKind::cpmg)
    meta << "; n=" << sequence.cpmg_n << "; detect=final_refocused_echo";
  meta << "; sweep=" << sequence.sweep_tag << "[start=" << sweep.start_ns << "ns,";
  if (sweep.spacing == SweepSpec::Spacing::linear)
    meta << "step=" << sweep.step_ns << "ns,";
  else
    meta << "stop=" << sweep.stop_ns << "ns,geometric,";
  meta << "points=" << sweep.points << "]"
       << "; axis=evolution_time"
       << "; isochromats=" << ensemble.count
       << "; offset_sigma_MHz=" << ensemble.offset_sigma_MHz
       << "; seed=" << ensemble.seed << "; t1_us=" << relax.t1_us
       << "; t2_us=" << relax.t2_us;
  if (relax.spectral_diffusion_time_Ts_us)
    meta << "; ts_us=" << *relax.spectral_diffusion_time_Ts_us
         << "; sd_weight=" << relax.spectral_diffusion_weight;
  trace.meta = meta.str();
  return trace;
}

/// Spurious-signal accounting for a flip-angle miscalibration applied to
/// every nominal-π pulse. "Spurious" is the deviation from the desired
/// coherence pathway, computed by a pathway-projected simulation with the
/// same imperfect pulses.
struct CancellationBreakdown {
  double desired_magnitude = 0.0;   // pathway-only signal
  double spurious_cycled = 0.0;     // |cycled − desired|
  double spurious_uncycled = 0.0;   // |single-step − desired|

  double ratio() const {
    // Spurious content at rounding level counts as fully cancelled.
    if (spurious_cycled <= 1e-12 * desired_magnitude) return 0.0;
    if (spurious_uncycled == 0.0) return std::numeric_limits<double>::infinity();
    return spurious_cycled / spurious_uncycled;
  }
};

inline CancellationBreakdown phase_cycle_cancellation_breakdown(
    const Sequence& sequence, double imperfection_deg, const EnsembleSpec& ensemble,
    const RelaxationTimes& relax = RelaxationTimes::none(),
    const SimOptions& options = {}) {
  if (std::abs(imperfection_deg) > 45.0)
    throw ParameterError("cancellation check: imperfection outside +-45 deg");

  Sequence imperfect = sequence;
  for (auto& ev : imperfect.program.events)
    if (auto* p = std::get_if<PulseEvent>(&ev))
      if (std::abs(p->flip_angle_deg - 180.0) < 1e-9)
        p->flip_angle_deg += imperfection_deg;

  const PhaseCycle uncycled = PhaseCycle::none(imperfect.program);

  const std::complex<double> cycled =
      run_sequence(imperfect.program, ensemble, relax, imperfect.cycle, options);
  const std::complex<double> single =
      run_sequence(imperfect.program, ensemble, relax, uncycled, options);
  const std::complex<double> desired =
      run_sequence(imperfect.program, ensemble, relax, uncycled, options,
                   imperfect.desired_pathway);

  CancellationBreakdown out;
  out.desired_magnitude = std::abs(desired);
  out.spurious_cycled = std::abs(cycled - desired);
  out.spurious_uncycled = std::abs(single - desired);
  return out;
}

/// |cycled spurious| / |uncycled spurious|.
inline double phase_cycle_cancellation_check(const Sequence& sequence,
                                             double imperfection_deg,
                                             const EnsembleSpec& ensemble,
                                             const RelaxationTimes& relax =
                                                 RelaxationTimes::none(),
                                             const SimOptions& options = {}) {
  return phase_cycle_cancellation_breakdown(sequence, imperfection_deg, ensemble,
                                            relax, options)
      .ratio();
}

/// Time-resolved echo shape around the acquire center (for inspection and
/// tests): samples the phase-cycled ensemble transverse signal on a grid of
/// offsets from the echo center.
inline std::vector<std::pair<double, std::complex<double>>> echo_waveform(
    const Sequence& sequence, const EnsembleSpec& ensemble,
    const RelaxationTimes& relax, double view_halfwidth_ns, int samples) {
  if (samples < 2) throw ParameterError("echo_waveform: need at least 2 samples");
  sequence.program.validate();
  relax.validate();
  const std::vector<double> offsets = make_offsets(ensemble);

  std::vector<std::pair<double, std::complex<double>>> shape;
  shape.reserve(static_cast<std::size_t>(samples));
  const double dt = 2.0 * view_halfwidth_ns / (samples - 1);

  // Propagate each isochromat to the start of the view, then sample forward.
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(samples), {0.0, 0.0});
  for (double offset : offsets) {
    for (const auto& step : sequence.cycle.steps) {
      Isochromat iso;
      iso.offset_MHz = offset;
      std::size_t pulse_idx = 0;
      for (std::size_t i = 0; i < sequence.program.events.size(); ++i) {
        const auto& ev = sequence.program.events[i];
        if (const auto* p = std::get_if<PulseEvent>(&ev)) {
          iso = apply_pulse(iso, p->flip_angle_deg, step.phases_deg[pulse_idx++]);
        } else if (const auto* d = std::get_if<DelayEvent>(&ev)) {
          const bool feeds_acquire = (i + 2 == sequence.program.events.size());
          const double dur =
              feeds_acquire ? d->duration_ns - view_halfwidth_ns : d->duration_ns;
          if (dur < 0.0)
            throw ProgramError("echo_waveform: view wider than the final delay");
          iso = free_evolve(iso, dur, relax);
        } else {
          for (int s = 0; s < samples; ++s) {
            const std::complex<double> mplus(iso.magnetization[0], iso.magnetization[1]);
            acc[static_cast<std::size_t>(s)] +=
                step.receiver_sign * std::complex<double>(0.0, -1.0) * mplus;
            iso = free_evolve(iso, dt, relax);
          }
        }
      }
    }
  }
  const double norm = static_cast<double>(offsets.size()) *
                      static_cast<double>(sequence.cycle.steps.size());
  for (int s = 0; s < samples; ++s)
    shape.emplace_back(-view_halfwidth_ns + dt * s, acc[static_cast<std::size_t>(s)] / norm);
  return shape;
}

/// Nuclear modulation riding on an echo-decay envelope.
struct ModulationSpec {
  NucleusSpec nucleus;
  double depth_k = 0.0;  // in [0, 1]
  int multiplicity = 1;

  void validate() const {
    if (depth_k < 0.0 || depth_k > 1.0)
      throw DomainError("ModulationSpec: depth must lie in [0,1]");
    if (multiplicity < 1) throw DomainError("ModulationSpec: multiplicity must be >= 1");
  }
};

namespace detail {

/// Weak-coupling two-pulse modulation factor at evolution time t:
/// [1 − (k/2)(1 − cos ω_I t)²]^multiplicity.
inline double modulation_factor(double t_ns, std::span<const ModulationSpec> mods,
                                double b0_T) {
  double factor = 1.0;
  for (const auto& mod : mods) {
    const double omega = 2.0 * std::numbers::pi * mod.nucleus.larmor_MHz(b0_T) * 1e-3;
    const double one_minus_cos = 1.0 - std::cos(omega * t_ns);
    const double v = 1.0 - 0.5 * mod.depth_k * one_minus_cos * one_minus_cos;
    double powed = 1.0;
    for (int j = 0; j < mod.multiplicity; ++j) powed *= v;
    factor *= powed;
  }
  return factor;
}

inline void check_modulation_kind(SequenceKind kind) {
  if (kind != SequenceKind::hahn && kind != SequenceKind::cpmg)
    throw ParameterError("eseem_modulate: supported for hahn and cpmg only");
}

} // namespace detail

/// Multiply an envelope (time axis = total evolution time) by the nuclear
/// modulation product.
inline TimeTrace eseem_modulate(const TimeTrace& envelope,
                                std::span<const ModulationSpec> mods, double b0_T,
                                SequenceKind kind) {
  detail::check_modulation_kind(kind);
  if (b0_T < 0.0) throw DomainError("eseem_modulate: negative field");
  for (const auto& mod : mods) mod.validate();
  envelope.validate();

  TimeTrace out = envelope;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] *= detail::modulation_factor(out.times_ns[i], mods, b0_T);
  if (!mods.empty()) out.meta += out.meta.empty() ? "eseem_modulated" : "; eseem_modulated";
  return out;
}

inline ComplexTrace eseem_modulate(const ComplexTrace& envelope,
                                   std::span<const ModulationSpec> mods, double b0_T,
                                   SequenceKind kind) {
  detail::check_modulation_kind(kind);
  if (b0_T < 0.0) throw DomainError("eseem_modulate: negative field");
  for (const auto& mod : mods) mod.validate();

  ComplexTrace out = envelope;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] *= detail::modulation_factor(out.times_ns[i], mods, b0_T);
  if (!mods.empty()) out.meta += out.meta.empty() ? "eseem_modulated" : "; eseem_modulated";
  return out;
}

/// Additive Gaussian noise from the deterministic generator; identical
/// (trace, sigma, seed) inputs give identical outputs.
inline TimeTrace add_noise(const TimeTrace& trace, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw DomainError("add_noise: negative sigma");
  TimeTrace out = trace;
  if (sigma == 0.0) return out;
  GaussianRng rng(seed);
  for (auto& v : out.values) v += rng.normal(0.0, sigma);
  return out;
}

/// Complex variant: independent draws on the real and imaginary channels,
/// in that order per point.
inline ComplexTrace add_noise(const ComplexTrace& trace, double sigma,
                              std::uint64_t seed) {
  if (sigma < 0.0) throw DomainError("add_noise: negative sigma");
  ComplexTrace out = trace;
  if (sigma == 0.0) return out;
  GaussianRng rng(seed);
  for (auto& v : out.values) {
    const double re = rng.normal(0.0, sigma);
    const double im = rng.normal(0.0, sigma);
    v += std::complex<double>(re, im);
  }
  return out;
}

} // namespace spinbench
