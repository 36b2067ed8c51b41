#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "spinbench/errors.hpp"

namespace spinbench {

struct PulseEvent {
  double flip_angle_deg = 90.0;
  double phase_deg = 0.0;
};

/// Fixed delay when `tag` is empty; otherwise bound later to
/// multiplier · (swept value).
struct DelayEvent {
  double duration_ns = -1.0;  // negative = unbound
  std::string tag;
  double multiplier = 1.0;

  bool bound() const { return duration_ns >= 0.0; }
};

struct AcquireEvent {
  double integration_window_ns = 32.0;  // full width, centered on the echo
};

using SequenceEvent = std::variant<PulseEvent, DelayEvent, AcquireEvent>;

/// Ordered pulse/delay/acquire program. Exactly one Acquire, as the final
/// event; all delays must be bound before execution.
struct SequenceProgram {
  std::vector<SequenceEvent> events;

  int pulse_count() const {
    int n = 0;
    for (const auto& ev : events)
      if (std::holds_alternative<PulseEvent>(ev)) ++n;
    return n;
  }

  void bind(const std::string& tag, double value_ns) {
    if (value_ns < 0.0) throw ProgramError("bind: negative delay value");
    for (auto& ev : events)
      if (auto* d = std::get_if<DelayEvent>(&ev); d && d->tag == tag)
        d->duration_ns = d->multiplier * value_ns;
  }

  void validate() const {
    int acquires = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (std::holds_alternative<AcquireEvent>(events[i])) {
        ++acquires;
        if (i + 1 != events.size())
          throw ProgramError("SequenceProgram: acquire must be the final event");
      } else if (const auto* d = std::get_if<DelayEvent>(&events[i])) {
        if (!d->bound())
          throw ProgramError("SequenceProgram: unbound delay '" + d->tag + "'");
      }
    }
    if (acquires != 1)
      throw ProgramError("SequenceProgram: exactly one acquire event required");
  }

  const AcquireEvent& acquire() const {
    for (const auto& ev : events)
      if (const auto* a = std::get_if<AcquireEvent>(&ev)) return *a;
    throw ProgramError("SequenceProgram: no acquire event");
  }

  /// Duration of the delay immediately preceding the acquire event.
  double final_delay_ns() const {
    if (events.size() < 2) throw ProgramError("SequenceProgram: too short");
    const auto* d = std::get_if<DelayEvent>(&events[events.size() - 2]);
    if (!d || !d->bound())
      throw ProgramError("SequenceProgram: acquire must follow a bound delay");
    return d->duration_ns;
  }
};

/// One phase-cycle step: absolute pulse phases plus the receiver sign.
struct CycleStep {
  std::vector<double> phases_deg;
  double receiver_sign = 1.0;
};

struct PhaseCycle {
  std::vector<CycleStep> steps;

  void validate(const SequenceProgram& program) const {
    if (steps.empty()) throw ProgramError("PhaseCycle: at least one step required");
    const std::size_t pulses = static_cast<std::size_t>(program.pulse_count());
    for (const auto& step : steps)
      if (step.phases_deg.size() != pulses)
        throw ProgramError("PhaseCycle: phase list length must match pulse count");
  }

  /// Trivial single-step cycle using the program's own phases.
  static PhaseCycle none(const SequenceProgram& program) {
    CycleStep step;
    for (const auto& ev : program.events)
      if (const auto* p = std::get_if<PulseEvent>(&ev))
        step.phases_deg.push_back(p->phase_deg);
    step.receiver_sign = 1.0;
    return {{step}};
  }
};

enum class SequenceKind { inversion_recovery, hahn, cpmg, three_pulse_eseem };

inline std::string to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::inversion_recovery: return "inversion_recovery";
    case SequenceKind::hahn: return "hahn";
    case SequenceKind::cpmg: return "cpmg";
    case SequenceKind::three_pulse_eseem: return "three_pulse_eseem";
  }
  return "unknown";
}

struct SequenceOptions {
  int cpmg_n = 1;                // CPMG order
  double tau_ns = 150.0;         // fixed τ for inversion recovery / 3-pulse
  double dead_time_ns = 150.0;   // floor on swept τ
  double window_ns = 32.0;       // acquire integration window
  bool eseem_detection = false;  // CPMG: cycle only the first pulse (2 steps)
};

/// A canonical program, its default phase cycle, and the bookkeeping the
/// simulator and tests need: the swept-delay tag, the desired
/// coherence-class per inter-pulse segment (0 longitudinal, 1 transverse),
/// and the mapping from swept delay to total evolution time.
struct Sequence {
  SequenceKind kind = SequenceKind::hahn;
  SequenceProgram program;
  PhaseCycle cycle;
  std::string sweep_tag;
  std::vector<int> desired_pathway;
  int cpmg_n = 1;
  double dead_time_ns = 150.0;

  /// Total evolution time of the detected echo for a swept value
  /// (2τ Hahn, 2nτ CPMG, T for inversion recovery / 3-pulse).
  double evolution_time_ns(double swept_ns) const {
    switch (kind) {
      case SequenceKind::hahn: return 2.0 * swept_ns;
      case SequenceKind::cpmg: return 2.0 * cpmg_n * swept_ns;
      default: return swept_ns;
    }
  }

  void bind_sweep(double value_ns) {
    if (sweep_tag == "tau" && value_ns < dead_time_ns)
      throw ParameterError("tau below the instrument dead time of " +
                           std::to_string(dead_time_ns) + " ns");
    if (value_ns < 0.0) throw ParameterError("negative sweep delay");
    program.bind(sweep_tag, value_ns);
  }
};

/// Build the canonical program and default phase cycle for a sequence kind:
///   inversion recovery  π − T − π/2 − τ − π − τ − echo, 4-step cycle
///   hahn                π/2 − τ − π − τ − echo, 2-step cycle
///   cpmg(n)             π/2_x − (τ − π_y − τ)_n − echo, 2^{n+1}-step cycle
///                       (or 2-step first-pulse cycling for ESEEM detection)
///   three_pulse_eseem   π/2 − τ − π/2 − T − π/2 − τ − echo, 2-step cycle
inline Sequence make_sequence(SequenceKind kind, const SequenceOptions& opts = {}) {
  if (opts.window_ns <= 0.0) throw ParameterError("make_sequence: window must be positive");
  if (opts.dead_time_ns < 0.0) throw ParameterError("make_sequence: negative dead time");

  Sequence seq;
  seq.kind = kind;
  seq.cpmg_n = opts.cpmg_n;
  seq.dead_time_ns = opts.dead_time_ns;
  auto& ev = seq.program.events;

  const auto fixed_tau = [&]() {
    if (opts.tau_ns < opts.dead_time_ns)
      throw ParameterError("make_sequence: tau below the dead time");
    return opts.tau_ns;
  };

  switch (kind) {
    case SequenceKind::hahn: {
      ev.push_back(PulseEvent{90.0, 0.0});
      ev.push_back(DelayEvent{-1.0, "tau", 1.0});
      ev.push_back(PulseEvent{180.0, 0.0});
      ev.push_back(DelayEvent{-1.0, "tau", 1.0});
      ev.push_back(AcquireEvent{opts.window_ns});
      seq.sweep_tag = "tau";
      seq.desired_pathway = {1, 1};
      seq.cycle.steps = {{{0.0, 0.0}, +1.0}, {{180.0, 0.0}, -1.0}};
      break;
    }
    case SequenceKind::inversion_recovery: {
      const double tau = fixed_tau();
      ev.push_back(PulseEvent{180.0, 0.0});
      ev.push_back(DelayEvent{-1.0, "T", 1.0});
      ev.push_back(PulseEvent{90.0, 0.0});
      ev.push_back(DelayEvent{tau, "", 1.0});
      ev.push_back(PulseEvent{180.0, 0.0});
      ev.push_back(DelayEvent{tau, "", 1.0});
      ev.push_back(AcquireEvent{opts.window_ns});
      seq.sweep_tag = "T";
      seq.desired_pathway = {0, 1, 1};
      // Pulse phases (π, π/2, π) per step; receiver follows the π/2 phase.
      seq.cycle.steps = {{{0.0, 180.0, 0.0}, -1.0},
                         {{0.0, 0.0, 0.0}, +1.0},
                         {{180.0, 180.0, 0.0}, -1.0},
                         {{180.0, 0.0, 0.0}, +1.0}};
      break;
    }
    case SequenceKind::cpmg: {
      const int n = opts.cpmg_n;
      if (n < 1) throw ParameterError("make_sequence: CPMG order must be >= 1");
      ev.push_back(PulseEvent{90.0, 0.0});
      for (int k = 0; k < n; ++k) {
        ev.push_back(DelayEvent{-1.0, "tau", 1.0});
        ev.push_back(PulseEvent{180.0, 90.0});
        ev.push_back(DelayEvent{-1.0, "tau", 1.0});
      }
      ev.push_back(AcquireEvent{opts.window_ns});
      seq.sweep_tag = "tau";
      seq.desired_pathway.assign(static_cast<std::size_t>(n) + 1, 1);

      const int pulses = n + 1;
      if (opts.eseem_detection) {
        CycleStep a, b;
        a.phases_deg.assign(pulses, 90.0);
        a.phases_deg[0] = 0.0;
        a.receiver_sign = +1.0;
        b = a;
        b.phases_deg[0] = 180.0;
        b.receiver_sign = -1.0;
        seq.cycle.steps = {a, b};
      } else {
        // Complete cycling: every pulse phase toggled by 180°. The desired
        // pathway transfers by Δp = ±2 through each π pulse, so only the
        // first-pulse toggle flips the echo and sets the receiver sign.
        if (n + 1 > 20) throw ParameterError("make_sequence: phase cycle too large");
        const std::uint32_t steps = 1u << pulses;
        for (std::uint32_t s = 0; s < steps; ++s) {
          CycleStep step;
          step.phases_deg.resize(pulses);
          step.phases_deg[0] = (s & 1u) ? 180.0 : 0.0;
          for (int j = 1; j < pulses; ++j)
            step.phases_deg[j] = ((s >> j) & 1u) ? 270.0 : 90.0;
          step.receiver_sign = (s & 1u) ? -1.0 : +1.0;
          seq.cycle.steps.push_back(std::move(step));
        }
      }
      break;
    }
    case SequenceKind::three_pulse_eseem: {
      const double tau = fixed_tau();
      ev.push_back(PulseEvent{90.0, 0.0});
      ev.push_back(DelayEvent{tau, "", 1.0});
      ev.push_back(PulseEvent{90.0, 0.0});
      ev.push_back(DelayEvent{-1.0, "T", 1.0});
      ev.push_back(PulseEvent{90.0, 0.0});
      ev.push_back(DelayEvent{tau, "", 1.0});
      ev.push_back(AcquireEvent{opts.window_ns});
      seq.sweep_tag = "T";
      seq.desired_pathway = {1, 0, 1};
      seq.cycle.steps = {{{0.0, 0.0, 0.0}, +1.0}, {{180.0, 0.0, 0.0}, -1.0}};
      break;
    }
  }

  seq.cycle.validate(seq.program);
  return seq;
}

} // namespace spinbench
