#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "spinbench/errors.hpp"

namespace spinbench {

/// Longitudinal/transverse relaxation, plus an optional phenomenological
/// spectral-diffusion channel: a second longitudinal recovery path with
/// weight `spectral_diffusion_weight` and time constant T_s < T_1.
struct RelaxationTimes {
  double t1_us = 0.0;  // 0 disables longitudinal relaxation
  double t2_us = 0.0;  // 0 disables transverse relaxation
  std::optional<double> spectral_diffusion_time_Ts_us;
  double spectral_diffusion_weight = 0.0;  // in [0, 1]

  static RelaxationTimes none() { return {}; }

  void validate() const {
    if (t1_us < 0.0 || t2_us < 0.0)
      throw DomainError("RelaxationTimes: negative time constant");
    if (t1_us > 0.0 && t2_us > 2.0 * t1_us)
      throw DomainError("RelaxationTimes: T2 must not exceed 2*T1");
    if (spectral_diffusion_weight < 0.0 || spectral_diffusion_weight > 1.0)
      throw DomainError("RelaxationTimes: weight must lie in [0,1]");
    if (spectral_diffusion_time_Ts_us) {
      if (*spectral_diffusion_time_Ts_us <= 0.0)
        throw DomainError("RelaxationTimes: T_s must be positive");
      if (t1_us > 0.0 && *spectral_diffusion_time_Ts_us >= t1_us)
        throw DomainError("RelaxationTimes: T_s must be below T1");
      // Ball invariance (|M| <= 1) needs T2 <= 2 / peak recovery rate.
      if (t2_us > 0.0 && t1_us > 0.0 && spectral_diffusion_weight > 0.0) {
        const double w = spectral_diffusion_weight;
        const double peak_rate = (1.0 - w) / t1_us + w / *spectral_diffusion_time_Ts_us;
        if (t2_us > 2.0 / peak_rate)
          throw DomainError(
              "RelaxationTimes: T2 too long for the spectral-diffusion channel");
      }
    }
  }
};

/// One resonance-offset packet: offset from the carrier plus a classical
/// magnetization vector, |M| <= 1.
struct Isochromat {
  double offset_MHz = 0.0;
  std::array<double, 3> magnetization = {0.0, 0.0, 1.0};  // (Mx, My, Mz)

  double norm() const {
    const auto& m = magnetization;
    return std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
  }
};

inline constexpr double deg2rad(double deg) {
  return deg * std::numbers::pi / 180.0;
}

/// Ideal instantaneous rotation by `flip_angle` about the transverse axis
/// (cos φ, sin φ, 0). Convention: a π/2 pulse of phase x (0°) maps +z → −y.
inline Isochromat apply_pulse(const Isochromat& state, double flip_angle_deg,
                              double phase_deg) {
  const double beta = deg2rad(flip_angle_deg);
  const double phi = deg2rad(phase_deg);
  const double nx = std::cos(phi);
  const double ny = std::sin(phi);
  const double c = std::cos(beta);
  const double s = std::sin(beta);

  const auto& m = state.magnetization;
  // Rodrigues rotation about the unit axis (nx, ny, 0).
  const double dot = nx * m[0] + ny * m[1];
  const double cx = ny * m[2];          // (n × M)_x
  const double cy = -nx * m[2];         // (n × M)_y
  const double cz = nx * m[1] - ny * m[0];

  Isochromat out = state;
  out.magnetization = {
      m[0] * c + cx * s + nx * dot * (1.0 - c),
      m[1] * c + cy * s + ny * dot * (1.0 - c),
      m[2] * c + cz * s,
  };
  return out;
}

/// Free precession about +z at 2π·offset with T2 decay of the transverse
/// components; Mz recovers toward +1, optionally through the biexponential
/// spectral-diffusion channel.
inline Isochromat free_evolve(const Isochromat& state, double duration_ns,
                              const RelaxationTimes& relax) {
  if (duration_ns < 0.0) throw DomainError("free_evolve: negative duration");
  if (duration_ns == 0.0) return state;

  const double theta = 2.0 * std::numbers::pi * state.offset_MHz * duration_ns * 1e-3;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double t_us = duration_ns * 1e-3;

  const double e2 = relax.t2_us > 0.0 ? std::exp(-t_us / relax.t2_us) : 1.0;
  double longitudinal_decay = relax.t1_us > 0.0 ? std::exp(-t_us / relax.t1_us) : 1.0;
  if (relax.spectral_diffusion_time_Ts_us && relax.spectral_diffusion_weight > 0.0) {
    const double w = relax.spectral_diffusion_weight;
    const double es = std::exp(-t_us / *relax.spectral_diffusion_time_Ts_us);
    longitudinal_decay = (1.0 - w) * longitudinal_decay + w * es;
  }

  const auto& m = state.magnetization;
  Isochromat out = state;
  out.magnetization = {
      (m[0] * c - m[1] * s) * e2,
      (m[0] * s + m[1] * c) * e2,
      1.0 - (1.0 - m[2]) * longitudinal_decay,
  };
  return out;
}

} // namespace spinbench
