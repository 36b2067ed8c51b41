#pragma once

#include <utility>
#include <vector>

#include "spinbench/constants.hpp"
#include "spinbench/errors.hpp"
#include "spinbench/isotopes.hpp"

namespace spinbench {

/// Principal g values of an S = 1/2 radical with axial symmetry.
struct SpinSystem {
  double g_parallel = constants::free_electron_g;
  double g_perpendicular = constants::free_electron_g;
  double spin_S = 0.5;

  /// Axial average (g∥ + 2 g⊥)/3.
  double g_iso() const { return (g_parallel + 2.0 * g_perpendicular) / 3.0; }

  void validate() const {
    const auto organic = [](double g) { return g > 1.5 && g < 2.5; };
    if (!organic(g_parallel) || !organic(g_perpendicular))
      throw DomainError("SpinSystem: g values outside the organic-radical range");
    if (spin_S != 0.5) throw DomainError("SpinSystem: only S = 1/2 is supported");
  }
};

/// Static field plus microwave carrier frequency.
struct FieldPoint {
  double b0_T = 0.0;
  double mw_frequency_GHz = 0.0;

  void validate() const {
    if (b0_T <= 0.0 || mw_frequency_GHz <= 0.0)
      throw DomainError("FieldPoint requires positive field and frequency");
  }
};

/// Zeeman resonance field B = h f / (g μB)  [tesla].
inline double resonance_field(double g, double mw_frequency_GHz) {
  if (g <= 0.0 || mw_frequency_GHz <= 0.0)
    throw DomainError("resonance_field: g and frequency must be positive");
  return constants::planck_h * mw_frequency_GHz * 1e9 /
         (g * constants::bohr_magneton_muB);
}

/// Inverse of resonance_field: g = h f / (B μB).
inline double g_factor(double b0_T, double mw_frequency_GHz) {
  if (b0_T <= 0.0 || mw_frequency_GHz <= 0.0)
    throw DomainError("g_factor: field and frequency must be positive");
  return constants::planck_h * mw_frequency_GHz * 1e9 /
         (b0_T * constants::bohr_magneton_muB);
}

/// Harmonics n·|γ̄|·B0 for n = 1..n_max, ascending [MHz].
inline std::vector<std::pair<int, double>> larmor_ladder(const NucleusSpec& nucleus,
                                                         double b0_T, int n_max) {
  if (n_max < 1) throw DomainError("larmor_ladder: n_max must be at least 1");
  if (b0_T < 0.0) throw DomainError("larmor_ladder: field must be nonnegative");
  std::vector<std::pair<int, double>> ladder;
  ladder.reserve(static_cast<std::size_t>(n_max));
  const double base = nucleus.larmor_MHz(b0_T);
  for (int n = 1; n <= n_max; ++n) ladder.emplace_back(n, n * base);
  return ladder;
}

} // namespace spinbench
