#pragma once

#include <numbers>

namespace spinbench::constants {

// CODATA 2018 values, SI units unless noted.

/// h — Planck constant [J s] (exact).
inline constexpr double planck_h = 6.62607015e-34;

/// ħ — reduced Planck constant [J s].
inline constexpr double hbar = planck_h / (2.0 * std::numbers::pi);

/// k_B — Boltzmann constant [J/K] (exact).
inline constexpr double boltzmann_kB = 1.380649e-23;

/// μ_B — Bohr magneton [J/T].
inline constexpr double bohr_magneton_muB = 9.2740100783e-24;

/// N_A — Avogadro constant [1/mol] (exact).
inline constexpr double avogadro_NA = 6.02214076e23;

/// R = N_A k_B — molar gas constant [J mol⁻¹ K⁻¹].
inline constexpr double gas_constant_R = avogadro_NA * boltzmann_kB;

/// Riemann ζ(3).
inline constexpr double zeta3 = 1.2020569031595943;

/// Riemann ζ(8).
inline constexpr double zeta8 = 1.0040773561979443;

/// g_e — free-electron g-factor (dimensionless).
inline constexpr double free_electron_g = 2.00231930436256;

/// c — speed of light [cm/s], for wavenumber conversions (exact).
inline constexpr double speed_of_light_c_cm = 2.99792458e10;

/// hc/k_B [cm K]: multiply by a wavenumber in cm⁻¹ to get kelvin.
inline constexpr double wavenumber_to_kelvin =
    planck_h * speed_of_light_c_cm / boltzmann_kB;

} // namespace spinbench::constants
