#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "spinbench/constants.hpp"
#include "spinbench/errors.hpp"
#include "spinbench/fit.hpp"

namespace spinbench {

/// Low-temperature Debye model of the lattice heat capacity.
struct DebyeModel {
  double debye_temperature_TD = 0.0;  // kelvin
  int dimensionality = 3;             // 2 or 3

  void validate() const {
    if (debye_temperature_TD <= 0.0)
      throw DomainError("DebyeModel: T_D must be positive");
    if (dimensionality != 2 && dimensionality != 3)
      throw DomainError("DebyeModel: dimensionality must be 2 or 3");
  }

  /// Cutoff angular frequency ω_D = k_B T_D / ħ  [rad/s].
  double debye_angular_frequency() const {
    return constants::boltzmann_kB * debye_temperature_TD / constants::hbar;
  }
};

struct HeatCapacityPoint {
  double temperature_K = 0.0;
  double cp = 0.0;  // J mol⁻¹ K⁻¹
};

namespace detail {

/// Power-law prefactor: cp = debye_prefactor(d) · (T/T_D)^d.
inline double debye_prefactor(int dimensionality) {
  if (dimensionality == 2) return 24.0 * constants::zeta3 * constants::gas_constant_R;
  const double pi4 = std::numbers::pi * std::numbers::pi * std::numbers::pi *
                     std::numbers::pi;
  return 12.0 * pi4 / 5.0 * constants::gas_constant_R;
}

} // namespace detail

/// Low-temperature-limit heat capacity [J mol⁻¹ K⁻¹]:
/// 2D: 24 ζ(3) N_A k_B T²/T_D²; 3D: (12π⁴/5) N_A k_B T³/T_D³.
inline double debye_cp(double temperature_K, const DebyeModel& model) {
  model.validate();
  if (temperature_K < 0.0) throw DomainError("debye_cp: negative temperature");
  const double ratio = temperature_K / model.debye_temperature_TD;
  return detail::debye_prefactor(model.dimensionality) *
         std::pow(ratio, model.dimensionality);
}

/// Fit T_D to heat-capacity data in the low-temperature regime. All points
/// must lie below `cutoff_K` (default 8 K).
inline FitResult fit_debye(std::span<const HeatCapacityPoint> points,
                           int dimensionality, double cutoff_K = 8.0) {
  if (dimensionality != 2 && dimensionality != 3)
    throw DomainError("fit_debye: dimensionality must be 2 or 3");
  if (points.size() < 3)
    throw DataError("fit_debye: need at least 3 points");
  for (const auto& pt : points) {
    if (pt.temperature_K <= 0.0) throw DomainError("fit_debye: temperature must be positive");
    if (pt.cp < 0.0) throw DomainError("fit_debye: negative heat capacity");
    if (pt.temperature_K >= cutoff_K)
      throw DataError("fit_debye: point above the low-temperature cutoff");
  }

  const int d = dimensionality;
  const double k = detail::debye_prefactor(d);

  // cp = k β T^d with β = T_D^{-d} is linear in β: closed-form seed.
  double st2 = 0.0, sty = 0.0, sy = 0.0;
  for (const auto& pt : points) {
    const double td = std::pow(pt.temperature_K, d);
    st2 += td * td;
    sty += td * pt.cp;
    sy += pt.cp;
  }
  if (sy <= 0.0) throw DataError("fit_debye: all heat capacities are zero");
  const double beta = sty / (k * st2);
  if (beta <= 0.0) throw DataError("fit_debye: data incompatible with a positive T_D");
  const double td_seed = std::pow(beta, -1.0 / d);

  LeastSquaresProblem problem;
  problem.parameter_names = {"T_D"};
  problem.residuals = [points, d, k](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      r[i] = k * std::pow(points[i].temperature_K / p[0], d) - points[i].cp;
    return r;
  };
  problem.jacobian = [points, d, k](const Eigen::VectorXd& p) {
    Eigen::MatrixXd jac(points.size(), 1);
    for (std::size_t i = 0; i < points.size(); ++i)
      jac(i, 0) = -d * k * std::pow(points[i].temperature_K / p[0], d) / p[0];
    return jac;
  };

  FitOptions options;
  options.model_id = d == 2 ? "debye2d" : "debye3d";
  options.lower_bounds = Eigen::VectorXd::Constant(1, 1e-6);
  Eigen::VectorXd p0(1);
  p0 << td_seed;
  return least_squares(problem, p0, options);
}

} // namespace spinbench
