#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "spinbench/constants.hpp"
#include "spinbench/errors.hpp"
#include "spinbench/fit.hpp"
#include "spinbench/quadrature.hpp"

namespace spinbench {

/// Parameters of the two-channel spin-lattice relaxation law: a Raman
/// (two-phonon) term and a local vibrational mode of wavenumber ν̃.
struct RelaxationParams {
  double a_ram = 0.0;                 // s⁻¹
  double a_loc = 0.0;                 // s⁻¹
  double debye_temperature_TD = 0.0;  // kelvin
  double mode_wavenumber = 0.0;       // cm⁻¹

  void validate() const {
    if (a_ram < 0.0 || a_loc < 0.0)
      throw DomainError("RelaxationParams: pre-factors must be nonnegative");
    if (debye_temperature_TD <= 0.0)
      throw DomainError("RelaxationParams: T_D must be positive");
    if (a_loc > 0.0 && mode_wavenumber <= 0.0)
      throw DomainError("RelaxationParams: mode wavenumber required when A_Loc > 0");
  }
};

struct RatePoint {
  double temperature_K = 0.0;
  double rate = 0.0;  // 1/T1, s⁻¹
};

namespace detail {

/// Integrand x⁸ eˣ/(eˣ−1)², written as x⁶ (x / 2 sinh(x/2))² with the
/// removable singularity at 0 handled by its series (terms through x¹⁰).
inline double raman_integrand(double x) {
  if (x <= 0.0) return 0.0;
  if (x < 1e-1) {
    const double x2 = x * x;
    const double x6 = x2 * x2 * x2;
    return x6 * (1.0 - x2 / 12.0 + x2 * x2 / 240.0);
  }
  if (x > 1400.0) return 0.0;  // x⁸e⁻ˣ underflows long before this
  const double s = x / (2.0 * std::sinh(0.5 * x));
  const double x2 = x * x;
  return x2 * x2 * x2 * s * s;
}

} // namespace detail

/// Transport integral J(θ) = ∫₀^θ x⁸ eˣ/(eˣ−1)² dx. Converges to 8!·ζ(8)
/// ≈ 40484.399 for large θ.
inline double raman_transport_integral(double theta) {
  if (theta < 0.0) throw DomainError("raman_transport_integral: theta must be nonnegative");
  if (theta == 0.0) return 0.0;
  // The tail beyond 200 is below 1e-60 in relative terms.
  const double upper = std::min(theta, 200.0);
  return integrate(detail::raman_integrand, 0.0, upper, 1e-10);
}

/// Two-channel rate law:
///   1/T1 = A_Ram (T/T_D)⁹ J(T_D/T) + A_Loc e^y/(e^y−1)²,  y = hcν̃/(k_B T).
inline double relaxation_rate(double temperature_K, const RelaxationParams& params) {
  params.validate();
  if (temperature_K <= 0.0) throw DomainError("relaxation_rate: temperature must be positive");

  double rate = 0.0;
  if (params.a_ram > 0.0) {
    const double ratio = temperature_K / params.debye_temperature_TD;
    rate += params.a_ram * std::pow(ratio, 9) *
            raman_transport_integral(1.0 / ratio);
  }
  if (params.a_loc > 0.0) {
    const double y = constants::wavenumber_to_kelvin * params.mode_wavenumber /
                     temperature_K;
    // e^y/(e^y−1)² = (2 sinh(y/2))⁻², stable for large y via exp(−y).
    if (y > 700.0) {
      rate += 0.0;  // activation factor underflows
    } else {
      const double s = 2.0 * std::sinh(0.5 * y);
      rate += params.a_loc / (s * s);
    }
  }
  return rate;
}

/// Raman channel alone (A_Loc suppressed).
inline double raman_rate(double temperature_K, const RelaxationParams& params) {
  RelaxationParams p = params;
  p.a_loc = 0.0;
  return relaxation_rate(temperature_K, p);
}

/// Local-mode channel alone (A_Ram suppressed).
inline double local_mode_rate(double temperature_K, const RelaxationParams& params) {
  RelaxationParams p = params;
  p.a_ram = 0.0;
  return p.a_loc > 0.0 ? relaxation_rate(temperature_K, p) : 0.0;
}

namespace detail {

inline void check_rate_points(std::span<const RatePoint> points, std::size_t min_points,
                              double min_span) {
  if (points.size() < min_points)
    throw DataError("relaxation fit: need at least " + std::to_string(min_points) +
                    " rate points");
  double tmin = points[0].temperature_K, tmax = points[0].temperature_K;
  bool any_positive = false;
  for (const auto& pt : points) {
    if (pt.temperature_K <= 0.0)
      throw DomainError("relaxation fit: temperatures must be positive");
    if (pt.rate < 0.0) throw DomainError("relaxation fit: rates must be nonnegative");
    if (pt.rate > 0.0) any_positive = true;
    tmin = std::min(tmin, pt.temperature_K);
    tmax = std::max(tmax, pt.temperature_K);
  }
  if (!any_positive) throw DataError("relaxation fit: all rates are zero");
  if (min_span > 1.0 && tmax < min_span * tmin)
    throw DataError("relaxation fit: temperatures must span at least a factor of " +
                    std::to_string(min_span));
}

} // namespace detail

/// Fit (A_Ram, A_Loc) with T_D and ν̃ held fixed. Residuals are taken in
/// log-rate and nonnegativity is enforced by fitting log pre-factors.
inline FitResult fit_relaxation_prefactors(std::span<const RatePoint> points,
                                           double fixed_TD_K,
                                           double fixed_wavenumber_cm) {
  detail::check_rate_points(points, 4, 3.0);
  if (fixed_TD_K <= 0.0 || fixed_wavenumber_cm <= 0.0)
    throw DomainError("fit_relaxation_prefactors: T_D and wavenumber must be positive");
  for (const auto& pt : points)
    if (pt.rate <= 0.0)
      throw DataError("fit_relaxation_prefactors: log residuals need positive rates");

  // Per-point basis functions (unit pre-factors).
  const std::size_t m = points.size();
  std::vector<double> f_ram(m), f_loc(m), log_rate(m);
  RelaxationParams unit{1.0, 1.0, fixed_TD_K, fixed_wavenumber_cm};
  for (std::size_t i = 0; i < m; ++i) {
    f_ram[i] = raman_rate(points[i].temperature_K, unit);
    f_loc[i] = local_mode_rate(points[i].temperature_K, unit);
    log_rate[i] = std::log(points[i].rate);
  }

  // Linear-space seed, clipped positive.
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    s11 += f_ram[i] * f_ram[i];
    s12 += f_ram[i] * f_loc[i];
    s22 += f_loc[i] * f_loc[i];
    b1 += f_ram[i] * points[i].rate;
    b2 += f_loc[i] * points[i].rate;
  }
  const double det = s11 * s22 - s12 * s12;
  double a_ram0 = 0.0, a_loc0 = 0.0;
  if (std::abs(det) > 1e-30 * std::max(s11 * s22, 1e-300)) {
    a_ram0 = (b1 * s22 - b2 * s12) / det;
    a_loc0 = (b2 * s11 - b1 * s12) / det;
  }
  const double scale = points[m / 2].rate / std::max(f_ram[m / 2], 1e-300);
  if (!(a_ram0 > 0.0)) a_ram0 = std::max(scale, 1e-30);
  if (!(a_loc0 > 0.0)) a_loc0 = 1e-8 * a_ram0;

  LeastSquaresProblem problem;
  problem.parameter_names = {"log_A_Ram", "log_A_Loc"};
  problem.residuals = [=](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    const double aram = std::exp(p[0]);
    const double aloc = std::exp(p[1]);
    for (std::size_t i = 0; i < m; ++i)
      r[i] = std::log(aram * f_ram[i] + aloc * f_loc[i]) - log_rate[i];
    return r;
  };
  problem.jacobian = [=](const Eigen::VectorXd& p) {
    Eigen::MatrixXd jac(m, 2);
    const double aram = std::exp(p[0]);
    const double aloc = std::exp(p[1]);
    for (std::size_t i = 0; i < m; ++i) {
      const double model = aram * f_ram[i] + aloc * f_loc[i];
      jac(i, 0) = aram * f_ram[i] / model;
      jac(i, 1) = aloc * f_loc[i] / model;
    }
    return jac;
  };

  FitOptions options;
  options.model_id = "relaxation_prefactors";
  Eigen::VectorXd p0(2);
  p0 << std::log(a_ram0), std::log(a_loc0);

  FitResult raw = least_squares(problem, p0, options);

  // Report the pre-factors themselves; σ_A = A σ_logA by the delta method.
  FitResult out = raw;
  out.parameters.clear();
  out.parameter_names = {"A_Ram", "A_Loc"};
  const double a_ram = std::exp(raw.raw_parameters[0]);
  const double a_loc = std::exp(raw.raw_parameters[1]);
  out.parameters["A_Ram"] = {a_ram, a_ram * raw.at("log_A_Ram").sigma};
  out.parameters["A_Loc"] = {a_loc, a_loc * raw.at("log_A_Loc").sigma};
  Eigen::VectorXd amps(2);
  amps << a_ram, a_loc;
  out.raw_parameters = amps;
  if (raw.covariance.allFinite()) {
    Eigen::MatrixXd scale_mat = amps.asDiagonal();
    out.covariance = scale_mat * raw.covariance * scale_mat;
  }
  return out;
}

/// Exponent of a pure power law: slope of log(rate) against log(T),
/// with its standard error.
inline Estimate powerlaw_exponent(std::span<const RatePoint> points) {
  detail::check_rate_points(points, 3, 1.0);
  const std::size_t m = points.size();
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (points[i].rate <= 0.0)
      throw DomainError("powerlaw_exponent: rates must be positive");
    x[i] = std::log(points[i].temperature_K);
    y[i] = std::log(points[i].rate);
  }
  double xbar = 0, ybar = 0;
  for (std::size_t i = 0; i < m; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= m;
  ybar /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx <= 0.0) throw DomainError("powerlaw_exponent: degenerate temperatures");
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double resid = y[i] - ybar - slope * (x[i] - xbar);
    rss += resid * resid;
  }
  const double sigma =
      m > 2 ? std::sqrt(rss / (static_cast<double>(m) - 2.0) / sxx) : 0.0;
  return {slope, sigma};
}

/// Temperature at which the Raman and local-mode channels contribute
/// equally, searched on [t_lo, t_hi]. Empty when one channel is absent or
/// no crossing exists in the bracket.
inline std::optional<double> channel_crossover_temperature(
    const RelaxationParams& params, double t_lo_K, double t_hi_K) {
  params.validate();
  if (!(t_lo_K > 0.0) || !(t_hi_K > t_lo_K))
    throw DomainError("channel_crossover_temperature: bad bracket");
  if (params.a_ram <= 0.0 || params.a_loc <= 0.0) return std::nullopt;

  const auto diff = [&](double t) {
    return std::log(std::max(raman_rate(t, params), 1e-300)) -
           std::log(std::max(local_mode_rate(t, params), 1e-300));
  };
  double lo = t_lo_K, hi = t_hi_K;
  double flo = diff(lo), fhi = diff(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) return std::nullopt;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = diff(mid);
    if (fmid == 0.0 || hi - lo < 1e-9 * hi) return mid;
    if (flo * fmid < 0.0) {
      hi = mid;
      fhi = fmid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace spinbench
