#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "spinbench/errors.hpp"
#include "spinbench/fit.hpp"
#include "spinbench/trace.hpp"

namespace spinbench {

/// Declares what the trace's time axis means for an echo-decay fit.
/// The values are fitted against the axis as-is; the label is carried into
/// the model id so reports state which abscissa eq. the constants refer to.
struct DecayAxis {
  enum class Kind { direct, two_tau, two_n_tau };
  Kind kind = Kind::direct;
  int n = 1;  // CPMG order for two_n_tau

  static DecayAxis direct() { return {Kind::direct, 1}; }
  static DecayAxis hahn() { return {Kind::two_tau, 1}; }
  static DecayAxis cpmg(int n) {
    if (n < 1) throw ParameterError("DecayAxis: CPMG order must be >= 1");
    return {Kind::two_n_tau, n};
  }

  std::string label() const {
    switch (kind) {
      case Kind::two_tau: return "2tau";
      case Kind::two_n_tau: return "2ntau,n=" + std::to_string(n);
      default: return "t";
    }
  }
};

namespace detail {

struct DecaySeed {
  double baseline;
  double amplitude;
  double time_constant;
  double span;
};

inline DecaySeed seed_from_trace(const TimeTrace& trace) {
  const std::size_t n = trace.size();
  const std::size_t tail = std::max<std::size_t>(3, n / 10);
  double baseline = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) baseline += trace.values[i];
  baseline /= static_cast<double>(tail);

  const double span = trace.times_ns.back() - trace.times_ns.front();
  const double a0 = trace.values.front() - baseline;

  // 1/e crossing of the baseline-subtracted trace.
  double tconst = span / 3.0;
  const double target = std::abs(a0) / std::numbers::e;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(trace.values[i] - baseline) <= target) {
      tconst = trace.times_ns[i] - trace.times_ns.front();
      break;
    }
  }
  tconst = std::clamp(tconst, 1e-3 * span, span);
  return {baseline, a0, tconst, span};
}

/// Given fixed exponential shapes, solve the linear amplitude problem.
inline Eigen::VectorXd linear_amplitudes(const TimeTrace& trace,
                                         const std::vector<std::vector<double>>& shapes) {
  const std::size_t m = trace.size();
  const std::size_t k = shapes.size() + 1;
  Eigen::MatrixXd a(m, k);
  Eigen::VectorXd y(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < shapes.size(); ++j) a(i, j) = shapes[j][i];
    a(i, k - 1) = 1.0;
    y[i] = trace.values[i];
  }
  return a.colPivHouseholderQr().solve(y);
}

inline double data_range(const TimeTrace& trace) {
  const auto [lo, hi] = std::minmax_element(trace.values.begin(), trace.values.end());
  return *hi - *lo;
}

} // namespace detail

/// Fit I(t) = A e^{−t/T_m} + I_0. Reports (A, T_m, I_0); a trace whose best
/// T_m pins at the bound (or carries no decay at all) gets a "non_decay"
/// warning instead of a silent result.
inline FitResult fit_monoexp(const TimeTrace& trace, DecayAxis axis = DecayAxis::direct()) {
  trace.validate();
  if (trace.size() < 4) throw DataError("fit_monoexp: need at least 4 points");

  const auto seed = detail::seed_from_trace(trace);
  const double t_upper = 10.0 * seed.span;
  const double range = detail::data_range(trace);
  const double scale = std::max({range, std::abs(seed.baseline), 1e-300});

  if (range <= 1e-12 * scale) {
    // Flat trace: only the baseline is identifiable.
    FitResult flat;
    flat.model_id = "monoexp[" + axis.label() + "]";
    flat.parameter_names = {"A", "T_m", "I_0"};
    const double mean = std::accumulate(trace.values.begin(), trace.values.end(), 0.0) /
                        static_cast<double>(trace.size());
    flat.parameters["A"] = {0.0, 0.0};
    flat.parameters["T_m"] = {t_upper, 0.0};
    flat.parameters["I_0"] = {mean, 0.0};
    double rss = 0.0;
    for (double v : trace.values) rss += (v - mean) * (v - mean);
    flat.residual_norm = std::sqrt(rss);
    flat.converged = true;
    flat.warnings.push_back("non_decay");
    return flat;
  }

  const std::size_t m = trace.size();
  LeastSquaresProblem problem;
  problem.parameter_names = {"A", "T_m", "I_0"};
  problem.residuals = [&trace, m](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (std::size_t i = 0; i < m; ++i)
      r[i] = p[0] * std::exp(-trace.times_ns[i] / p[1]) + p[2] - trace.values[i];
    return r;
  };
  problem.jacobian = [&trace, m](const Eigen::VectorXd& p) {
    Eigen::MatrixXd jac(m, 3);
    for (std::size_t i = 0; i < m; ++i) {
      const double t = trace.times_ns[i];
      const double e = std::exp(-t / p[1]);
      jac(i, 0) = e;
      jac(i, 1) = p[0] * t / (p[1] * p[1]) * e;
      jac(i, 2) = 1.0;
    }
    return jac;
  };

  FitOptions options;
  options.model_id = "monoexp[" + axis.label() + "]";
  options.lower_bounds = Eigen::VectorXd(3);
  options.lower_bounds << -1e300, 1e-6 * seed.span, -1e300;
  options.upper_bounds = Eigen::VectorXd(3);
  options.upper_bounds << 1e300, t_upper, 1e300;

  // Seed amplitudes linearly at the 1/e time constant.
  std::vector<double> shape(m);
  for (std::size_t i = 0; i < m; ++i)
    shape[i] = std::exp(-trace.times_ns[i] / seed.time_constant);
  const Eigen::VectorXd amp = detail::linear_amplitudes(trace, {shape});

  Eigen::VectorXd p0(3);
  p0 << amp[0], seed.time_constant, amp[1];
  if (std::abs(p0[0]) < 1e-9 * scale) p0[0] = std::copysign(1e-9 * scale, seed.amplitude);

  FitResult result = least_squares(problem, p0, options);
  if (result.at("T_m").value >= 0.99 * t_upper ||
      std::abs(result.at("A").value) <= 1e-9 * scale)
    result.warnings.push_back("non_decay");
  return result;
}

/// Fit I(t) = A_s e^{−t/T_s} + A e^{−t/T_1} + I_0 with T_1 = T_s + gap so the
/// slow constant is T_1 by construction. Reports (A_s, T_s, A, T_1, I_0);
/// time constants closer than a factor 1.5 earn a degeneracy warning.
inline FitResult fit_biexp(const TimeTrace& trace) {
  trace.validate();
  if (trace.size() < 7) throw DataError("fit_biexp: need at least 7 points");
  const double t_first = trace.times_ns.front();
  if (t_first > 0.0 && trace.times_ns.back() / t_first < 1e3)
    throw DataError("fit_biexp: recovery delays must span at least 3 decades");

  const auto seed = detail::seed_from_trace(trace);
  const double t_upper = 10.0 * seed.span;
  const double t_floor = 1e-6 * seed.span;
  const std::size_t m = trace.size();

  const auto eval = [&](const Eigen::VectorXd& p, std::size_t i) {
    const double t = trace.times_ns[i];
    const double t1 = p[1] + p[3];
    return p[0] * std::exp(-t / p[1]) + p[2] * std::exp(-t / t1) + p[4];
  };

  LeastSquaresProblem problem;
  problem.parameter_names = {"A_s", "T_s", "A", "gap", "I_0"};
  problem.residuals = [&trace, m, eval](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = eval(p, i) - trace.values[i];
    return r;
  };
  problem.jacobian = [&trace, m](const Eigen::VectorXd& p) {
    Eigen::MatrixXd jac(m, 5);
    const double t1 = p[1] + p[3];
    for (std::size_t i = 0; i < m; ++i) {
      const double t = trace.times_ns[i];
      const double es = std::exp(-t / p[1]);
      const double e1 = std::exp(-t / t1);
      const double d1 = p[2] * t / (t1 * t1) * e1;  // sensitivity through T_1
      jac(i, 0) = es;
      jac(i, 1) = p[0] * t / (p[1] * p[1]) * es + d1;
      jac(i, 2) = e1;
      jac(i, 3) = d1;
      jac(i, 4) = 1.0;
    }
    return jac;
  };

  const double ts0 = std::clamp(seed.time_constant / 10.0, t_floor, t_upper);
  const double t10 = std::clamp(3.0 * seed.time_constant, ts0 * 1.5, t_upper);
  std::vector<double> fast(m), slow(m);
  for (std::size_t i = 0; i < m; ++i) {
    fast[i] = std::exp(-trace.times_ns[i] / ts0);
    slow[i] = std::exp(-trace.times_ns[i] / t10);
  }
  const Eigen::VectorXd amp = detail::linear_amplitudes(trace, {fast, slow});
  const double scale = std::max(detail::data_range(trace), 1e-300);

  Eigen::VectorXd p0(5);
  p0 << amp[0], ts0, amp[1], t10 - ts0, amp[2];
  if (std::abs(p0[0]) < 1e-9 * scale) p0[0] = std::copysign(1e-9 * scale, seed.amplitude);
  if (std::abs(p0[2]) < 1e-9 * scale) p0[2] = std::copysign(1e-9 * scale, seed.amplitude);

  FitOptions options;
  options.model_id = "biexp";
  options.lower_bounds = Eigen::VectorXd(5);
  options.lower_bounds << -1e300, t_floor, -1e300, t_floor, -1e300;
  options.upper_bounds = Eigen::VectorXd(5);
  options.upper_bounds << 1e300, t_upper, 1e300, t_upper, 1e300;

  FitResult raw = least_squares(problem, p0, options);

  FitResult out = raw;
  out.parameters.clear();
  out.parameter_names = {"A_s", "T_s", "A", "T_1", "I_0"};
  out.parameters["A_s"] = raw.at("A_s");
  out.parameters["T_s"] = raw.at("T_s");
  out.parameters["A"] = raw.at("A");
  out.parameters["I_0"] = raw.at("I_0");
  const double t1 = raw.at("T_s").value + raw.at("gap").value;
  double t1_var = 0.0;
  if (raw.covariance.allFinite())
    t1_var = raw.covariance(1, 1) + raw.covariance(3, 3) + 2.0 * raw.covariance(1, 3);
  out.parameters["T_1"] = {t1, t1_var > 0.0 ? std::sqrt(t1_var) : 0.0};

  if (t1 < 1.5 * raw.at("T_s").value)
    out.warnings.push_back("degenerate_time_constants");
  return out;
}

} // namespace spinbench
