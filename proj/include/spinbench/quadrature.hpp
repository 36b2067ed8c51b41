#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "spinbench/errors.hpp"

namespace spinbench {
namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (symmetric, positive half).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
// Gauss-7 weights matching kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct GkEstimate {
  double kronrod;
  double gauss;
};

template <typename F>
GkEstimate gauss_kronrod_15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kron = 0.0;
  double gauss = 0.0;
  for (std::size_t i = 0; i < kKronrodNodes.size(); ++i) {
    const double x = kKronrodNodes[i];
    const double fv = (i + 1 == kKronrodNodes.size())
                          ? f(c)
                          : f(c - h * x) + f(c + h * x);
    kron += kKronrodWeights[i] * fv;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fv;
  }
  return {kron * h, gauss * h};
}

template <typename F>
double adapt(const F& f, double a, double b, double abs_tol, int depth) {
  const auto est = gauss_kronrod_15(f, a, b);
  const double err = std::abs(est.kronrod - est.gauss);
  if (err <= abs_tol || depth >= 48) return est.kronrod;
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * abs_tol, depth + 1) +
         adapt(f, m, b, 0.5 * abs_tol, depth + 1);
}

} // namespace detail

/// Adaptive Gauss-Kronrod quadrature of f over [a, b] to the requested
/// relative accuracy (with an absolute floor for near-zero integrals).
template <typename F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                 double abs_floor = 1e-300) {
  if (!(b >= a)) throw DomainError("integrate: upper limit below lower limit");
  if (a == b) return 0.0;
  const double coarse = detail::gauss_kronrod_15(f, a, b).kronrod;
  const double abs_tol =
      std::max(abs_floor, rel_tol * std::max(std::abs(coarse),
                                             std::numeric_limits<double>::min()));
  return detail::adapt(f, a, b, abs_tol, 0);
}

} // namespace spinbench
