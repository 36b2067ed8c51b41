#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "spinbench/errors.hpp"
#include "spinbench/trace.hpp"

namespace spinbench {

/// One-sided magnitude spectrum on a uniform frequency grid [0, Nyquist].
struct FreqSpectrum {
  std::vector<double> frequencies_MHz;
  std::vector<double> magnitudes;
  std::optional<double> normalization_anchor_MHz;  // the 1ω(¹H) reference

  std::size_t size() const { return frequencies_MHz.size(); }

  double grid_spacing_MHz() const {
    if (frequencies_MHz.size() < 2) throw DataError("FreqSpectrum: too short");
    return frequencies_MHz[1] - frequencies_MHz[0];
  }
};

namespace detail {

/// In-place iterative radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw DomainError("fft: length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

} // namespace detail

/// Remove the least-squares polynomial of the given degree (fitted on a
/// normalized time axis for conditioning).
inline TimeTrace subtract_background(const TimeTrace& trace, int degree) {
  trace.validate();
  if (degree < 0) throw DomainError("subtract_background: negative degree");
  const std::size_t n = trace.size();
  if (n <= static_cast<std::size_t>(degree) + 1)
    throw DataError("subtract_background: need more points than degree + 1");

  const double t0 = trace.times_ns.front();
  const double span = std::max(trace.times_ns.back() - t0, 1e-300);

  Eigen::MatrixXd vand(n, degree + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * (trace.times_ns[i] - t0) / span - 1.0;
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      vand(i, j) = p;
      p *= x;
    }
    y[i] = trace.values[i];
  }
  const Eigen::VectorXd coeff = vand.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd fitted = vand * coeff;

  TimeTrace out = trace;
  for (std::size_t i = 0; i < n; ++i) out.values[i] = y[i] - fitted[i];
  return out;
}

/// Pointwise Hamming window w[i] = 0.54 − 0.46 cos(2πi/(N−1)).
inline TimeTrace apodize_hamming(const TimeTrace& trace) {
  trace.validate();
  const std::size_t n = trace.size();
  if (n < 2) throw DataError("apodize_hamming: need at least 2 points");
  TimeTrace out = trace;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                            static_cast<double>(i) /
                                            static_cast<double>(n - 1));
    out.values[i] *= w;
  }
  return out;
}

/// Zero-fill to factor × next power of two and return the one-sided DFT
/// magnitude. The trace must be uniformly sampled.
inline FreqSpectrum transform(const TimeTrace& trace, int zero_fill_factor = 1) {
  trace.validate();
  if (zero_fill_factor < 1) throw DomainError("transform: zero-fill factor must be >= 1");
  const double dt = trace.uniform_dt_ns();

  const std::size_t n_pad =
      static_cast<std::size_t>(zero_fill_factor) * detail::next_pow2(trace.size());
  std::vector<std::complex<double>> buf(n_pad, {0.0, 0.0});
  for (std::size_t i = 0; i < trace.size(); ++i) buf[i] = trace.values[i];
  detail::fft_pow2(buf);

  FreqSpectrum spec;
  const std::size_t half = n_pad / 2;
  spec.frequencies_MHz.reserve(half + 1);
  spec.magnitudes.reserve(half + 1);
  const double df = 1e3 / (static_cast<double>(n_pad) * dt);  // MHz per bin
  for (std::size_t k = 0; k <= half; ++k) {
    spec.frequencies_MHz.push_back(df * static_cast<double>(k));
    spec.magnitudes.push_back(std::abs(buf[k]));
  }
  return spec;
}

namespace detail {

/// Topographic prominence of the local maximum at `i`: height above the
/// higher of the two saddle minima toward the nearest taller samples (or
/// the spectrum ends).
inline double peak_prominence(const std::vector<double>& mag, std::size_t i) {
  double left_min = mag[i];
  for (std::size_t j = i; j-- > 0;) {
    left_min = std::min(left_min, mag[j]);
    if (mag[j] > mag[i]) break;
  }
  double right_min = mag[i];
  for (std::size_t j = i + 1; j < mag.size(); ++j) {
    right_min = std::min(right_min, mag[j]);
    if (mag[j] > mag[i]) break;
  }
  return mag[i] - std::max(left_min, right_min);
}

} // namespace detail

/// Local maxima whose topographic prominence exceeds prominence·max,
/// refined by three-point parabolic interpolation. Returns
/// (frequency MHz, magnitude) pairs in ascending frequency order.
inline std::vector<std::pair<double, double>> find_peaks(const FreqSpectrum& spectrum,
                                                         double prominence) {
  if (spectrum.size() == 0) throw DomainError("find_peaks: empty spectrum");
  if (!(prominence > 0.0 && prominence < 1.0))
    throw DomainError("find_peaks: prominence must lie in (0,1)");

  const auto& mag = spectrum.magnitudes;
  const double maxmag = *std::max_element(mag.begin(), mag.end());
  if (maxmag <= 0.0) return {};
  const double threshold = prominence * maxmag;
  const double df = spectrum.size() > 1 ? spectrum.grid_spacing_MHz() : 0.0;

  std::vector<std::pair<double, double>> peaks;
  for (std::size_t i = 1; i + 1 < mag.size(); ++i) {
    if (!(mag[i] >= mag[i - 1] && mag[i] > mag[i + 1])) continue;
    if (detail::peak_prominence(mag, i) <= threshold) continue;
    const double alpha = mag[i - 1];
    const double beta = mag[i];
    const double gamma = mag[i + 1];
    const double denom = alpha - 2.0 * beta + gamma;
    double delta = 0.0;
    if (denom < 0.0) delta = 0.5 * (alpha - gamma) / denom;
    delta = std::clamp(delta, -0.5, 0.5);
    const double freq = spectrum.frequencies_MHz[i] + delta * df;
    const double height = beta - 0.25 * (alpha - gamma) * delta;
    peaks.emplace_back(freq, height);
  }
  return peaks;
}

} // namespace spinbench
