#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "spinbench/dsp.hpp"
#include "spinbench/rng.hpp"

using namespace spinbench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TimeTrace uniform_trace(int n, double dt_ns) {
  TimeTrace trace;
  for (int i = 0; i < n; ++i) {
    trace.times_ns.push_back(dt_ns * i);
    trace.values.push_back(0.0);
  }
  return trace;
}

TimeTrace cosine_trace(double freq_MHz, int n, double dt_ns, double amp = 1.0) {
  TimeTrace trace = uniform_trace(n, dt_ns);
  for (int i = 0; i < n; ++i)
    trace.values[i] =
        amp * std::cos(2.0 * std::numbers::pi * freq_MHz * 1e-3 * trace.times_ns[i]);
  return trace;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST_CASE("polynomial background removal") {
  SECTION("exact cubic vanishes at degree 3") {
    TimeTrace trace = uniform_trace(64, 4.0);
    for (int i = 0; i < 64; ++i) {
      const double t = trace.times_ns[i];
      trace.values[i] = 2.0 - 0.1 * t + 3e-4 * t * t - 5e-7 * t * t * t;
    }
    const auto out = subtract_background(trace, 3);
    for (double v : out.values) CHECK_THAT(v, WithinAbs(0.0, 1e-9));
  }

  SECTION("cosine survives a linear drift correction") {
    TimeTrace trace = cosine_trace(10.0, 128, 4.0);
    TimeTrace pure = trace;
    for (int i = 0; i < 128; ++i) trace.values[i] += 0.5 + 2e-3 * trace.times_ns[i];
    const auto out = subtract_background(trace, 1);
    CHECK(pearson(out.values, pure.values) > 0.999);
  }

  SECTION("degree 0 on zero-mean data is the identity") {
    TimeTrace trace = cosine_trace(10.0, 128, 4.0);
    double mean = 0.0;
    for (double v : trace.values) mean += v;
    mean /= trace.size();
    for (auto& v : trace.values) v -= mean;
    const auto out = subtract_background(trace, 0);
    for (std::size_t i = 0; i < trace.size(); ++i)
      CHECK_THAT(out.values[i], WithinAbs(trace.values[i], 1e-12));
  }

  SECTION("output mean is zero") {
    TimeTrace trace = cosine_trace(7.3, 100, 4.0);
    for (int i = 0; i < 100; ++i) trace.values[i] += 3.0 + 0.01 * trace.times_ns[i];
    double norm = 0.0;
    for (double v : trace.values) norm += v * v;
    for (int degree : {0, 1, 2, 3}) {
      const auto out = subtract_background(trace, degree);
      double mean = 0.0;
      for (double v : out.values) mean += v;
      mean /= out.size();
      CHECK(std::abs(mean) <= 1e-9 * std::sqrt(norm));
    }
  }

  SECTION("underdetermined fits are rejected") {
    TimeTrace trace = uniform_trace(4, 4.0);
    CHECK_THROWS_AS(subtract_background(trace, 3), DataError);
    CHECK_THROWS_AS(subtract_background(trace, -1), DomainError);
  }
}

TEST_CASE("hamming window") {
  TimeTrace ones = uniform_trace(33, 4.0);
  for (auto& v : ones.values) v = 1.0;
  const auto out = apodize_hamming(ones);

  SECTION("endpoints scale by 0.54 - 0.46") {
    CHECK(out.values.front() == 0.54 - 0.46);
    CHECK_THAT(out.values.front(), WithinAbs(0.08, 1e-15));
    CHECK_THAT(out.values.back(), WithinAbs(0.08, 1e-15));
  }
  SECTION("odd-length midpoint is untouched") {
    CHECK(out.values[16] == 1.0);
  }
  SECTION("unit input reproduces the window samples") {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / 32.0);
      CHECK_THAT(out.values[i], WithinAbs(w, 1e-15));
    }
  }
  SECTION("too-short input") {
    TimeTrace one = uniform_trace(1, 4.0);
    CHECK_THROWS_AS(apodize_hamming(one), DataError);
  }
}

TEST_CASE("fourier transform of a cosine lands on the tone") {
  const auto trace = cosine_trace(14.581, 256, 4.0);
  const auto spectrum = transform(trace, 4);

  // 1024-point padded grid: 0.244 MHz spacing.
  CHECK(spectrum.size() == 513);
  CHECK_THAT(spectrum.grid_spacing_MHz(), WithinRel(1e3 / (1024.0 * 4.0), 1e-12));

  std::size_t best = 0;
  for (std::size_t i = 0; i < spectrum.size(); ++i)
    if (spectrum.magnitudes[i] > spectrum.magnitudes[best]) best = i;
  CHECK_THAT(spectrum.frequencies_MHz[best], WithinAbs(14.581, 0.25));
}

TEST_CASE("transform edge cases") {
  SECTION("zero trace gives a zero spectrum") {
    const auto spectrum = transform(uniform_trace(64, 4.0), 2);
    for (double m : spectrum.magnitudes) CHECK(m == 0.0);
  }
  SECTION("impulse at t=0 is spectrally flat") {
    TimeTrace trace = uniform_trace(64, 4.0);
    trace.values[0] = 1.0;
    const auto spectrum = transform(trace, 1);
    for (double m : spectrum.magnitudes) CHECK_THAT(m, WithinRel(1.0, 1e-12));
  }
  SECTION("nonuniform grids are rejected") {
    TimeTrace trace = uniform_trace(16, 4.0);
    trace.times_ns[7] += 0.5;
    CHECK_THROWS_AS(transform(trace, 1), DataError);
  }
  SECTION("zero-fill factor must be positive") {
    CHECK_THROWS_AS(transform(uniform_trace(16, 4.0), 0), DomainError);
  }
}

TEST_CASE("underlying dft obeys parseval and conjugate symmetry") {
  GaussianRng rng(8);
  std::vector<std::complex<double>> x(256);
  double time_energy = 0.0;
  for (auto& v : x) {
    v = {rng.normal(), 0.0};
    time_energy += std::norm(v);
  }
  auto spectrum_buf = x;
  detail::fft_pow2(spectrum_buf);

  double freq_energy = 0.0;
  for (const auto& v : spectrum_buf) freq_energy += std::norm(v);
  freq_energy /= static_cast<double>(x.size());
  CHECK_THAT(freq_energy, WithinRel(time_energy, 1e-9));

  for (std::size_t k = 1; k < x.size(); ++k) {
    const auto expected = std::conj(spectrum_buf[x.size() - k]);
    CHECK_THAT(spectrum_buf[k].real(), WithinAbs(expected.real(), 1e-9));
    CHECK_THAT(spectrum_buf[k].imag(), WithinAbs(expected.imag(), 1e-9));
  }

  // Round trip back to the time domain.
  for (auto& v : spectrum_buf) v = std::conj(v);
  detail::fft_pow2(spectrum_buf);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto rec = std::conj(spectrum_buf[i]) / static_cast<double>(x.size());
    CHECK_THAT(rec.real(), WithinAbs(x[i].real(), 1e-9));
  }
}

TEST_CASE("peak finding") {
  SECTION("single tone yields exactly one peak") {
    const auto spectrum = transform(apodize_hamming(cosine_trace(12.2, 256, 4.0)), 4);
    const auto peaks = find_peaks(spectrum, 0.1);
    REQUIRE(peaks.size() == 1);
    CHECK_THAT(peaks[0].first, WithinAbs(12.2, 0.13));
  }

  SECTION("two tones at 10:3 amplitude are both found") {
    TimeTrace trace = cosine_trace(14.58, 256, 4.0, 1.0);
    const auto second = cosine_trace(4.68, 256, 4.0, 0.3);
    for (std::size_t i = 0; i < trace.size(); ++i) trace.values[i] += second.values[i];
    const auto spectrum = transform(apodize_hamming(trace), 4);
    const auto peaks = find_peaks(spectrum, 0.1);
    REQUIRE(peaks.size() == 2);
    CHECK_THAT(peaks[0].first, WithinAbs(4.68, 0.13));
    CHECK_THAT(peaks[1].first, WithinAbs(14.58, 0.13));
  }

  SECTION("an extreme threshold keeps at most one peak") {
    GaussianRng rng(99);
    TimeTrace noise = uniform_trace(256, 4.0);
    for (auto& v : noise.values) v = rng.normal();
    const auto spectrum = transform(noise, 2);
    const auto peaks = find_peaks(spectrum, 0.99);
    CHECK(peaks.size() <= 1);
  }

  SECTION("localization stays within half a padded bin", "[property]") {
    for (double tone : {2.0, 11.7, 31.4, 59.9, 101.3, 123.0}) {
      const auto spectrum = transform(apodize_hamming(cosine_trace(tone, 256, 4.0)), 4);
      const auto peaks = find_peaks(spectrum, 0.5);
      REQUIRE_FALSE(peaks.empty());
      double best_dev = 1e9;
      for (const auto& [freq, mag] : peaks) best_dev = std::min(best_dev, std::abs(freq - tone));
      CHECK(best_dev <= 0.5 * spectrum.grid_spacing_MHz());
    }
  }

  SECTION("invalid inputs") {
    const auto spectrum = transform(cosine_trace(10.0, 64, 4.0), 1);
    CHECK_THROWS_AS(find_peaks(spectrum, 0.0), DomainError);
    CHECK_THROWS_AS(find_peaks(spectrum, 1.0), DomainError);
    CHECK_THROWS_AS(find_peaks(FreqSpectrum{}, 0.5), DomainError);
  }
}
