#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "spinbench/errors.hpp"

namespace spinbench {

/// Uniform or nonuniform real-valued time series. Times are in ns and must be
/// strictly increasing; `meta` records provenance (sequence kind, channel,
/// seed, ...) as free text carried into output headers.
struct TimeTrace {
  std::vector<double> times_ns;
  std::vector<double> values;
  std::string meta;

  std::size_t size() const { return times_ns.size(); }

  void validate() const {
    if (times_ns.size() != values.size())
      throw DataError("TimeTrace: times and values differ in length");
    for (std::size_t i = 1; i < times_ns.size(); ++i)
      if (!(times_ns[i] > times_ns[i - 1]))
        throw DataError("TimeTrace: times must be strictly increasing");
  }

  /// Sampling step, requiring a uniform grid within `rel_tol` of the mean step.
  double uniform_dt_ns(double rel_tol = 1e-6) const {
    if (times_ns.size() < 2) throw DataError("TimeTrace: need at least 2 points");
    const double dt = (times_ns.back() - times_ns.front()) /
                      static_cast<double>(times_ns.size() - 1);
    for (std::size_t i = 1; i < times_ns.size(); ++i) {
      const double step = times_ns[i] - times_ns[i - 1];
      if (std::abs(step - dt) > rel_tol * std::abs(dt))
        throw DataError("TimeTrace: nonuniform time grid");
    }
    return dt;
  }
};

/// Complex-valued sweep trace as produced by the pulse simulator
/// (quadrature detection: real carries the phased echo, imag the residual).
struct ComplexTrace {
  std::vector<double> times_ns;
  std::vector<std::complex<double>> values;
  std::string meta;

  std::size_t size() const { return times_ns.size(); }

  TimeTrace real_part() const { return component([](std::complex<double> v) { return v.real(); }, "real"); }
  TimeTrace imag_part() const { return component([](std::complex<double> v) { return v.imag(); }, "imag"); }
  TimeTrace magnitude() const { return component([](std::complex<double> v) { return std::abs(v); }, "mag"); }

 private:
  template <typename F>
  TimeTrace component(F f, const char* channel) const {
    TimeTrace out;
    out.times_ns = times_ns;
    out.values.reserve(values.size());
    for (const auto& v : values) out.values.push_back(f(v));
    out.meta = meta.empty() ? std::string("channel=") + channel
                            : meta + "; channel=" + channel;
    return out;
  }
};

} // namespace spinbench
