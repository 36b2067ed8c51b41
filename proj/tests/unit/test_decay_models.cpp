#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spinbench/decay_models.hpp"
#include "spinbench/rng.hpp"

using namespace spinbench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TimeTrace monoexp_trace(double amp, double tc_ns, double base, double t0_ns,
                        double dt_ns, int n) {
  TimeTrace trace;
  for (int i = 0; i < n; ++i) {
    const double t = t0_ns + dt_ns * i;
    trace.times_ns.push_back(t);
    trace.values.push_back(amp * std::exp(-t / tc_ns) + base);
  }
  return trace;
}

TimeTrace biexp_trace(double as, double ts_ns, double a, double t1_ns, double base,
                      const std::vector<double>& times) {
  TimeTrace trace;
  trace.times_ns = times;
  for (double t : times)
    trace.values.push_back(as * std::exp(-t / ts_ns) + a * std::exp(-t / t1_ns) + base);
  return trace;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i)
    g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

double norm_of(const TimeTrace& t) {
  double s = 0.0;
  for (double v : t.values) s += v * v;
  return std::sqrt(s);
}

} // namespace

TEST_CASE("monoexponential round trip at the Hahn time constant") {
  // 2tau axis, T_m = 1.3 us
  const auto trace = monoexp_trace(-0.8, 1300.0, 0.05, 300.0, 50.0, 80);
  const auto fit = fit_monoexp(trace, DecayAxis::hahn());
  CHECK(fit.converged);
  CHECK_THAT(fit.at("T_m").value, WithinRel(1300.0, 1e-6));
  CHECK_THAT(fit.at("A").value, WithinRel(-0.8, 1e-6));
  CHECK_THAT(fit.at("I_0").value, WithinAbs(0.05, 1e-8));
  CHECK(fit.model_id == "monoexp[2tau]");
  CHECK_FALSE(fit.has_warning("non_decay"));
  CHECK(fit.residual_norm < 1e-9 * (1.0 + norm_of(trace)));
}

TEST_CASE("monoexponential round trip on the CPMG abscissa") {
  // 2ntau axis, T_m = 5.5 us
  const auto trace = monoexp_trace(1.0, 5500.0, 0.0, 2400.0, 128.0, 120);
  const auto fit = fit_monoexp(trace, DecayAxis::cpmg(8));
  CHECK_THAT(fit.at("T_m").value, WithinRel(5500.0, 1e-6));
  CHECK(fit.model_id == "monoexp[2ntau,n=8]");
}

TEST_CASE("constant trace raises the non-decay flag") {
  TimeTrace trace;
  for (int i = 0; i < 16; ++i) {
    trace.times_ns.push_back(100.0 * i);
    trace.values.push_back(0.42);
  }
  const auto fit = fit_monoexp(trace);
  CHECK(fit.has_warning("non_decay"));
  CHECK_THAT(fit.at("I_0").value, WithinAbs(0.42, 1e-12));
  CHECK_THAT(fit.at("A").value, WithinAbs(0.0, 1e-12));
}

TEST_CASE("slowly rising trace is flagged rather than silently fitted") {
  TimeTrace trace;
  for (int i = 0; i < 32; ++i) {
    trace.times_ns.push_back(10.0 * i);
    trace.values.push_back(1.0 + 1e-4 * i);
  }
  const auto fit = fit_monoexp(trace);
  CHECK(fit.has_warning("non_decay"));
}

TEST_CASE("monoexponential preconditions") {
  auto three = monoexp_trace(1.0, 100.0, 0.0, 0.0, 10.0, 3);
  CHECK_THROWS_AS(fit_monoexp(three), DataError);
  CHECK_THROWS_AS(DecayAxis::cpmg(0), ParameterError);
}

TEST_CASE("biexponential round trip at paper-like constants") {
  // T_s = 20 us, T_1 = 359 us on a 3-decade recovery grid.
  const auto times = log_grid(400.0, 2.2e6, 48);
  const auto trace = biexp_trace(-0.9, 20.0e3, -1.1, 359.0e3, 0.02, times);
  const auto fit = fit_biexp(trace);
  CHECK(fit.converged);
  CHECK_THAT(fit.at("T_s").value, WithinRel(20.0e3, 1e-3));
  CHECK_THAT(fit.at("T_1").value, WithinRel(359.0e3, 1e-3));
  CHECK_THAT(fit.at("A_s").value, WithinRel(-0.9, 1e-3));
  CHECK_THAT(fit.at("A").value, WithinRel(-1.1, 1e-3));
  CHECK(fit.at("T_s").value <= fit.at("T_1").value);
  CHECK(fit.residual_norm < 1e-9 * (1.0 + norm_of(trace)));
}

TEST_CASE("biexponential ordering is canonical regardless of seeding", "[property]") {
  GaussianRng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const double ts = 5e3 + 2e4 * rng.uniform01();
    const double t1 = ts * (2.0 + 30.0 * rng.uniform01());
    const auto times = log_grid(400.0, 40.0 * t1, 56);
    const auto trace = biexp_trace(-0.5 - rng.uniform01(), ts, -0.4 - rng.uniform01(),
                                   t1, 0.1 * rng.uniform01(), times);
    const auto fit = fit_biexp(trace);
    CHECK(fit.at("T_s").value <= fit.at("T_1").value);
    CHECK_THAT(fit.at("T_s").value, WithinRel(ts, 0.01));
    CHECK_THAT(fit.at("T_1").value, WithinRel(t1, 0.01));
  }
}

TEST_CASE("pure monoexponential input leaves the fast amplitude near zero") {
  const auto times = log_grid(400.0, 3.0e6, 48);
  const auto trace = biexp_trace(0.0, 1.0, -2.0, 359.0e3, 0.0, times);
  const auto fit = fit_biexp(trace);
  const auto& as = fit.at("A_s");
  CHECK(std::abs(as.value) <= 2.0 * as.sigma + 1e-6 * std::abs(fit.at("A").value));
  CHECK_THAT(fit.at("T_1").value, WithinRel(359.0e3, 1e-3));
}

TEST_CASE("biexponential with noise keeps the slow constant") {
  const auto times = log_grid(400.0, 2.4e6, 64);
  auto trace = biexp_trace(-0.9, 35.9e3, -1.1, 359.0e3, 0.02, times);
  GaussianRng rng(23);
  for (auto& v : trace.values) v += 0.02 * rng.normal() * 2.0;  // ~2% of full scale
  const auto fit = fit_biexp(trace);
  CHECK_THAT(fit.at("T_1").value, WithinRel(359.0e3, 0.05));
}

TEST_CASE("close time constants earn a degeneracy warning") {
  const auto times = log_grid(400.0, 1.5e6, 48);
  const auto trace = biexp_trace(-1.0, 100.0e3, -1.0, 120.0e3, 0.0, times);
  const auto fit = fit_biexp(trace);
  CHECK(fit.has_warning("degenerate_time_constants"));
}

TEST_CASE("biexponential preconditions") {
  const auto short_trace = biexp_trace(-1.0, 2e4, -1.0, 3.6e5, 0.0,
                                       {400.0, 800.0, 1600.0, 3200.0, 6400.0});
  CHECK_THROWS_AS(fit_biexp(short_trace), DataError);

  // 7+ points but a narrow time span.
  std::vector<double> narrow;
  for (int i = 0; i < 10; ++i) narrow.push_back(1000.0 + 100.0 * i);
  const auto narrow_trace = biexp_trace(-1.0, 2e4, -1.0, 3.6e5, 0.0, narrow);
  CHECK_THROWS_AS(fit_biexp(narrow_trace), DataError);
}

TEST_CASE("monoexp jacobian matches central finite differences", "[property]") {
  const std::vector<double> times = log_grid(300.0, 5.0e3, 16);
  const auto model = [&](const Eigen::VectorXd& p, std::size_t i) {
    return p[0] * std::exp(-times[i] / p[1]) + p[2];
  };
  Eigen::VectorXd p(3);
  p << -0.8, 1.2e3, 0.07;
  for (int j = 0; j < 3; ++j) {
    const double h = std::max(std::abs(p[j]) * 1e-6, 1e-9);
    Eigen::VectorXd hi = p, lo = p;
    hi[j] += h;
    lo[j] -= h;
    for (std::size_t i = 0; i < times.size(); i += 3) {
      const double t = times[i];
      const double e = std::exp(-t / p[1]);
      const double analytic = j == 0 ? e : (j == 1 ? p[0] * t / (p[1] * p[1]) * e : 1.0);
      const double fd = (model(hi, i) - model(lo, i)) / (2.0 * h);
      if (std::abs(fd) > 1e-12) CHECK_THAT(analytic, WithinRel(fd, 1e-5));
    }
  }
}

TEST_CASE("biexp jacobian matches central finite differences", "[property]") {
  const auto times = log_grid(400.0, 2.0e6, 24);
  const auto trace = biexp_trace(-0.9, 2.0e4, -1.1, 3.59e5, 0.02, times);

  const auto model = [&](const Eigen::VectorXd& p, std::size_t i) {
    const double t = trace.times_ns[i];
    return p[0] * std::exp(-t / p[1]) + p[2] * std::exp(-t / (p[1] + p[3])) + p[4];
  };
  // Same parameterization fit_biexp uses internally: (A_s, T_s, A, gap, I_0).
  Eigen::VectorXd p(5);
  p << -0.8, 2.5e4, -1.0, 3.1e5, 0.01;

  Eigen::MatrixXd jac(times.size(), 5);
  const double t1 = p[1] + p[3];
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = trace.times_ns[i];
    const double es = std::exp(-t / p[1]);
    const double e1 = std::exp(-t / t1);
    const double d1 = p[2] * t / (t1 * t1) * e1;
    jac(i, 0) = es;
    jac(i, 1) = p[0] * t / (p[1] * p[1]) * es + d1;
    jac(i, 2) = e1;
    jac(i, 3) = d1;
    jac(i, 4) = 1.0;
  }

  for (int j = 0; j < 5; ++j) {
    const double h = std::max(std::abs(p[j]) * 1e-6, 1e-9);
    Eigen::VectorXd hi = p, lo = p;
    hi[j] += h;
    lo[j] -= h;
    for (std::size_t i = 0; i < times.size(); i += 5) {
      const double fd = (model(hi, i) - model(lo, i)) / (2.0 * h);
      if (std::abs(fd) > 1e-12)
        CHECK_THAT(jac(static_cast<int>(i), j), WithinRel(fd, 1e-5));
    }
  }
}

TEST_CASE("uncertainties grow with injected noise", "[property]") {
  const auto clean = monoexp_trace(-1.0, 1300.0, 0.1, 300.0, 40.0, 64);

  GaussianRng rng(31);
  std::vector<double> noise;
  for (std::size_t i = 0; i < clean.size(); ++i) noise.push_back(rng.normal());

  double prev_sigma = 0.0;
  for (double level : {0.005, 0.01, 0.02, 0.04}) {
    TimeTrace noisy = clean;
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy.values[i] += level * noise[i];
    const auto fit = fit_monoexp(noisy, DecayAxis::hahn());
    CHECK(fit.at("T_m").sigma > prev_sigma);
    prev_sigma = fit.at("T_m").sigma;
  }
}
