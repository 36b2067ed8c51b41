#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "spinbench/csv.hpp"

namespace fs = std::filesystem;
using namespace spinbench;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name) {
    path = fs::temp_directory_path() /
           ("spinbench_csv_" + std::to_string(::getpid()) + "_" + name);
  }
  ~TempFile() {
    std::error_code ec;
    fs::remove(path, ec);
  }
};

} // namespace

TEST_CASE("double formatting round-trips exactly", "[property]") {
  for (double v : {0.0, 1.0, -1.0, 0.1, 1e-300, -3.14159e17, 42.57747892,
                   1.2345678901234567e-5}) {
    CHECK(std::stod(csv::format_double(v)) == v);
  }
}

TEST_CASE("trace files round-trip through write and read") {
  TempFile file("trace.csv");
  ComplexTrace trace;
  for (int i = 0; i < 10; ++i) {
    trace.times_ns.push_back(300.0 + 8.0 * i);
    trace.values.emplace_back(std::exp(-i * 0.1), 1e-3 * i);
  }
  csv::write_trace(file.path.string(), trace, {"kind=hahn", "seed=7"});

  const ComplexTrace back = csv::read_trace(file.path.string());
  REQUIRE(back.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(back.times_ns[i] == trace.times_ns[i]);
    CHECK(back.values[i] == trace.values[i]);
  }
  CHECK_THAT(back.meta, ContainsSubstring("kind=hahn"));
  CHECK_THAT(back.meta, ContainsSubstring("seed=7"));
}

TEST_CASE("temperature series round-trip") {
  TempFile file("rates.csv");
  csv::write_temperature_series(file.path.string(), {30.0, 90.0, 298.0},
                                {12.5, 300.0, 3823.9}, {"unit: 1/s"});
  const auto series = csv::read_temperature_series(file.path.string());
  REQUIRE(series.temperature_K.size() == 3);
  CHECK(series.temperature_K[2] == 298.0);
  CHECK(series.value[2] == 3823.9);
  REQUIRE(series.comments.size() == 1);
  CHECK(series.comments[0] == "unit: 1/s");
}

TEST_CASE("parse failures carry the offending row number") {
  TempFile file("bad.csv");
  {
    std::ofstream out(file.path);
    out << "# comment\n";
    out << "temperature_K,value\n";
    out << "2.0,0.05\n";
    out << "4.0,oops\n";
  }
  try {
    csv::read_temperature_series(file.path.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("row 4"));
    CHECK_THAT(e.what(), ContainsSubstring("oops"));
  }
}

TEST_CASE("field-count mismatches are rejected with the row number") {
  TempFile file("ragged.csv");
  {
    std::ofstream out(file.path);
    out << "time_ns,real,imag\n";
    out << "1,2,3\n";
    out << "4,5\n";
  }
  try {
    csv::read_trace(file.path.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("row 3"));
  }
}

TEST_CASE("missing files and missing headers are data errors") {
  CHECK_THROWS_AS(csv::read_table("/nonexistent/nowhere.csv"), DataError);
  TempFile file("empty.csv");
  { std::ofstream out(file.path); }
  CHECK_THROWS_AS(csv::read_table(file.path.string()), DataError);
}
