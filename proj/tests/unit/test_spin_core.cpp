#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "spinbench/constants.hpp"
#include "spinbench/isotopes.hpp"
#include "spinbench/resonance.hpp"

using namespace spinbench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const IsotopeTable& shipped_table() {
  static IsotopeTable table =
      IsotopeTable::load(std::string(SPINBENCH_DATA_DIR) + "/isotopes.txt");
  return table;
}
} // namespace

TEST_CASE("physical constants are positive and self-consistent") {
  namespace c = constants;
  CHECK(c::planck_h > 0.0);
  CHECK(c::hbar > 0.0);
  CHECK(c::boltzmann_kB > 0.0);
  CHECK(c::bohr_magneton_muB > 0.0);
  CHECK(c::avogadro_NA > 0.0);
  CHECK(c::zeta3 > 0.0);
  CHECK(c::speed_of_light_c_cm > 0.0);
  CHECK_THAT(c::wavenumber_to_kelvin,
             WithinRel(c::planck_h * c::speed_of_light_c_cm / c::boltzmann_kB, 1e-6));
  CHECK(c::free_electron_g >= 2.0022);
  CHECK(c::free_electron_g <= 2.0024);
  CHECK_THAT(c::wavenumber_to_kelvin, WithinRel(1.4387768775039338, 1e-12));
}

TEST_CASE("resonance field from the Zeeman condition") {
  CHECK_THAT(resonance_field(2.0023, 9.6), WithinRel(0.34255518981, 1e-9));
  CHECK_THAT(resonance_field(2.0023, 9.6), WithinAbs(0.34257, 2e-4));
  CHECK_THAT(resonance_field(2.0031, 9.6), WithinRel(0.34241837979, 1e-9));
  CHECK_THAT(resonance_field(2.0031, 9.6), WithinAbs(0.34243, 2e-4));

  SECTION("linear in frequency") {
    CHECK(resonance_field(2.0023, 19.2) == 2.0 * resonance_field(2.0023, 9.6));
  }
  SECTION("invalid inputs") {
    CHECK_THROWS_AS(resonance_field(0.0, 9.6), DomainError);
    CHECK_THROWS_AS(resonance_field(2.0, -1.0), DomainError);
  }
}

TEST_CASE("g factor inverts the resonance field") {
  const double b = resonance_field(2.00313, 9.6);
  CHECK_THAT(g_factor(b, 9.6), WithinRel(2.00313, 1e-12));
  CHECK_THAT(g_factor(0.34257, 9.6), WithinRel(2.00221343538, 1e-9));
  CHECK_THAT(g_factor(0.34257, 9.6), WithinAbs(2.0023, 1e-3));
  CHECK(g_factor(0.34257, 19.2) == 2.0 * g_factor(0.34257, 9.6));
  CHECK_THROWS_AS(g_factor(0.0, 9.6), DomainError);
  CHECK_THROWS_AS(g_factor(0.3, 0.0), DomainError);
}

TEST_CASE("resonance_field and g_factor are exact inverses", "[property]") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> gdist(1.8, 2.2);
  std::uniform_real_distribution<double> fdist(1.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const double g = gdist(rng);
    const double f = fdist(rng);
    CHECK_THAT(g_factor(resonance_field(g, f), f), WithinRel(g, 1e-12));
  }
}

TEST_CASE("larmor ladder harmonics") {
  const auto& table = shipped_table();
  const auto ladder_h = larmor_ladder(table.at("1H"), 0.34243, 2);
  REQUIRE(ladder_h.size() == 2);
  CHECK(ladder_h[0].first == 1);
  CHECK(ladder_h[1].first == 2);
  CHECK_THAT(ladder_h[0].second, WithinRel(14.5798061066, 1e-9));
  CHECK_THAT(ladder_h[0].second, WithinAbs(14.581, 5e-3));
  CHECK_THAT(ladder_h[1].second, WithinRel(2.0 * ladder_h[0].second, 1e-15));

  const auto ladder_c = larmor_ladder(table.at("13C"), 0.34243, 1);
  CHECK_THAT(ladder_c[0].second, WithinRel(3.66687706957, 1e-9));
  CHECK_THAT(ladder_c[0].second / ladder_h[0].second, WithinAbs(0.2515, 1e-3));

  SECTION("zero field gives zeros") {
    for (const auto& [n, f] : larmor_ladder(table.at("11B"), 0.0, 3)) CHECK(f == 0.0);
  }
  SECTION("n_max of zero is an error") {
    CHECK_THROWS_AS(larmor_ladder(table.at("1H"), 0.34243, 0), DomainError);
  }
}

TEST_CASE("larmor ladder scales with field and harmonic", "[property]") {
  const auto& h1 = shipped_table().at("1H");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> bdist(0.01, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double b = bdist(rng);
    const double scale = 3.7;
    const auto ladder = larmor_ladder(h1, b, 5);
    const auto scaled = larmor_ladder(h1, scale * b, 5);
    for (std::size_t n = 0; n < ladder.size(); ++n) {
      CHECK_THAT(ladder[n].second, WithinRel((n + 1) * ladder[0].second, 1e-12));
      CHECK_THAT(scaled[n].second, WithinRel(scale * ladder[n].second, 1e-12));
    }
  }
}

TEST_CASE("shipped isotope table against an independent transcription") {
  const auto& table = shipped_table();
  REQUIRE(table.size() >= 3);
  // Reference values transcribed separately from a standard table.
  const double ref_h = 42.5775;
  const double ref_b = 13.6630;
  const double ref_c = 10.7084;
  CHECK_THAT(table.at("1H").gamma_bar_MHz_per_T, WithinRel(ref_h, 1e-4));
  CHECK_THAT(table.at("11B").gamma_bar_MHz_per_T, WithinRel(ref_b, 1e-4));
  CHECK_THAT(table.at("13C").gamma_bar_MHz_per_T, WithinRel(ref_c, 1e-4));

  const double ratio_b = std::abs(table.at("11B").gamma_bar_MHz_per_T /
                                  table.at("1H").gamma_bar_MHz_per_T);
  const double ratio_c = std::abs(table.at("13C").gamma_bar_MHz_per_T /
                                  table.at("1H").gamma_bar_MHz_per_T);
  CHECK_THAT(ratio_b, WithinAbs(0.3209, 1e-3));
  CHECK_THAT(ratio_c, WithinAbs(0.2515, 1e-3));
  CHECK_THAT(ratio_b, WithinRel(ref_b / ref_h, 1e-3));
  CHECK_THAT(ratio_c, WithinRel(ref_c / ref_h, 1e-3));

  for (const auto& entry : table.entries()) CHECK(entry.spin_I > 0.0);
}

TEST_CASE("isotope table parsing") {
  SECTION("comments and blank lines") {
    std::istringstream in("# comment\n\n1H,0.5,42.5775\n19F , 0.5, 40.08 # inline\n");
    const auto table = IsotopeTable::parse(in);
    REQUIRE(table.size() == 2);
    CHECK(table.at("19F").spin_I == 0.5);
  }
  SECTION("duplicate labels rejected") {
    std::istringstream in("1H,0.5,42.6\n1H,0.5,42.6\n");
    CHECK_THROWS_AS(IsotopeTable::parse(in), DataError);
  }
  SECTION("nonpositive spin rejected") {
    std::istringstream in("xx,0,10\n");
    CHECK_THROWS_AS(IsotopeTable::parse(in), DataError);
  }
  SECTION("malformed rows rejected") {
    std::istringstream bad1("1H,0.5\n");
    CHECK_THROWS_AS(IsotopeTable::parse(bad1), DataError);
    std::istringstream bad2("1H,half,42\n");
    CHECK_THROWS_AS(IsotopeTable::parse(bad2), DataError);
  }
  SECTION("unknown lookup") {
    std::istringstream in("1H,0.5,42.6\n");
    const auto table = IsotopeTable::parse(in);
    CHECK(table.find("57Fe") == nullptr);
    CHECK_THROWS_AS(table.at("57Fe"), DataError);
  }
}

TEST_CASE("spin system axial average") {
  SpinSystem cof5{2.00313, 2.00351, 0.5};
  CHECK_THAT(cof5.g_iso(), WithinRel((2.00313 + 2.0 * 2.00351) / 3.0, 1e-15));
  CHECK(cof5.spin_S == 0.5);
  CHECK_NOTHROW(cof5.validate());
  CHECK_THROWS_AS((SpinSystem{2.0, 2.0, 1.5}.validate()), DomainError);
  CHECK_THROWS_AS((SpinSystem{4.1, 2.0, 0.5}.validate()), DomainError);
}

TEST_CASE("field point validation") {
  FieldPoint ok{0.34243, 9.6};
  CHECK_NOTHROW(ok.validate());
  FieldPoint bad{0.0, 9.6};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
