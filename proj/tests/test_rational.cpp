#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "randlab/error.hpp"
#include "randlab/rational.hpp"

using randlab::BigInt;
using randlab::Error;
using randlab::ErrorCode;
using randlab::Rat;

TEST_CASE("decimal numerals parse exactly") {
  CHECK(randlab::parse_rational("4") == Rat(4));
  CHECK(randlab::parse_rational("-12.5") == Rat(-25, 2));
  CHECK(randlab::parse_rational("2.5e-3") == Rat(1, 400));
  CHECK(randlab::parse_rational(".5") == Rat(1, 2));
  CHECK(randlab::parse_rational("+0.25") == Rat(1, 4));
  CHECK(randlab::parse_rational("1e3") == Rat(1000));
  CHECK(randlab::parse_rational("1E2") == Rat(100));
  CHECK(randlab::parse_rational(" 7 ") == Rat(7));
  // 0.1 is exact here even though it is not representable in binary.
  CHECK(randlab::parse_rational("0.1") == Rat(1, 10));
}

TEST_CASE("fraction numerals parse exactly") {
  CHECK(randlab::parse_rational("5/12") == Rat(5, 12));
  CHECK(randlab::parse_rational("-5/12") == Rat(-5, 12));
  CHECK(randlab::parse_rational("10/4") == Rat(5, 2));
}

TEST_CASE("malformed numerals are rejected with parse errors") {
  const std::vector<std::string> bad = {
      "",     "nan",  "NaN", "inf",   "-inf", "abc", "1.2.3",
      "1/0",  "5/-2", "--4", "1e",    "e5",   ".",   "1 2",
      "0x10", "1e99999"};
  for (const auto& text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(randlab::parse_rational(text), Error);
    try {
      randlab::parse_rational(text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
    }
  }
}

TEST_CASE("fraction_string is lowest terms, plain integer when whole") {
  CHECK(randlab::fraction_string(Rat(5, 12)) == "5/12");
  CHECK(randlab::fraction_string(Rat(10, 4)) == "5/2");
  CHECK(randlab::fraction_string(Rat(4)) == "4");
  CHECK(randlab::fraction_string(Rat(-1, 2)) == "-1/2");
  CHECK(randlab::fraction_string(Rat(0)) == "0");
}

TEST_CASE("exact decimal expansion exists iff denominator is 2^a 5^b") {
  CHECK(randlab::exact_decimal_string(Rat(5, 4)) == std::string("1.25"));
  CHECK(randlab::exact_decimal_string(Rat(1, 10)) == std::string("0.1"));
  CHECK(randlab::exact_decimal_string(Rat(-3, 8)) == std::string("-0.375"));
  CHECK(randlab::exact_decimal_string(Rat(7)) == std::string("7"));
  CHECK(randlab::exact_decimal_string(Rat(0)) == std::string("0"));
  CHECK(!randlab::exact_decimal_string(Rat(1, 3)).has_value());
  CHECK(!randlab::exact_decimal_string(Rat(5, 12)).has_value());
  CHECK(!randlab::exact_decimal_string(Rat(1, 7)).has_value());
}

TEST_CASE("roundtrip_string survives a parse round trip") {
  const std::vector<Rat> values = {Rat(0),       Rat(1, 3),  Rat(-5, 12),
                                   Rat(25, 100), Rat(7, 1),  Rat(-13, 64),
                                   Rat(1, 7),    Rat(991, 10)};
  for (const Rat& v : values) {
    CAPTURE(randlab::fraction_string(v));
    CHECK(randlab::parse_rational(randlab::roundtrip_string(v)) == v);
  }
  // Terminating expansions print as decimals, others as fractions.
  CHECK(randlab::roundtrip_string(Rat(5, 4)) == "1.25");
  CHECK(randlab::roundtrip_string(Rat(1, 3)) == "1/3");
}

TEST_CASE("rational_from_double is the exact dyadic value") {
  CHECK(randlab::rational_from_double(0.5) == Rat(1, 2));
  CHECK(randlab::rational_from_double(-0.75) == Rat(-3, 4));
  CHECK(randlab::rational_from_double(3.0) == Rat(3));
  // 0.1 as a double is not 1/10; the conversion must preserve the double.
  CHECK(randlab::rational_from_double(0.1) != Rat(1, 10));
  const std::vector<double> xs = {0.1, -2.7182818, 1e-13, 4503599627370497.0};
  for (double x : xs) {
    CAPTURE(x);
    CHECK(randlab::to_double(randlab::rational_from_double(x)) == x);
  }
  CHECK_THROWS_AS(randlab::rational_from_double(
                      std::numeric_limits<double>::quiet_NaN()),
                  Error);
  CHECK_THROWS_AS(randlab::rational_from_double(
                      std::numeric_limits<double>::infinity()),
                  Error);
}

TEST_CASE("to_double rounds to nearest") {
  CHECK(randlab::to_double(Rat(1, 2)) == 0.5);
  CHECK(randlab::to_double(Rat(1, 3)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(randlab::to_double(Rat(5, 12)) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
}
