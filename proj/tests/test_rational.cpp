#include <doctest.h>

#include <random>

#include "fairaudit/rational.hpp"

using fairaudit::ConfigError;
using fairaudit::DataError;
using fairaudit::Rational;

TEST_CASE("parse accepts decimals, fractions and integers") {
  CHECK(Rational::parse("0.9") == Rational(9, 10));
  CHECK(Rational::parse(".5") == Rational(1, 2));
  CHECK(Rational::parse("7/8") == Rational(7, 8));
  CHECK(Rational::parse("1") == Rational(1, 1));
  CHECK(Rational::parse("0.125") == Rational(1, 8));
  CHECK(Rational::parse("1.0") == Rational(1, 1));
  CHECK(Rational::parse("-0.25") == Rational(-1, 4));
}

TEST_CASE("parse rejects junk") {
  CHECK_THROWS_AS(Rational::parse(""), ConfigError);
  CHECK_THROWS_AS(Rational::parse("x"), ConfigError);
  CHECK_THROWS_AS(Rational::parse("1.2.3"), ConfigError);
  CHECK_THROWS_AS(Rational::parse("1/0"), DataError);
  CHECK_THROWS_AS(Rational::parse("0.9f"), ConfigError);
}

TEST_CASE("normalization and exact comparison") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(-2, -4) == Rational(1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  // The load-bearing boundary: 7/8 < 9/10 must hold exactly.
  CHECK(Rational(7, 8) < Rational(9, 10));
  CHECK(Rational(9, 10) >= Rational(9, 10));
  CHECK(Rational(9, 10) < Rational(1, 1));
  CHECK_FALSE(Rational(9, 10) < Rational(9, 10));
  CHECK_THROWS_AS(Rational(1, 0), DataError);
}

TEST_CASE("arithmetic") {
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK((Rational(1, 4) - Rational(3, 4)).abs() == Rational(1, 2));
  CHECK(Rational(3, 4) * Rational(2, 3) == Rational(1, 2));
  CHECK(Rational(3, 2).divided_by(3) == Rational(1, 2));
}

TEST_CASE("fixed-point rendering rounds halves away from zero") {
  CHECK(Rational(5, 8).to_decimal(2) == "0.63");
  CHECK(Rational(1, 8).to_decimal(2) == "0.13");
  CHECK(Rational(3, 7).to_decimal(2) == "0.43");
  CHECK(Rational(0, 1).to_decimal(2) == "0.00");
  CHECK(Rational(1, 1).to_decimal(2) == "1.00");
  CHECK(Rational(15, 4).to_decimal(2) == "3.75");
  CHECK(Rational(51, 8).to_decimal(2) == "6.38");
  CHECK(Rational(3, 4).to_decimal(2) == "0.75");
  CHECK(Rational(-1, 8).to_decimal(2) == "-0.13");
  CHECK(Rational(1, 3).to_decimal(4) == "0.3333");
}

TEST_CASE("ordering agrees with cross-multiplication on random fractions") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<std::int64_t> num(-1000, 1000);
  std::uniform_int_distribution<std::int64_t> den(1, 1000);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t a = num(rng), b = den(rng), c = num(rng), d = den(rng);
    const bool expected = a * d < c * b;
    CHECK(expected == (Rational(a, b) < Rational(c, d)));
  }
}
