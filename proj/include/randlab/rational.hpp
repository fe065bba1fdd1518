#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace randlab {

// Exact arithmetic used everywhere a statistical identity is checked for
// literal equality. Values ingested from text stay rational end to end;
// values born as doubles (model draws) are carried as exact dyadic rationals.
using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Parses a decimal numeral ("4", "-12.5", "2.5e-3") or a fraction ("5/12")
// into an exact rational. Never routes through binary floating point.
// Rejects NaN/infinity tokens and any other malformed text.
Rat parse_rational(std::string_view text);

// "p/q" in lowest terms; plain "p" when the denominator is 1.
std::string fraction_string(const Rat& r);

// Exact finite decimal expansion, available iff the reduced denominator is
// of the form 2^a * 5^b.
std::optional<std::string> exact_decimal_string(const Rat& r);

// String that parse_rational maps back to the same value: the exact decimal
// expansion when it terminates, fraction form otherwise.
std::string roundtrip_string(const Rat& r);

double to_double(const Rat& r);

// Exact dyadic value of a finite double. Throws on NaN/infinity.
Rat rational_from_double(double x);

}  // namespace randlab
