#include "randlab/rational.hpp"

#include <cctype>
#include <cmath>

#include "randlab/error.hpp"

namespace randlab {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

BigInt pow10(unsigned long k) {
  BigInt r = 1;
  const BigInt ten = 10;
  for (unsigned long i = 0; i < k; ++i) r *= ten;
  return r;
}

// cpp_int's string constructor switches to octal on a leading zero; force
// base 10 no matter how the digits arrive.
BigInt decimal_bigint(std::string_view digits) {
  std::size_t i = 0;
  while (i + 1 < digits.size() && digits[i] == '0') ++i;
  return BigInt{std::string(digits.substr(i))};
}

[[noreturn]] void bad_numeral(std::string_view text) {
  fail(ErrorCode::parse, "not a decimal numeral: '" + std::string(text) + "'");
}

// Sign-stripped integer-or-decimal numeral with optional exponent.
Rat parse_unsigned_decimal(std::string_view s, std::string_view whole) {
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp = s.substr(e + 1);
    s = s.substr(0, e);
    bool neg = false;
    if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
      neg = exp[0] == '-';
      exp.remove_prefix(1);
    }
    if (!all_digits(exp) || exp.size() > 4) bad_numeral(whole);
    for (char c : exp) exponent = exponent * 10 + (c - '0');
    if (neg) exponent = -exponent;
  }

  std::string_view int_part = s;
  std::string_view frac_part;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    int_part = s.substr(0, dot);
    frac_part = s.substr(dot + 1);
    if (frac_part.find('.') != std::string_view::npos) bad_numeral(whole);
  }
  if (int_part.empty() && frac_part.empty()) bad_numeral(whole);
  if (!int_part.empty() && !all_digits(int_part)) bad_numeral(whole);
  if (!frac_part.empty() && !all_digits(frac_part)) bad_numeral(whole);

  std::string digits;
  digits.reserve(int_part.size() + frac_part.size());
  digits.append(int_part);
  digits.append(frac_part);

  BigInt mantissa = digits.empty() ? BigInt(0) : decimal_bigint(digits);
  long scale = static_cast<long>(frac_part.size()) - exponent;
  if (scale >= 0) return Rat(mantissa, pow10(static_cast<unsigned long>(scale)));
  return Rat(mantissa * pow10(static_cast<unsigned long>(-scale)), 1);
}

}  // namespace

Rat parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) fail(ErrorCode::parse, "empty numeral");

  bool negative = false;
  if (s[0] == '+' || s[0] == '-') {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) bad_numeral(text);

  Rat value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::string_view num = s.substr(0, slash);
    std::string_view den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) bad_numeral(text);
    BigInt d = decimal_bigint(den);
    if (d == 0) fail(ErrorCode::parse, "zero denominator: '" + std::string(text) + "'");
    value = Rat(decimal_bigint(num), d);
  } else {
    value = parse_unsigned_decimal(s, text);
  }
  return negative ? Rat(-value) : value;
}

std::string fraction_string(const Rat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) {
    s += '/';
    s += denominator(r).str();
  }
  return s;
}

std::optional<std::string> exact_decimal_string(const Rat& r) {
  BigInt num = numerator(r);
  BigInt den = denominator(r);
  unsigned long twos = 0;
  unsigned long fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return std::nullopt;

  const unsigned long k = std::max(twos, fives);
  bool negative = num < 0;
  BigInt digits = abs(num);
  // 1/den = (2^(k-a) 5^(k-b)) / 10^k
  for (unsigned long i = twos; i < k; ++i) digits *= 2;
  for (unsigned long i = fives; i < k; ++i) digits *= 5;

  std::string body = digits.str();
  if (body.size() <= k) body.insert(0, k - body.size() + 1, '0');
  std::string out;
  if (negative) out += '-';
  out += body.substr(0, body.size() - k);
  if (k > 0) {
    std::string frac = body.substr(body.size() - k);
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    if (!frac.empty()) {
      out += '.';
      out += frac;
    }
  }
  return out;
}

std::string roundtrip_string(const Rat& r) {
  if (auto dec = exact_decimal_string(r)) return *dec;
  return fraction_string(r);
}

double to_double(const Rat& r) { return r.convert_to<double>(); }

Rat rational_from_double(double x) {
  if (!std::isfinite(x)) fail(ErrorCode::invalid_argument, "non-finite value");
  return Rat(x);
}

}  // namespace randlab
