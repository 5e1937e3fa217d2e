#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "fairaudit/errors.hpp"

namespace fairaudit {

/// Exact rational number with int64 numerator/denominator.
///
/// Invariants: denominator > 0, gcd(|num|, den) == 1. Comparisons are exact
/// (cross-multiplied in 128-bit), so boundaries like 7/8 vs 9/10 never depend
/// on floating point.
class Rational {
 public:
  constexpr Rational() : num_(0), den_(1) {}

  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw DataError("rational with zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  static Rational from_int(std::int64_t v) { return Rational(v, 1); }

  /// Parses "0.9", ".5", "7/8", "1" into an exact rational.
  static Rational parse(std::string_view text) {
    const std::string s(text);
    if (s.empty()) throw ConfigError("empty rational literal");
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      return Rational(parse_int(s.substr(0, slash)),
                      parse_int(s.substr(slash + 1)));
    }
    bool negative = false;
    std::size_t pos = 0;
    if (s[0] == '-' || s[0] == '+') {
      negative = s[0] == '-';
      pos = 1;
    }
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool seen_digit = false;
    bool seen_dot = false;
    for (; pos < s.size(); ++pos) {
      const char c = s[pos];
      if (c == '.') {
        if (seen_dot) throw ConfigError("bad rational literal: " + s);
        seen_dot = true;
        continue;
      }
      if (c < '0' || c > '9') throw ConfigError("bad rational literal: " + s);
      seen_digit = true;
      if (num > (INT64_MAX - 9) / 10)
        throw ConfigError("rational literal out of range: " + s);
      num = num * 10 + (c - '0');
      if (seen_dot) {
        if (den > INT64_MAX / 10)
          throw ConfigError("rational literal out of range: " + s);
        den *= 10;
      }
    }
    if (!seen_digit) throw ConfigError("bad rational literal: " + s);
    return Rational(negative ? -num : num, den);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const {
    return static_cast<__int128>(num_) * o.den_ <
           static_cast<__int128>(o.num_) * den_;
  }
  bool operator<=(const Rational& o) const { return !(o < *this); }
  bool operator>(const Rational& o) const { return o < *this; }
  bool operator>=(const Rational& o) const { return !(*this < o); }

  Rational operator+(const Rational& o) const {
    return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
  }
  Rational operator-(const Rational& o) const {
    return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
  }
  Rational operator*(const Rational& o) const {
    return Rational(num_ * o.num_, den_ * o.den_);
  }

  /// Exact division by a positive integer (used for averaging).
  Rational divided_by(std::int64_t k) const { return Rational(num_, den_ * k); }

  Rational abs() const { return num_ < 0 ? Rational(-num_, den_) : *this; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  /// "num/den" (or plain integer when den == 1).
  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Exact fixed-point decimal rendering, rounding halves away from zero.
  /// to_decimal(2) of 5/8 is "0.63".
  std::string to_decimal(int places = 2) const {
    std::int64_t scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    const bool negative = num_ < 0;
    const __int128 n = negative ? -static_cast<__int128>(num_) : num_;
    __int128 scaled = n * scale;
    __int128 q = scaled / den_;
    const __int128 r = scaled % den_;
    if (2 * r >= den_) ++q;
    const std::int64_t whole = static_cast<std::int64_t>(q / scale);
    std::int64_t frac = static_cast<std::int64_t>(q % scale);
    std::string out = negative && (whole != 0 || frac != 0) ? "-" : "";
    out += std::to_string(whole);
    if (places > 0) {
      std::string digits = std::to_string(frac);
      out += "." + std::string(places - digits.size(), '0') + digits;
    }
    return out;
  }

 private:
  static std::int64_t parse_int(const std::string& s) {
    if (s.empty()) throw ConfigError("bad rational literal");
    std::size_t consumed = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(s, &consumed);
    } catch (const std::exception&) {
      throw ConfigError("bad rational literal: " + s);
    }
    if (consumed != s.size()) throw ConfigError("bad rational literal: " + s);
    return v;
  }

  std::int64_t num_;
  std::int64_t den_;
};

}  // namespace fairaudit
