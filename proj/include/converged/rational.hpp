#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace converged {

// Exact fraction with a positive denominator, always in lowest terms.
// Arithmetic goes through 128-bit intermediates and throws on overflow.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) { assign(num, den); }  // NOLINT

  // Exact value of a decimal literal such as "0.2", "-1.25e-1" or "3".
  static Rational from_decimal(std::string_view text);

  // Exact value of the shortest decimal representation of a double, so that
  // a JSON value of 0.2 becomes 1/5 rather than the nearest binary fraction.
  static Rational from_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::invalid_argument("unrepresentable number");
    return from_decimal(std::string_view(buf, static_cast<std::size_t>(end - buf)));
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const { return num_ == 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const __int128 n = static_cast<__int128>(a.num_) * (b.den_ / g) +
                       static_cast<__int128>(b.num_) * (a.den_ / g);
    const __int128 d = static_cast<__int128>(a.den_ / g) * b.den_;
    return make(n, d);
  }
  friend Rational operator-(const Rational& a) { return make(-static_cast<__int128>(a.num_), a.den_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l <=> r;
  }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr __int128 lim = INT64_MAX;
    if (n > lim || n < -lim || d > lim) throw std::overflow_error("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  void assign(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational Rational::from_decimal(std::string_view text) {
  const std::string s(text);
  std::size_t pos = 0;
  bool negative = false;
  if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) negative = s[pos++] == '-';
  __int128 mantissa = 0;
  int scale = 0;
  bool any_digit = false;
  bool in_fraction = false;
  for (; pos < s.size(); ++pos) {
    const char ch = s[pos];
    if (ch == '.' && !in_fraction) {
      in_fraction = true;
    } else if (ch >= '0' && ch <= '9') {
      mantissa = mantissa * 10 + (ch - '0');
      if (mantissa > INT64_MAX) throw std::overflow_error("decimal too long: " + s);
      if (in_fraction) ++scale;
      any_digit = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw std::invalid_argument("not a decimal: " + s);
  int exponent = 0;
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    exponent = std::atoi(s.c_str() + pos + 1);
    pos = s.size();
  }
  if (pos != s.size()) throw std::invalid_argument("not a decimal: " + s);
  exponent -= scale;
  __int128 num = negative ? -mantissa : mantissa;
  __int128 den = 1;
  constexpr __int128 lim = INT64_MAX;
  for (; exponent > 0; --exponent) {
    num *= 10;
    if (num > lim || num < -lim) throw std::overflow_error("decimal out of range: " + s);
  }
  for (; exponent < 0; ++exponent) {
    den *= 10;
    if (den > lim * 10) throw std::overflow_error("decimal out of range: " + s);
  }
  return make(num, den);
}

}  // namespace converged
