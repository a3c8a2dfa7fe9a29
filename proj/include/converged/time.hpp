#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace converged {

// All times are integer nanoseconds. Signed so that clock offsets between the
// 5G and TSN domains can be represented directly.
using TimeNs = std::int64_t;

inline constexpr TimeNs kNsPerUs = 1'000;
inline constexpr TimeNs kNsPerMs = 1'000'000;
inline constexpr TimeNs kNsPerSec = 1'000'000'000;

// Largest hyper-period accepted anywhere in the model.
inline constexpr TimeNs kMaxHyperPeriod = TimeNs{1} << 62;

class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floor division that rounds toward negative infinity for either sign.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return -floor_div(-a, b);
}

// Non-negative remainder.
constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

inline TimeNs checked_lcm(TimeNs a, TimeNs b) {
  if (a <= 0 || b <= 0) throw std::invalid_argument("lcm of non-positive period");
  const TimeNs g = std::gcd(a, b);
  const __int128 l = static_cast<__int128>(a / g) * b;
  if (l > kMaxHyperPeriod) {
    throw OverflowError("hyper-period exceeds 2^62 ns (" + std::to_string(a) + ", " +
                        std::to_string(b) + ")");
  }
  return static_cast<TimeNs>(l);
}

// Least common multiple of a set of periods. Throws on non-positive input or
// when the result would exceed 2^62 ns.
inline TimeNs hyper_period(std::span<const TimeNs> periods) {
  if (periods.empty()) throw std::invalid_argument("hyper_period of empty set");
  TimeNs acc = 1;
  for (TimeNs p : periods) acc = checked_lcm(acc, p);
  return acc;
}

// Serialization time of a frame on a wired link, rounded up to whole ns.
inline TimeNs transmission_span(std::int64_t length_bytes, std::int64_t rate_bps) {
  if (rate_bps <= 0) throw std::invalid_argument("link rate must be positive");
  const __int128 bits_ns = static_cast<__int128>(length_bytes) * 8 * kNsPerSec;
  return static_cast<TimeNs>((bits_ns + rate_bps - 1) / rate_bps);
}

}  // namespace converged
