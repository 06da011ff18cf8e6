#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace infersim {

// Exact fixed-point currency with 18 fractional digits.
//
// Every billing operation rounds once (half away from zero) to the atto unit,
// after which sums are plain integer additions: totals do not depend on the
// order in which invocations or instances are accumulated.
class Money {
 public:
  using Rep = __int128;
  static constexpr int kFractionDigits = 18;
  static constexpr Rep kScale = static_cast<Rep>(1'000'000'000'000'000'000LL);

  constexpr Money() = default;

  static constexpr Money from_atto(Rep atto) {
    Money m;
    m.atto_ = atto;
    return m;
  }
  static constexpr Money from_units(std::int64_t units) { return from_atto(static_cast<Rep>(units) * kScale); }

  // Parses a plain decimal literal ("0.0000166667", "-3", "12.5").
  // Digits beyond 18 fractional places are rejected rather than rounded.
  static Money parse(std::string_view text);

  // Accepts a JSON string or number. Numbers go through their shortest
  // round-trip decimal form, so 0.096 parses as exactly 0.096.
  static Money from_json(const nlohmann::json& j);

  constexpr Rep atto() const { return atto_; }
  double to_double() const;

  // Canonical form: always 18 fractional digits, e.g. "0.096000000000000000".
  std::string to_string() const;
  // Rounded for display/CSV.
  std::string to_fixed(int digits) const;

  // this * num / den, rounded half away from zero. den must be positive.
  Money mul_div(Rep num, Rep den) const;

  constexpr Money operator+(Money o) const { return from_atto(atto_ + o.atto_); }
  constexpr Money operator-(Money o) const { return from_atto(atto_ - o.atto_); }
  constexpr Money& operator+=(Money o) {
    atto_ += o.atto_;
    return *this;
  }
  constexpr Money operator*(std::int64_t k) const { return from_atto(atto_ * k); }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  Rep atto_ = 0;
};

// Rounded quotient a / b (half away from zero), b > 0.
Money::Rep round_div(Money::Rep a, Money::Rep b);

inline void to_json(nlohmann::json& j, const Money& m) { j = m.to_string(); }
inline void to_json(nlohmann::ordered_json& j, const Money& m) { j = m.to_string(); }

}  // namespace infersim
