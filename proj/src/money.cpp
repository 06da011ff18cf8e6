#include "infersim/money.hpp"

#include <algorithm>
#include <cmath>

#include "infersim/errors.hpp"

namespace infersim {

Money::Rep round_div(Money::Rep a, Money::Rep b) {
  const bool neg = a < 0;
  const Money::Rep abs_a = neg ? -a : a;
  Money::Rep q = abs_a / b;
  const Money::Rep r = abs_a % b;
  if (r * 2 >= b) ++q;
  return neg ? -q : q;
}

Money Money::parse(std::string_view text) {
  if (text.empty()) throw ValidationError("empty currency literal");
  std::size_t i = 0;
  bool neg = false;
  if (text[0] == '-' || text[0] == '+') {
    neg = text[0] == '-';
    ++i;
  }
  Rep whole = 0;
  Rep frac = 0;
  int frac_digits = 0;
  bool seen_digit = false;
  bool in_frac = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.') {
      if (in_frac) throw ValidationError("bad currency literal: " + std::string(text));
      in_frac = true;
      continue;
    }
    if (c == 'e' || c == 'E') {
      // Exponent form, as produced for very small JSON numbers ("1.5e-05").
      const int exp = std::stoi(std::string(text.substr(i + 1)));
      Money base = parse(text.substr(0, i));
      Rep v = base.atto_;
      if (exp < 0) {
        for (int k = 0; k < -exp; ++k) {
          if (v % 10 != 0) throw ValidationError("currency literal exceeds 18 fractional digits: " + std::string(text));
          v /= 10;
        }
      } else {
        for (int k = 0; k < exp; ++k) v *= 10;
      }
      return from_atto(v);
    }
    if (c < '0' || c > '9') throw ValidationError("bad currency literal: " + std::string(text));
    seen_digit = true;
    if (in_frac) {
      if (++frac_digits > kFractionDigits) {
        if (c != '0') throw ValidationError("currency literal exceeds 18 fractional digits: " + std::string(text));
        continue;
      }
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
    }
  }
  if (!seen_digit) throw ValidationError("bad currency literal: " + std::string(text));
  for (int k = std::min(frac_digits, kFractionDigits); k < kFractionDigits; ++k) frac *= 10;
  const Rep v = whole * kScale + frac;
  return from_atto(neg ? -v : v);
}

Money Money::from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse(j.get<std::string>());
  if (j.is_number_integer()) return from_units(j.get<std::int64_t>());
  if (j.is_number()) return parse(j.dump());
  throw ValidationError("expected a currency value, got " + j.dump());
}

double Money::to_double() const {
  const bool neg = atto_ < 0;
  const Rep a = neg ? -atto_ : atto_;
  const double v = static_cast<double>(static_cast<std::uint64_t>(a / kScale)) +
                   static_cast<double>(static_cast<std::uint64_t>(a % kScale)) / 1e18;
  return neg ? -v : v;
}

namespace {

std::string rep_to_string(Money::Rep v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace

std::string Money::to_string() const {
  const bool neg = atto_ < 0;
  const Rep a = neg ? -atto_ : atto_;
  std::string frac = rep_to_string(a % kScale);
  frac.insert(0, kFractionDigits - frac.size(), '0');
  return (neg ? "-" : "") + rep_to_string(a / kScale) + "." + frac;
}

std::string Money::to_fixed(int digits) const {
  Rep step = 1;
  for (int k = digits; k < kFractionDigits; ++k) step *= 10;
  const Rep rounded = round_div(atto_, step);
  const bool neg = rounded < 0;
  const Rep a = neg ? -rounded : rounded;
  Rep unit = 1;
  for (int k = 0; k < digits; ++k) unit *= 10;
  std::string out = (neg ? "-" : "") + rep_to_string(a / unit);
  if (digits > 0) {
    std::string frac = rep_to_string(a % unit);
    frac.insert(0, digits - frac.size(), '0');
    out += "." + frac;
  }
  return out;
}

Money Money::mul_div(Rep num, Rep den) const { return from_atto(round_div(atto_ * num, den)); }

}  // namespace infersim
