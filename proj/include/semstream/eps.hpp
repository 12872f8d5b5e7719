#pragma once

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>

#include "semstream/error.hpp"

namespace semstream {

// Fraction of original pixels retained by a downscale, kept as an exact
// rational in (0, 1]. 1 means "full quality".
class Eps {
 public:
  constexpr Eps() = default;

  Eps(std::int64_t num, std::int64_t den) {
    if (den == 0) throw InvalidEps("eps denominator is zero");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num <= 0 || num > den) {
      throw InvalidEps("eps must lie in (0, 1], got " + std::to_string(num) +
                       "/" + std::to_string(den));
    }
    const auto g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
  }

  static Eps full() { return Eps{}; }

  // Accepts "a/b", a plain decimal ("0.0625") or an integer ("1").
  static Eps parse(std::string_view text) {
    const auto [num, den] = parse_rational(text);
    return Eps(num, den);
  }

  // Exact rational from "a/b", "a.bcd" or "a"; does not range-check.
  static std::pair<std::int64_t, std::int64_t> parse_rational(std::string_view text) {
    const auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
      return s;
    };
    text = trim(text);
    const std::string original(text);
    const auto parse_int = [&](std::string_view s) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw InvalidEps("cannot parse rational '" + original + "'");
      }
      return v;
    };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      const auto den = parse_int(trim(text.substr(slash + 1)));
      if (den == 0) throw InvalidEps("zero denominator in '" + original + "'");
      return {parse_int(trim(text.substr(0, slash))), den};
    }
    const auto dot = text.find('.');
    if (dot == std::string_view::npos) return {parse_int(text), 1};
    const auto int_part = text.substr(0, dot);
    const auto frac_part = text.substr(dot + 1);
    if (frac_part.size() > 15 || frac_part.empty() || frac_part.front() == '-' ||
        frac_part.front() == '+') {
      throw InvalidEps("cannot parse rational '" + original + "'");
    }
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
    const bool negative = !int_part.empty() && int_part.front() == '-';
    const std::int64_t whole = (int_part.empty() || int_part == "-") ? 0 : parse_int(int_part);
    const std::int64_t frac = parse_int(frac_part);
    const std::int64_t mag = (whole < 0 ? -whole : whole) * den + frac;
    return {negative ? -mag : mag, den};
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_full() const { return num_ == den_; }

  // Per-dimension scale factor sqrt(eps).
  double per_dim_factor() const {
    return is_full() ? 1.0 : std::sqrt(value());
  }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend bool operator==(const Eps& a, const Eps& b) = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

}  // namespace semstream
