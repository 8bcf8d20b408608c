#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace lobfeat {

/// Exact fraction of two 64-bit integers, kept normalized (den > 0,
/// gcd(num, den) == 1). Used for mid-prices and other book-derived ratios
/// so the book state never picks up floating-point drift.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  /// Parses "a", "a/b" or a finite decimal such as "2e-5" or "0.00002".
  static Rational parse(const std::string& text);

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a,
                                          const Rational& b);

  /// Shortest exact decimal when the denominator is 2^a 5^b, else "p/q".
  std::string str() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

}  // namespace lobfeat
