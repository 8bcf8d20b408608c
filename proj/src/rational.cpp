#include "lobfeat/rational.hpp"

#include <cctype>
#include <algorithm>
#include <numeric>
#include <ostream>

#include "lobfeat/error.hpp"

namespace lobfeat {

namespace {

__extension__ using i128 = __int128;

Rational from_wide(i128 num, i128 den) {
  if (den == 0) throw DomainError("rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr i128 lim = INT64_MAX;
  if (num > lim || num < -lim || den > lim)
    throw DomainError("rational: 64-bit overflow");
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g > 1 ? num / g : num;
  den_ = g > 1 ? den / g : den;
}

Rational operator+(const Rational& a, const Rational& b) {
  return from_wide(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                   i128(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return from_wide(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                   i128(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return from_wide(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  return from_wide(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const i128 lhs = i128(a.num_) * b.den_;
  const i128 rhs = i128(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational Rational::parse(const std::string& text) {
  const auto bad = [&] { return DomainError("rational: cannot parse '" + text + "'"); };
  if (text.empty()) throw bad();
  if (auto slash = text.find('/'); slash != std::string::npos) {
    try {
      return Rational(std::stoll(text.substr(0, slash)),
                      std::stoll(text.substr(slash + 1)));
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  std::size_t pos = 0;
  bool neg = false;
  if (text[pos] == '+' || text[pos] == '-') neg = text[pos++] == '-';
  i128 mant = 0;
  int scale = 0;
  bool digits = false, dot = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mant = mant * 10 + (c - '0');
      if (dot) --scale;
      digits = true;
      if (mant > i128(INT64_MAX)) throw bad();
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!digits) throw bad();
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') throw bad();
    try {
      std::size_t used = 0;
      scale += std::stoi(text.substr(pos + 1), &used);
      if (pos + 1 + used != text.size()) throw bad();
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  if (scale < -18 || scale > 18) throw bad();
  i128 den = 1;
  for (; scale < 0; ++scale) den *= 10;
  for (; scale > 0; --scale) mant *= 10;
  return from_wide(neg ? -mant : mant, den);
}

std::string Rational::str() const {
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) d /= 2, ++twos;
  while (d % 5 == 0) d /= 5, ++fives;
  if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  const int places = std::max(twos, fives);
  if (places == 0) return std::to_string(num_);
  i128 p10 = 1;
  for (int i = 0; i < places; ++i) p10 *= 10;
  const i128 scaled = i128(num_) * p10 / den_;  // exact: den_ divides 10^places
  const bool neg = scaled < 0;
  i128 mag = neg ? -scaled : scaled;
  std::string frac(static_cast<std::size_t>(places), '0');
  for (int i = places - 1; i >= 0; --i) {
    frac[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(mag % 10));
    mag /= 10;
  }
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return (neg ? "-" : "") + std::to_string(static_cast<long long>(mag)) +
         (frac.empty() ? "" : "." + frac);
}

std::ostream& operator<<(std::ostream& os, const Rational& r) {
  return os << r.str();
}

}  // namespace lobfeat
