#ifndef AFFMOD_FRACEXP_HPP
#define AFFMOD_FRACEXP_HPP

#include <numeric>
#include <sstream>
#include <string>

#include "affmod/cyclo.hpp"

namespace affmod {

/// Exponent in (1/den) * Z, kept as numerator over a fixed denominator.
/// Values are compared after reduction, but the stored denominator is the
/// ambient one (the order N of the twist) so windows line up mode by mode.
struct FracExp {
  long num = 0;
  int den = 1;

  FracExp() = default;
  FracExp(long n, int d) : num(n), den(d) {
    if (d <= 0) throw Error("exponent denominator must be positive");
  }
  static FracExp integer(long n) { return FracExp(n, 1); }

  /// Rescale to denominator d (must be a multiple of the reduced one).
  FracExp with_den(int d) const {
    if (d % den == 0) return FracExp(num * (d / den), d);
    FracExp r = reduced();
    if (d % r.den != 0)
      throw Error("exponent " + str() + " not representable over denominator " +
                  std::to_string(d));
    return FracExp(r.num * (d / r.den), d);
  }

  FracExp reduced() const {
    long g = std::gcd(num < 0 ? -num : num, static_cast<long>(den));
    if (g == 0) return FracExp(0, 1);
    return FracExp(num / g, static_cast<int>(den / g));
  }

  bool operator==(const FracExp& o) const {
    return num * static_cast<long>(o.den) == o.num * static_cast<long>(den);
  }
  bool operator!=(const FracExp& o) const { return !(*this == o); }
  bool operator<(const FracExp& o) const {
    return num * static_cast<long>(o.den) < o.num * static_cast<long>(den);
  }
  bool operator<=(const FracExp& o) const { return *this < o || *this == o; }

  FracExp operator+(const FracExp& o) const {
    if (den == o.den) return FracExp(num + o.num, den);
    long l = std::lcm(static_cast<long>(den), static_cast<long>(o.den));
    return FracExp(num * (l / den) + o.num * (l / o.den), static_cast<int>(l));
  }
  FracExp operator-() const { return FracExp(-num, den); }
  FracExp operator-(const FracExp& o) const { return *this + (-o); }

  bool is_integer() const { return num % den == 0; }
  long floor() const {
    long q = num / den;
    if (num % den != 0 && num < 0) --q;
    return q;
  }

  Rational as_rational() const { return Rational(num, den); }

  std::string str() const {
    FracExp r = reduced();
    std::ostringstream os;
    os << r.num;
    if (r.den != 1) os << "/" << r.den;
    return os.str();
  }
};

/// z^e for e = num/den: requires a chosen den-th root r of z; returns r^num.
inline Cyclo frac_power(const Cyclo& root, const FracExp& e) {
  return root.pow(e.num);
}

/// Falling factorial e(e-1)...(e-d+1) as a field element.
inline Cyclo falling_factorial(const CycloField* F, const FracExp& e, int d) {
  Cyclo acc(F, 1L);
  for (int j = 0; j < d; ++j)
    acc *= Cyclo(F, Rational(e.num - static_cast<long>(j) * e.den, e.den));
  return acc;
}

/// Binomial coefficient C(e, k) for a fractional (or negative) upper index.
inline Cyclo frac_binomial(const CycloField* F, const FracExp& e, long k) {
  if (k < 0) return Cyclo(F);
  Cyclo acc(F, 1L);
  for (long j = 0; j < k; ++j) {
    acc *= Cyclo(F, Rational(e.num - j * e.den, e.den));
    acc *= Cyclo(F, Rational(1, j + 1));
  }
  return acc;
}

inline Rational binomial_rational(long n, long k) {
  if (k < 0) return Rational(0);
  Rational acc(1);
  for (long j = 0; j < k; ++j) {
    acc *= Rational(n - j);
    acc /= Rational(j + 1);
  }
  return acc;
}

}  // namespace affmod

#endif
