#ifndef AFFMOD_CYCLO_HPP
#define AFFMOD_CYCLO_HPP

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace affmod {

using Rational = mpq_class;

/// Error type for all exact-arithmetic and structural failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The cyclotomic field Q(zeta_M), presented as Q[x] / Phi_M(x).
///
/// Field objects are interned per modulus and live for the whole process, so
/// values can hold a raw pointer. Phi_M is computed once by dividing x^M - 1
/// by the cyclotomic polynomials of the proper divisors of M.
class CycloField {
 public:
  /// Interned field instance for modulus M (M >= 1). Thread-safe.
  static const CycloField* get(int modulus);

  int modulus() const { return modulus_; }
  /// Degree phi(M) of the extension.
  int degree() const { return degree_; }
  /// Coefficients of Phi_M, lowest first, monic, length degree()+1.
  const std::vector<Rational>& min_poly() const { return min_poly_; }
  /// zeta^(degree+j) reduced to the power basis, for j in [0, degree-1).
  const std::vector<std::vector<Rational>>& reduction_rows() const { return reduction_; }

 private:
  explicit CycloField(int modulus);

  int modulus_;
  int degree_;
  std::vector<Rational> min_poly_;
  std::vector<std::vector<Rational>> reduction_;
};

/// An element of Q(zeta_M) in canonical form: a polynomial in zeta of degree
/// < phi(M). Immutable in spirit; arithmetic returns new values. Two values
/// are equal iff their coefficient vectors are equal (canonical form).
class Cyclo {
 public:
  Cyclo() : field_(nullptr) {}
  explicit Cyclo(const CycloField* field)
      : field_(field), coeff_(field->degree(), Rational(0)) {}
  Cyclo(const CycloField* field, const Rational& r);
  Cyclo(const CycloField* field, long n);

  /// zeta_M^power (power may be any integer).
  static Cyclo zeta(const CycloField* field, long power = 1);
  /// Construct from a coefficient vector (reduced if longer than phi(M)).
  static Cyclo from_coeffs(const CycloField* field, std::vector<Rational> coeffs);

  const CycloField* field() const { return field_; }
  const std::vector<Rational>& coeffs() const { return coeff_; }

  bool is_zero() const;
  bool is_rational() const;
  /// The rational part; throws unless is_rational().
  Rational rational_value() const;

  Cyclo operator-() const;
  Cyclo operator+(const Cyclo& o) const;
  Cyclo operator-(const Cyclo& o) const;
  Cyclo operator*(const Cyclo& o) const;
  /// Field inverse; throws Error on zero.
  Cyclo inverse() const;
  Cyclo operator/(const Cyclo& o) const { return *this * o.inverse(); }
  Cyclo& operator+=(const Cyclo& o) { return *this = *this + o; }
  Cyclo& operator-=(const Cyclo& o) { return *this = *this - o; }
  Cyclo& operator*=(const Cyclo& o) { return *this = *this * o; }

  /// Integer power, negative allowed for nonzero values.
  Cyclo pow(long e) const;

  bool operator==(const Cyclo& o) const;
  bool operator!=(const Cyclo& o) const { return !(*this == o); }
  /// Deterministic total order (lexicographic on coefficients); used only
  /// for canonical sorting, it has no arithmetic meaning.
  bool operator<(const Cyclo& o) const;

  /// Exact display form, e.g. "1/2", "z", "-1+2*z^3" (z = zeta_M).
  std::string str() const;

 private:
  void check_same_field(const Cyclo& o) const;

  const CycloField* field_;
  std::vector<Rational> coeff_;
};

inline Cyclo operator*(const Rational& r, const Cyclo& c) {
  return Cyclo(c.field(), r) * c;
}

std::string rational_str(const Rational& r);

}  // namespace affmod

#endif
