#ifndef AFFMOD_POLY_HPP
#define AFFMOD_POLY_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affmod/cyclo.hpp"

namespace affmod {

/// Dense univariate polynomial over a cyclotomic field, coefficients lowest
/// first with no trailing zeros. The zero polynomial has an empty coefficient
/// vector and degree -1.
class Poly {
 public:
  explicit Poly(const CycloField* field) : field_(field) {}
  Poly(const CycloField* field, std::vector<Cyclo> coeffs);

  static Poly constant(const CycloField* field, const Cyclo& c);
  static Poly x(const CycloField* field);
  /// Monic product of (x - z) over the given points.
  static Poly from_roots(const CycloField* field, const std::vector<Cyclo>& roots);

  const CycloField* field() const { return field_; }
  int degree() const { return static_cast<int>(coeff_.size()) - 1; }
  bool is_zero() const { return coeff_.empty(); }
  const std::vector<Cyclo>& coeffs() const { return coeff_; }
  /// Coefficient of x^k (zero outside the stored range).
  Cyclo coeff(int k) const;
  Cyclo leading() const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly scaled(const Cyclo& c) const;
  bool operator==(const Poly& o) const { return coeff_ == o.coeff_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  /// Quotient and remainder; divisor must be nonzero.
  std::pair<Poly, Poly> divmod(const Poly& d) const;
  Poly derivative() const;
  Cyclo eval(const Cyclo& z) const;
  Poly monic() const;
  /// p(x) -> x^k * p(x), k >= 0.
  Poly shifted_up(int k) const;

  std::string str(const std::string& var = "x") const;

 private:
  void trim();

  const CycloField* field_;
  std::vector<Cyclo> coeff_;
};

/// Monic gcd via the Euclidean algorithm; gcd(0, 0) = 0.
Poly gcd_monic(const Poly& a, const Poly& b);

/// Square-free part p / gcd(p, p'), monic. Input must be nonzero.
Poly squarefree_part(const Poly& p);

/// Lagrange interpolation basis for pairwise distinct points: projectors
/// p_k with p_k(z_j) = delta_{kj} and deg p_k < #points.
std::vector<Poly> lagrange_projectors(const CycloField* field,
                                      const std::vector<Cyclo>& points);

/// Coefficients of the expansion of 1/p(x) as a power series around x = 0,
/// through degree `terms - 1`. Requires p(0) != 0 (strip powers of x first).
std::vector<Cyclo> series_inverse(const Poly& p, int terms);

}  // namespace affmod

#endif
