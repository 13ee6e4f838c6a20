#ifndef AFFMOD_FORMAL_HPP
#define AFFMOD_FORMAL_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affmod/fracexp.hpp"
#include "affmod/matrix.hpp"
#include "affmod/poly.hpp"

namespace affmod {

/// One symbolic delta-function term with operator coefficient:
///
///   coeff * (d/dx)^deriv [ x^-1 (z/x)^(shift/N) delta(z/x) ]
///
/// where delta(z/x) = sum_n z^n x^-n and fractional powers of z are taken
/// via the stored root (root^N = z). The exponent support lies on the coset
/// k = -shift (mod N) of numerators k over denominator N.
struct DeltaAtom {
  Cyclo point;
  Cyclo root;
  int shift = 0;
  int deriv = 0;
  SpMat coeff;
};

/// Window-limited regular part of a distribution: exponent numerators k over
/// a fixed denominator, entries stored for k in [lo, hi]. Outside the window
/// coefficients are unknown, unless the corresponding exact flag asserts
/// they all vanish.
struct LaurentPart {
  int den = 1;
  long lo = 0, hi = -1;  // empty window when lo > hi
  bool exact_below = false;
  bool exact_above = false;
  std::map<long, SpMat> entries;  // nonzero coefficients only

  bool window_empty() const { return lo > hi; }
  bool is_identically_zero() const {
    return exact_below && exact_above && entries.empty();
  }
};

/// Formal distribution in x^(1/N) with matrix coefficients: a window-limited
/// regular part plus a finite list of delta atoms kept in canonical order
/// (points sorted, shifts and derivative orders merged, zero terms dropped).
class FormalDistribution {
 public:
  FormalDistribution(const CycloField* field, int den, int rows, int cols);

  /// Identically zero distribution (empty exact window, no atoms).
  static FormalDistribution zero(const CycloField* field, int den, int rows,
                                 int cols);
  /// A single delta atom; shift is reduced mod den, point must be nonzero
  /// and root^den must equal point.
  static FormalDistribution atom(const CycloField* field, int den,
                                 const Cyclo& point, const Cyclo& root,
                                 int shift, int deriv, const SpMat& coeff);
  /// Pure regular part.
  static FormalDistribution regular(const CycloField* field, LaurentPart part,
                                    int rows, int cols);

  const CycloField* field() const { return field_; }
  int den() const { return regular_.den; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const LaurentPart& regular_part() const { return regular_; }
  const std::vector<DeltaAtom>& atoms() const { return atoms_; }

  bool has_atoms() const { return !atoms_.empty(); }
  /// Regular-part coefficient at exponent numerator k if determinable.
  std::optional<SpMat> regular_coeff(long k) const;
  /// Full coefficient (regular + atoms) at exponent numerator k, when the
  /// regular part determines it.
  std::optional<SpMat> coeff(long k) const;

  FormalDistribution operator+(const FormalDistribution& o) const;
  FormalDistribution operator-(const FormalDistribution& o) const;
  FormalDistribution scaled(const Cyclo& c) const;
  /// Multiplication by x^(j/den).
  FormalDistribution shifted(long j) const;
  /// Drops all delta atoms, keeping the regular part.
  FormalDistribution without_atoms() const;
  /// Keeps only the delta atoms.
  FormalDistribution atoms_only() const;

  std::string str() const;

 private:
  friend FormalDistribution apply_polynomial(const Poly&,
                                             const FormalDistribution&);
  void canonicalize_atoms();

  const CycloField* field_;
  int rows_, cols_;
  LaurentPart regular_;
  std::vector<DeltaAtom> atoms_;
};

/// Coefficient of the atom at exponent numerator k (zero off its coset).
SpMat atom_coeff(const CycloField* field, int den, const DeltaAtom& a, long k);

/// Expansion of the atom's coefficients over a numerator window [lo, hi].
LaurentPart expand_atom(const CycloField* field, int den, const DeltaAtom& a,
                        long lo, long hi);

/// p(x) * A(x). Atoms collapse through the Leibniz cascade
///   p * D^(d) = sum_s (-1)^s C(d,s) p^(s)(z) D^(d-s),
/// so (x - z)^(d+1) annihilates a depth-d atom at z.
FormalDistribution apply_polynomial(const Poly& p, const FormalDistribution& a);

/// Coefficient of x^-1. Throws when the window does not determine it.
SpMat residue(const FormalDistribution& a);

struct DistCompare {
  bool equal = true;
  std::string detail;  // first discrepancy, empty when equal
};

/// Structural equality: canonical atom lists must match and the regular
/// parts must agree wherever both are determined (exact-zero flags count as
/// determined). Returns the first discrepancy found.
DistCompare dist_equal(const FormalDistribution& a, const FormalDistribution& b);

/// Binomial coefficients C(e, k) for k = 0..terms-1; the expansion of
/// (1 + u)^e as sum_k C(e, k) u^k.
std::vector<Cyclo> binomial_expand(const CycloField* field, const FracExp& e,
                                   long terms);

/// Series expansion at 0 of num/den through x^(terms-1); den(0) != 0.
std::vector<Cyclo> iota_expand(const Poly& num, const Poly& den, int terms);

/// Finite-summation form of the residue pairing
///   Res_{x2} p(x1) p(x2) x1^-1 (d/dx2) delta(x2/x1),
/// returned as a polynomial in x1. Equals -p(x1) p'(x1).
Poly delta_derivative_residue(const Poly& p);

}  // namespace affmod

#endif
