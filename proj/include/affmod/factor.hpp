#ifndef AFFMOD_FACTOR_HPP
#define AFFMOD_FACTOR_HPP

#include <string>
#include <vector>

#include "affmod/formal.hpp"
#include "affmod/modrep.hpp"

namespace affmod {

/// Series with a membership certificate: a polynomial f with f(0) != 0
/// whose action removes every delta atom, so f * dist is an honest
/// lower-truncated series.
struct EbarElement {
  FormalDistribution dist;
  Poly certificate;
};

/// Validates the certificate before wrapping: f nonzero, f(0) != 0, and
/// f * dist has no atoms left.
EbarElement make_ebar_element(FormalDistribution dist, Poly certificate);

/// Generating series of the algebra element a on the carrier of m over the
/// exponent-numerator window [lo, hi]: the coefficient at numerator k is
/// the mode at -k - N. Delta atoms of nontrivial evaluation leaves are
/// attached structurally; the certificate is the carrier's annihilator
/// polynomial. Structural provenance only.
EbarElement rep_series(const FamilyPtr& m, const Vec& a, long lo_num,
                       long hi_num);

struct DistDecomposition {
  LaurentPart regular;          // the atom-free projection
  FormalDistribution singular;  // the atom part, killed by the certificate
};

/// Structural split dist = regular + singular; re-verifies that the
/// certificate annihilates the singular part exactly.
DistDecomposition decompose_dist(const EbarElement& e);

/// The atom-free projection computed from its defining formula: the series
/// expansion of 1/f at 0 multiplied onto f * dist, evaluated on the window.
/// Requires the window of f * dist to be bounded below exactly; f must be a
/// valid certificate with f(0) != 0 but need not be the stored one, so
/// running with f and with f * g checks well-definedness.
LaurentPart psi_R_via_formula(const EbarElement& e, const Poly& f,
                              long lo_num, long hi_num);

/// Coefficients beta_0..beta_r with
///   projection-mode(n) w = sum_i beta_i dist-mode(n + i N) w,
/// where mode m is the coefficient of x^{-(m+N)/N}. Built from the
/// expansion of 1/f truncated at the first index where f * dist * w has no
/// lower terms; the identity is re-verified exactly on w before returning.
std::vector<Cyclo> mode_connection(const EbarElement& e, long n_num,
                                   const Vec& w);

struct TransportReport {
  bool shape_ok = false;     // two-term delta shape for the originals
  bool recovery_ok = false;  // residue reconstruction of c0 and c1
  bool tilde_ok = false;     // the same shape for the atom-free projections
  long pairs_checked = 0;
  long pairs_skipped = 0;  // coefficients the windows do not determine
  std::string detail;
};

/// Verifies on the exponent-numerator window that
///   [a(x1), b(x2)] = c0(x2) d_i(x1, x2) + c1(x2) (d/dx2) d_i(x1, x2),
/// where d_i = x1^-1 (x2/x1)^(i/N) delta(x2/x1) and i = coset_num, which in
/// mode form reads [a(m), b(n)] = c0(m+n) + (m/N) c1(m+n-N); recovers c0
/// and c1 through the two residue formulas
///   Res_{x1} (x2/x1)^(-i/N) [a(x1), b(x2)] = c0(x2) + (i/N) x2^-1 c1(x2),
///   Res_{x1} (x1 - x2)(x2/x1)^(-i/N) [a(x1), b(x2)] = c1(x2);
/// and checks the same shape for the atom-free projections. A shape or
/// recovery mismatch throws, naming the failing residue. carrier supplies
/// truncation metadata for column filtering; c1 must be exact on the window
/// (the affine central term always is).
TransportReport commutator_transport(const EbarElement& a,
                                     const EbarElement& b, int coset_num,
                                     const EbarElement& c0,
                                     const EbarElement& c1, long lo_num,
                                     long hi_num,
                                     const FamilyPtr& carrier = nullptr);

struct FactorizedRep {
  FamilyPtr source;
  FamilyPtr piR;  // atom-free side; carries the central scalar
  FamilyPtr piE;  // atom side; central scalar zero
  Poly certificate;  // f with f(0) != 0 and f * piE-series = 0
  long restricted_bound_num = 0;  // piR modes vanish above this exponent
  ClassReport category;
};

/// Splits a module with an annihilator certificate into its lower-truncated
/// and evaluation parts, mode-wise additive with the central element kept
/// wholly on the lower-truncated side. Structural carriers split slot-wise:
/// nontrivial evaluation leaves to piE, everything else to piR, the
/// complementary slots replaced by zero actions. Opaque carriers
/// reconstruct the atom part from the annihilator recurrence, seeded at the
/// window bottom where the lower-truncated part has died out.
FactorizedRep factorize_rep(const FamilyPtr& m, long window_num = 0,
                            long degree_bound = 0);

struct FactorCheck {
  bool ok = false;
  long count = 0;
  std::string detail;
};

struct FactorReport {
  FactorCheck brackets;     // defining relations for piR and for piE
  FactorCheck cross;        // [piR(a)(m), piE(b)(n)] = 0
  FactorCheck additivity;   // source = piR + piE mode-wise
  FactorCheck restriction;  // piR vanishes above the bound; f * piE = 0
  FactorCheck nilpotency;   // spanning-set modes locally nilpotent, with
                            // the binomial split as a cross-check
  bool inconclusive = false;  // some nilpotency probes escaped the window
  bool all_ok() const {
    return brackets.ok && cross.ok && additivity.ok && restriction.ok &&
           nilpotency.ok;
  }
};

/// The five exactness checks on the exponent-numerator window. For opaque
/// carriers the window must keep doubled exponents inside the declared
/// window. Check independence is per (basis pair, mode pair); failures
/// report the offending modes and carrier column.
FactorReport verify_factorization(const FactorizedRep& F, long lo_num,
                                  long hi_num);

}  // namespace affmod

#endif
