#ifndef AFFMOD_CLASSIFY_HPP
#define AFFMOD_CLASSIFY_HPP

#include <optional>
#include <string>
#include <vector>

#include "affmod/liecore.hpp"
#include "affmod/modrep.hpp"
#include "affmod/poly.hpp"

namespace affmod {

/// Certificate that a point is forced to be a root of every annihilator:
/// the slot operator of `basis` at `point` sends `vector` to something
/// nonzero, so any annihilating polynomial must vanish at the point.
struct MinimalityWitness {
  Cyclo point;
  int basis = 0;
  Vec vector;
};

struct AnnihilatorResult {
  Poly p;
  std::vector<MinimalityWitness> witnesses;
  std::string evidence;
};

/// Least-degree monic p with sum_k p_k a(e + kN) = 0 for every basis mode
/// over the exponent window, found by an ascending-degree exact solve.
/// Requires the carrier to pass the evaluation-category test. The roots
/// are located over the small cyclotomic-integer lattice and each one is
/// certified by a minimality witness. window_num 0 means the declared
/// window for opaque carriers and 2*dim*N plus a guard otherwise;
/// degree_bound 0 caps the search at the carrier dimension.
AnnihilatorResult minimal_annihilator(const FamilyPtr& m, long window_num = 0,
                                      long degree_bound = 0);

/// Roots of the square-free part of p, recovered by exact trial division
/// over the caller's candidates plus the lattice a + b*zeta with
/// |a|, |b| <= 8. Requires p(0) != 0; the result is sorted canonically.
/// An incomplete split reports the unresolved factor.
std::vector<Cyclo> recover_points(const Poly& p,
                                  const std::vector<Cyclo>& candidates = {});

/// One recovered tensor slot: the evaluation point, the chosen order-th
/// root fixing the fractional powers, and the slot module.
struct EvaluationSlot {
  Cyclo point;
  Cyclo root;
  FiniteModule factor;
};

struct RecoveredFactors {
  std::vector<EvaluationSlot> slots;
  SpMat intertwiner;
  std::string evidence;
};

/// Splits a carrier in the evaluation category into irreducible evaluation
/// slots at the given pairwise distinct nonzero points. For each point the
/// slot operator a -> root^{-grade} sum_s c_s a(grade + sN), with c the
/// Lagrange projector at the point, is validated as an algebra action; the
/// slot actions must commute pairwise and reassemble every mode as
/// sum_j root_j^e sigma_j(a). An irreducible invariant subspace of each
/// slot action is extracted, and the tensor of the recovered slots is
/// matched to the carrier by an explicit invertible intertwiner.
RecoveredFactors recover_factors(const FamilyPtr& m,
                                 const std::vector<Cyclo>& points,
                                 long window_num = 0);

/// Evaluates a loop element at the point along the root branch: the term
/// b tensor t^{u/N} maps to root^u b and the central term maps to zero.
/// Requires root^N = point and every exponent on its element's coset.
Vec evaluation_isomorphism(const AffineElement& x, const Cyclo& point,
                           const Cyclo& root);

/// Checks that loop evaluation is a Lie homomorphism that kills multiples
/// of (t - point): for all basis pairs and exponent numerators in the
/// window it verifies phi[X, Y] = [phi X, phi Y] and that multiplying by t
/// scales the value by the point. Returns the number of identities
/// checked; any mismatch throws.
long loop_evaluation_check(const AlgebraPtr& alg, const Cyclo& point,
                           const Cyclo& root, long lo_num, long hi_num);

/// Invertible map P with P rho_a(b) = rho_b(b) P for every basis element
/// acting on both sides, or nullopt. Top modules compare on grade 0 only.
std::optional<SpMat> module_isomorphism(const FiniteModule& a,
                                        const FiniteModule& b);

/// Invertible map intertwining every mode of the two families over the
/// exponent window, or nullopt. Centrals must agree; opaque windows clamp
/// the range and an empty checkable range is an error.
std::optional<SpMat> family_isomorphism(const FamilyPtr& a,
                                        const FamilyPtr& b, long lo_num,
                                        long hi_num);

/// True iff the two carriers classify to the same evaluation data: equal
/// minimal annihilators and, point by point, isomorphic slot modules.
bool modules_isomorphic_E(const FamilyPtr& m1, const FamilyPtr& m2,
                          long window_num = 0);

/// The lower-truncated side of a classification: the level, the top as a
/// grade-0 module, and the truncation depth. trivial marks the absence of
/// a restricted factor (one-dimensional zero action, level zero).
struct RestrictedDescriptor {
  Cyclo level;
  FiniteModule top;
  long depth_num = 0;
  bool trivial = false;
};

struct ClassificationResult {
  RestrictedDescriptor restricted;
  std::vector<EvaluationSlot> evaluation;
  std::vector<int> permutation;
  SpMat intertwiner;
  std::string evidence;
};

/// Full classification of a certified middle-category carrier: factorize
/// into the restricted and evaluation parts, recover the annihilator, its
/// points and the slot modules, extract the level and the top from the
/// degree-0 singular space of the restricted part, then rebuild the model
/// module and validate with an invertible mode intertwiner back onto the
/// carrier. evaluation is sorted by point; permutation records, when the
/// carrier exposes its tensor slots, where each input slot landed. Any
/// stage failure throws with the stage named.
ClassificationResult classify_in_C(const FamilyPtr& m, long window_num = 0,
                                   const std::vector<Cyclo>& candidates = {});

}  // namespace affmod

#endif
