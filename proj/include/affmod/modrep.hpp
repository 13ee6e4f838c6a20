#ifndef AFFMOD_MODREP_HPP
#define AFFMOD_MODREP_HPP

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affmod/formal.hpp"
#include "affmod/liecore.hpp"
#include "affmod/poly.hpp"

namespace affmod {

/// Finite-dimensional module with one action matrix per algebra basis
/// element. When g0_only is set, only grade-0 actions are defined (the
/// module is a module over the fixed subalgebra, used as the top of an
/// induced module) and the remaining slots hold empty matrices.
struct FiniteModule {
  AlgebraPtr alg;
  int dim = 0;
  std::vector<SpMat> action;
  bool g0_only = false;

  /// rho applied to a coefficient vector; throws when a grade outside the
  /// defined range carries a nonzero coefficient.
  SpMat act(const Vec& coeffs) const;
};

/// Validates rho([a,b]) = rho(a)rho(b) - rho(b)rho(a) on all defined pairs.
FiniteModule make_finite_module(AlgebraPtr alg, std::vector<SpMat> action);
/// Same, with the action given only on grade-0 basis elements.
FiniteModule make_top_module(AlgebraPtr alg, int dim,
                             const std::map<int, SpMat>& grade0_action);
/// The natural representation as a module.
FiniteModule natural_module(const AlgebraPtr& alg);
/// One-dimensional module with zero action.
FiniteModule trivial_module(const AlgebraPtr& alg, bool g0_only);
/// Some action matrix is nonzero.
bool is_nontrivial(const FiniteModule& m);

/// Evaluation datum: a(n) acts on the base by sum_i root^(N n + i) rho(a_i)
/// over the homogeneous parts a_i of a. The root fixes the branch of
/// fractional powers of the nonzero point z = root^N.
struct EvaluationModule {
  FiniteModule base;
  Cyclo point;
  Cyclo root;
};

EvaluationModule make_evaluation_module(FiniteModule base, const Cyclo& point,
                                        const Cyclo& root);

SpMat evaluation_action(const EvaluationModule& e, const Vec& a, long n);
/// Generating series of a on the evaluation module: one depth-0 delta atom
/// at z per homogeneous part, with coefficient rho(a_i) and shift i. The
/// identity (x - z) * series = 0 holds by construction.
FormalDistribution evaluation_series(const EvaluationModule& e, const Vec& a);

/// One PBW basis vector of a truncated induced module: negative modes
/// (exponent numerator, basis index) sorted ascending, applied to a top
/// basis vector.
struct PbwMonomial {
  std::vector<std::pair<long, int>> factors;
  int top = 0;
};

struct TruncatedInducedModule {
  AlgebraPtr alg;
  Cyclo level;
  FiniteModule top;
  long depth_num = 0;  // D in numerator units (denominator N)
  std::vector<PbwMonomial> basis;
  std::map<std::pair<std::vector<std::pair<long, int>>, int>, int> index;
  std::vector<long> degrees;  // per basis vector, numerator units
};

struct ModeFamily;
using FamilyPtr = std::shared_ptr<const ModeFamily>;

/// A module presented through its mode operators: (basis element b, integer
/// n) evaluates to the matrix of b(n), whose exponent is n + grade(b)/N.
/// The evaluator is linear in the algebra argument via mode_mixed. Families
/// are immutable once built; the matrix cache is internal.
struct ModeFamily {
  AlgebraPtr alg;
  int dim = 0;
  Cyclo central;
  std::string provenance;  // "evaluation" | "induced" | "tensor" | "opaque"
  std::function<SpMat(int, long)> eval;

  /// Truncation metadata: when set, carrier vectors carry degrees (numerator
  /// units) in [0, depth_num] and operators drop components above depth_num,
  /// so identities are only asserted on safe windows.
  bool truncated = false;
  long depth_num = 0;
  std::vector<long> degrees;

  /// Declared exponent-numerator window on which the evaluator is defined
  /// (opaque provenance only; structural families have no limit).
  std::optional<std::pair<long, long>> opaque_window;

  std::shared_ptr<const EvaluationModule> eval_payload;
  std::shared_ptr<const TruncatedInducedModule> induced_payload;
  std::vector<FamilyPtr> tensor_factors;

  SpMat mode(int basis, long n) const;
  /// Mode at an exponent numerator e (requires e = grade(basis) mod N).
  SpMat mode_at(int basis, long e_num) const;
  /// a(n) for a mixed element: sum of the homogeneous parts' modes.
  SpMat mode_mixed(const Vec& a, long n) const;

  mutable std::map<std::pair<int, long>, SpMat> cache;
  mutable std::mutex cache_mutex;
};

FamilyPtr evaluation_family(EvaluationModule e);
FamilyPtr opaque_family(AlgebraPtr alg, int dim, const Cyclo& central,
                        std::function<SpMat(int, long)> eval, long window_lo,
                        long window_hi);

/// Tensor product with the Leibniz action a(n) -> sum_k 1x..xa(n)x..x1.
/// Central scalars add. At most one factor may be truncated; the product
/// inherits its depth and componentwise degrees. Carrier dimension above
/// max_dim is an error.
FamilyPtr tensor_module(std::vector<FamilyPtr> factors, int max_dim = 4096);

/// Induced module from a level and a g0 top, truncated at total negative
/// degree depth_num/N: PBW monomials in negative modes applied to top
/// vectors. Positive modes act by commuting through the monomial; summands
/// of degree above the truncation are dropped.
FamilyPtr build_induced(const AlgebraPtr& alg, const Cyclo& level,
                        FiniteModule top, long depth_num);

/// Basis of the degree-d component killed by every positive mode. Needs a
/// truncated carrier with degree metadata.
std::vector<Vec> singular_vectors(const FamilyPtr& m, long degree_num);

struct QuotientResult {
  FamilyPtr family;
  SpMat projection;  // parent coords -> quotient coords
  SpMat section;     // quotient coords -> parent representatives
  int removed_dim = 0;
};

/// Quotients out the submodule closure of all singular vectors found at
/// positive degrees, repeating until none remain. The top must be
/// irreducible as a g0-module.
QuotientResult irreducible_quotient_truncated(const FamilyPtr& m);

/// Direct sum; central scalars must agree.
FamilyPtr direct_sum(const FamilyPtr& a, const FamilyPtr& b);

struct IrreducibilityResult {
  bool irreducible = false;
  std::vector<Vec> witness;  // basis of a proper invariant subspace
  std::string detail;
};

/// Deterministic finite-carrier test: the joint kernel of the generating
/// modes is inspected first (an exact invariant subspace when proper), then
/// the closure of every carrier basis vector under the generating modes
/// must be the full space. window_num 0 picks a generating window from the
/// carrier: depth-based for truncated families, annihilator-recurrence
/// based otherwise.
IrreducibilityResult is_irreducible_finite(const FamilyPtr& m,
                                           long window_num = 0);

/// The scalar by which k acts. For evaluation provenance (including tensors
/// of evaluations) the value is checked to be zero and the residue identity
///   Res_{x2} p(x1)p(x2)x1^-1 (d/dx2) delta(x2/x1) = -p(x1)p'(x1)
/// is re-verified for the family's annihilator polynomial.
Cyclo central_charge(const FamilyPtr& m);

struct NilpotencyResult {
  std::optional<int> power;  // smallest p <= bound with a(n)^p v = 0
  bool inconclusive = false;
  std::string detail;
};

/// Exact local-nilpotency probe for an element of a verified nilpotent set.
/// On truncated carriers, powers whose intermediate degrees escape the safe
/// window yield inconclusive rather than a truncation artifact.
NilpotencyResult local_nilpotency_check(const FamilyPtr& m,
                                        const NilpotentSet& set, int elem,
                                        long n, const Vec& v, int bound);

struct ClassReport {
  bool restricted = false;
  bool evaluation_like = false;
  std::optional<Poly> e_poly;
  bool c_member = false;
  std::optional<Poly> c_poly;
  std::string status;  // "ok" or "inconclusive: ..."
  std::string evidence;
};

/// Category membership. Structural provenance is decided exactly:
/// evaluation tensors are evaluation-like with the product polynomial over
/// distinct points, induced modules are restricted, and a mixed tensor with
/// nontrivial evaluation factors lies strictly between. Opaque finite
/// carriers get a minimal-annihilator search over a bounded window; an
/// undetermined window reports inconclusive rather than a false flag.
ClassReport category_of(const FamilyPtr& m, long window_num = 0,
                        long degree_bound = 0);

struct BracketCheck {
  bool ok = true;
  long pairs_checked = 0;
  std::string detail;
};

/// Verifies [a(m), b(n)] = [a,b](m+n) + (m + grade(a)/N) <a,b>
/// delta_{m+n,0} k on all basis pairs over the exponent-numerator window.
/// On truncated carriers each pair is checked on the columns whose degree
/// keeps every intermediate inside the truncation; pairs with no such
/// columns are skipped. A window with nothing checkable is an error.
BracketCheck commutator_series_check(const FamilyPtr& m, long lo_num,
                                     long hi_num);

/// Leaf families of nested tensors; a non-tensor family is its own leaf.
std::vector<FamilyPtr> tensor_leaves(const FamilyPtr& m);

}  // namespace affmod

#endif
