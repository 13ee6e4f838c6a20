#ifndef AFFMOD_LIECORE_HPP
#define AFFMOD_LIECORE_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affmod/fracexp.hpp"
#include "affmod/matrix.hpp"

namespace affmod {

/// Finite-dimensional Lie algebra with a chosen basis, structure constants,
/// invariant bilinear form, and a Z/N grading coming from an automorphism
/// eigenspace decomposition. All axioms are validated on construction:
/// antisymmetry, Jacobi, form symmetry/invariance/nondegeneracy, bracket
/// grading [g_i, g_j] in g_{i+j}, and form grading <g_i, g_j> = 0 unless
/// i + j = 0 mod N.
struct GradedLieAlgebra {
  const CycloField* field = nullptr;
  int order = 1;  // N
  int dim = 0;
  std::string name;   // "sl2", "sl3", or "custom"
  std::string twist;  // "identity", "inner", "diagram", or "custom"
  std::vector<std::string> basis_names;
  std::vector<int> grades;                // per basis element, in [0, N)
  std::vector<std::vector<Vec>> bracket;  // bracket[a][b] = coefficient vector
  std::vector<Vec> gram;                  // dense N x N form matrix
  // Faithful matrix realization (natural representation), when available.
  std::vector<SpMat> natural_rep;
  int natural_dim = 0;

  Vec bracket_vec(const Vec& a, const Vec& b) const;
  Cyclo form(const Vec& a, const Vec& b) const;
  /// Grade of a homogeneous element; nullopt for 0 or mixed grades.
  std::optional<int> homogeneous_grade(const Vec& v) const;
  /// Realizes a coefficient vector in the natural representation.
  SpMat natural_matrix(const Vec& v) const;
  Vec basis_vec(int i) const { return vec_unit(field, dim, i); }
  int basis_index(const std::string& name) const;
};

using AlgebraPtr = std::shared_ptr<const GradedLieAlgebra>;

/// Validates all invariants and returns the algebra; throws Error with the
/// failing pair/triple on any violation.
AlgebraPtr make_graded_algebra(GradedLieAlgebra g);

struct FiniteAutomorphism {
  SpMat matrix;  // action on basis coefficient vectors
  int order;
};

/// Ungraded (order-1) built-in table: "sl2" or "sl3", with the natural
/// representation attached and the trace form (normalized so the longest
/// root has squared length 2).
AlgebraPtr builtin_algebra(const CycloField* field, const std::string& name);

/// Built-in automorphisms: "identity" (any algebra), "inner" for sl2
/// (conjugation by diag(1,-1)), "diagram" for sl3 (X -> -X^T).
FiniteAutomorphism builtin_automorphism(const GradedLieAlgebra& g,
                                        const std::string& name);

/// Decomposes g under sigma into eigenspaces of eps = zeta_M^(M/N) and
/// returns the regraded algebra over the eigenbasis. Validates sigma^N = id,
/// the automorphism property on all basis pairs, and form preservation.
/// Basis names survive when an eigenvector equals an original basis vector.
AlgebraPtr eigen_decompose(const AlgebraPtr& g, const FiniteAutomorphism& sigma);

/// Convenience: builtin_algebra + builtin_automorphism + eigen_decompose,
/// with the twist label stamped for table lookups.
AlgebraPtr builtin_graded_algebra(const CycloField* field,
                                  const std::string& algebra,
                                  const std::string& automorphism);

/// Verifies the candidate form is a nonzero scalar multiple of the stored
/// normalized gram and returns the normalized gram. Degenerate or
/// non-proportional input is an error.
std::vector<Vec> normalize_form(const GradedLieAlgebra& g,
                                const std::vector<Vec>& candidate);

/// Element of the twisted affine algebra: finite sum of terms
/// (basis element b, exponent num/N with num = grade(b) mod N) plus a
/// central coefficient.
struct AffineElement {
  AlgebraPtr alg;
  std::map<std::pair<long, int>, Cyclo> terms;  // (exponent numerator, basis)
  Cyclo central;

  explicit AffineElement(AlgebraPtr a)
      : alg(std::move(a)), central(alg->field) {}
  /// b tensor t^(n + grade(b)/N).
  static AffineElement term(AlgebraPtr a, int basis, long n,
                            const Cyclo& coeff);
  static AffineElement central_term(AlgebraPtr a, const Cyclo& coeff);
  void add_term(int basis, long exp_num, const Cyclo& coeff);
  bool is_zero() const;
  AffineElement operator+(const AffineElement& o) const;
  AffineElement scaled(const Cyclo& c) const;
  bool operator==(const AffineElement& o) const;
  std::string str() const;
};

/// The twisted affine bracket
///   [a x t^u, b x t^v] = [a,b] x t^(u+v) + u <a,b> delta_{u,-v} k,
/// extended bilinearly; k is central.
AffineElement affine_bracket(const AffineElement& x, const AffineElement& y);

/// Smallest p with ad(v)^p = 0, if p <= dim; nullopt otherwise.
std::optional<int> ad_nilpotency_index(const GradedLieAlgebra& g, const Vec& v);

struct NilpotentSet {
  std::vector<Vec> elements;
  std::vector<std::string> labels;
  int span_rank = 0;
  bool spans = false;      // span_rank == dim
  bool generates = false;  // Lie closure of the span is all of g
};

/// Homogeneous elements a with [a,a] = 0 and <a,a> = 0 (so all modes of a
/// commute with each other) that are ad-nilpotent, drawn from per-table
/// lists or from caller candidates for custom algebras. Every element is
/// re-verified; a failing table entry is an error. The set spans g whenever
/// such a span exists; for sl2 with the inner twist no homogeneous isotropic
/// element lies outside span{e, f}, so the maximal verified set has rank 2
/// and generates g via h = [e, f].
NilpotentSet nilpotent_spanning_set(
    const AlgebraPtr& g,
    const std::vector<Vec>& custom_candidates = {});

}  // namespace affmod

#endif
