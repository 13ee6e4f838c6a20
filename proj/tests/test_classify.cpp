#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "affmod/classify.hpp"
#include "affmod/factor.hpp"
#include "testutil.hpp"

using namespace affmod;

namespace {

EvaluationModule eval_at(const AlgebraPtr& g, const Cyclo& root) {
  return make_evaluation_module(natural_module(g), root.pow(g->order), root);
}

FamilyPtr small_induced(const AlgebraPtr& g, long depth_num) {
  return build_induced(g, Cyclo(g->field, 1L), trivial_module(g, true),
                       depth_num);
}

FamilyPtr opaque_wrap(const FamilyPtr& m, long lo, long hi) {
  return opaque_family(
      m->alg, m->dim, m->central,
      [m](int b, long n) { return m->mode(b, n); }, lo, hi);
}

SpMat invert(const SpMat& p) {
  const CycloField* F = p.field();
  const int n = p.rows();
  SpMat out(F, n, n);
  for (int j = 0; j < n; ++j) {
    auto col = solve_linear(p, vec_unit(F, n, j));
    if (!col) throw Error("matrix is singular");
    for (int i = 0; i < n; ++i)
      if (!(*col)[i].is_zero()) out.set(i, j, (*col)[i]);
  }
  return out;
}

SpMat random_invertible(testutil::Rng& rng, const CycloField* F, int n) {
  for (int tries = 0; tries < 64; ++tries) {
    SpMat p(F, n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const long v = rng.pick(-3, 3);
        if (v != 0) p.set(i, j, Cyclo(F, v));
      }
    if (rank_of(p) == n) return p;
  }
  return SpMat::identity(F, n);
}

/// Independent recomputation of the operator behind a minimality witness:
/// sum_s c_s a(grade + sN) with c the Lagrange projector at pts[j].
SpMat witness_operator(const FamilyPtr& m, const std::vector<Cyclo>& pts,
                       size_t j, int basis) {
  const CycloField* F = m->alg->field;
  const long N = m->alg->order;
  const auto proj = lagrange_projectors(F, pts);
  const long gr = m->alg->grades[basis];
  SpMat t(F, m->dim, m->dim);
  for (size_t s = 0; s < pts.size(); ++s) {
    const Cyclo c = proj[j].coeff(static_cast<int>(s));
    if (!c.is_zero())
      t = t + m->mode_at(basis, gr + static_cast<long>(s) * N).scaled(c);
  }
  return t;
}

FiniteModule adjoint_module(const AlgebraPtr& g) {
  const CycloField* F = g->field;
  std::vector<SpMat> ad;
  for (int b = 0; b < g->dim; ++b) {
    SpMat mb(F, g->dim, g->dim);
    for (int c = 0; c < g->dim; ++c) {
      const Vec& w = g->bracket[b][c];
      for (int r = 0; r < g->dim; ++r)
        if (!w[r].is_zero()) mb.set(r, c, w[r]);
    }
    ad.push_back(std::move(mb));
  }
  return make_finite_module(g, ad);
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

long mod2(long a) { return ((a % 2) + 2) % 2; }

}  // namespace

TEST_CASE("minimal annihilator of evaluation tensors") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), mone(F, -1L), i4 = Cyclo::zeta(F);

  FamilyPtr u1 = evaluation_family(eval_at(g, one));
  AnnihilatorResult a1 = minimal_annihilator(u1);
  CHECK(a1.p == Poly::from_roots(F, {one}));
  CHECK(!a1.p.coeff(0).is_zero());
  REQUIRE(a1.witnesses.size() == 1);
  CHECK(a1.witnesses[0].point == one);
  SpMat t1 = witness_operator(u1, {one}, 0, a1.witnesses[0].basis);
  CHECK(!vec_is_zero(t1.apply(a1.witnesses[0].vector)));

  FamilyPtr um = evaluation_family(eval_at(g, i4));
  CHECK(minimal_annihilator(um).p == Poly::from_roots(F, {mone}));

  FamilyPtr pair = tensor_module({u1, um});
  AnnihilatorResult ap = minimal_annihilator(pair);
  CHECK(ap.p == Poly::from_roots(F, {one, mone}));
  REQUIRE(ap.witnesses.size() == 2);
  CHECK(ap.witnesses[0].point == mone);
  CHECK(ap.witnesses[1].point == one);
  for (size_t j = 0; j < 2; ++j) {
    SpMat t = witness_operator(pair, {mone, one}, j, ap.witnesses[j].basis);
    CHECK(!vec_is_zero(t.apply(ap.witnesses[j].vector)));
  }

  FamilyPtr triv = evaluation_family(
      make_evaluation_module(trivial_module(g, false), one, one));
  AnnihilatorResult at = minimal_annihilator(triv);
  CHECK(at.p == Poly::constant(F, one));
  CHECK(at.witnesses.empty());

  CHECK_THROWS_AS(minimal_annihilator(small_induced(g, 2)), Error);
}

TEST_CASE("point recovery by trial division") {
  const CycloField* F = CycloField::get(4);
  const Cyclo one(F, 1L), mone(F, -1L), i4 = Cyclo::zeta(F);

  const Poly p = Poly::from_roots(F, {one, mone});
  const auto pts = recover_points(p, {one, mone, Cyclo(F, 2L)});
  REQUIRE(pts.size() == 2);
  CHECK(pts[0] == mone);
  CHECK(pts[1] == one);

  CHECK(recover_points(Poly::from_roots(F, {i4}), {i4}) ==
        std::vector<Cyclo>{i4});

  const Poly psq = Poly::from_roots(F, {one, one, Cyclo(F, -2L)});
  const auto ps = recover_points(psq);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0] == Cyclo(F, -2L));
  CHECK(ps[1] == one);

  const CycloField* F2 = CycloField::get(2);
  const Poly noroot(F2, {Cyclo(F2, 1L), Cyclo(F2), Cyclo(F2, 1L)});
  try {
    recover_points(noroot);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(contains(e.what(), "unresolved factor"));
  }

  CHECK_THROWS_AS(recover_points(Poly::x(F)), Error);
  CHECK_THROWS_AS(recover_points(Poly(F)), Error);
}

TEST_CASE("loop evaluation is a level-zero Lie homomorphism") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), mone(F, -1L), i4 = Cyclo::zeta(F);
  const int ih = g->basis_index("h");
  const int ie = g->basis_index("e");
  const int iff = g->basis_index("f");

  const AffineElement x0 = AffineElement::term(g, ih, 0, one);
  CHECK(evaluation_isomorphism(x0, mone, i4) == vec_unit(F, g->dim, ih));

  const AffineElement x1 = AffineElement::term(g, ie, 0, one);
  Vec ve = evaluation_isomorphism(x1, mone, i4);
  CHECK(ve[ie] == i4);

  AffineElement ker(g);
  ker.add_term(ie, 1 + g->order, one);
  ker.add_term(ie, 1, one);  // coefficient -z with z = -1
  CHECK(vec_is_zero(evaluation_isomorphism(ker, mone, i4)));

  CHECK(vec_is_zero(evaluation_isomorphism(
      AffineElement::central_term(g, Cyclo(F, 5L)), one, one)));

  CHECK(loop_evaluation_check(g, one, one, -4, 4) > 0);
  CHECK(loop_evaluation_check(g, mone, i4, -4, 4) > 0);
  CHECK(loop_evaluation_check(g, Cyclo(F, 4L), Cyclo(F, -2L), -4, 4) > 0);

  // A bracket with a nonzero central part still maps onto the plain bracket.
  const AffineElement xe = AffineElement::term(g, ie, 0, one);
  const AffineElement xf = AffineElement::term(g, iff, -1, one);
  const AffineElement br = affine_bracket(xe, xf);
  CHECK(!br.central.is_zero());
  CHECK(evaluation_isomorphism(br, mone, i4) ==
        g->bracket_vec(evaluation_isomorphism(xe, mone, i4),
                       evaluation_isomorphism(xf, mone, i4)));

  CHECK_THROWS_AS(evaluation_isomorphism(x0, Cyclo(F), one), Error);
  CHECK_THROWS_AS(evaluation_isomorphism(x0, Cyclo(F, 2L), one), Error);
}

TEST_CASE("factor recovery round-trips an evaluation tensor") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), mone(F, -1L), i4 = Cyclo::zeta(F);

  FamilyPtr u1 = evaluation_family(eval_at(g, one));
  FamilyPtr um = evaluation_family(eval_at(g, i4));
  FamilyPtr m = tensor_module({u1, um});
  const auto pts = recover_points(minimal_annihilator(m).p);
  const RecoveredFactors rf = recover_factors(m, pts);
  REQUIRE(rf.slots.size() == 2);
  CHECK(rf.slots[0].point == mone);
  CHECK(rf.slots[1].point == one);
  for (const auto& s : rf.slots) {
    CHECK(s.factor.dim == 2);
    CHECK(s.root.pow(g->order) == s.point);
    CHECK(module_isomorphism(s.factor, natural_module(g)).has_value());
  }
  CHECK(rank_of(rf.intertwiner) == 4);
  FamilyPtr rebuilt = tensor_module(
      {evaluation_family(make_evaluation_module(
           rf.slots[0].factor, rf.slots[0].point, rf.slots[0].root)),
       evaluation_family(make_evaluation_module(
           rf.slots[1].factor, rf.slots[1].point, rf.slots[1].root))});
  for (int b = 0; b < g->dim; ++b)
    for (long e = -4; e <= 4; ++e) {
      if (mod2(e - g->grades[b]) != 0) continue;
      CHECK(m->mode_at(b, e) * rf.intertwiner ==
            rf.intertwiner * rebuilt->mode_at(b, e));
    }

  // Label erasure: the opaque wrapping recovers the same data.
  const RecoveredFactors rb = recover_factors(opaque_wrap(m, -12, 12), pts);
  REQUIRE(rb.slots.size() == 2);
  CHECK(rb.slots[0].point == mone);
  CHECK(rb.slots[1].point == one);
  CHECK(rb.slots[0].factor.dim == 2);

  // Single slot at a non-unit point.
  FamilyPtr u4 = evaluation_family(eval_at(g, Cyclo(F, 2L)));
  const RecoveredFactors r4 = recover_factors(u4, {Cyclo(F, 4L)});
  REQUIRE(r4.slots.size() == 1);
  CHECK(r4.slots[0].point == Cyclo(F, 4L));
  CHECK(r4.slots[0].root.pow(2) == Cyclo(F, 4L));
  CHECK(module_isomorphism(r4.slots[0].factor, natural_module(g)).has_value());

  // A repeated point is not a tensor of irreducibles.
  FamilyPtr up = tensor_module({u1, evaluation_family(eval_at(g, one))});
  try {
    recover_factors(up, {one});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(contains(e.what(), "not a tensor"));
  }

  // Wrong points fail the mode reassembly.
  CHECK_THROWS_AS(recover_factors(u1, {Cyclo(F, 4L)}), Error);
}

TEST_CASE("module isomorphism finds explicit intertwiners") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const FiniteModule nat = natural_module(g);
  testutil::Rng rng(11);
  const SpMat q = random_invertible(rng, F, 2);
  const SpMat qi = invert(q);
  std::vector<SpMat> conj;
  for (int b = 0; b < g->dim; ++b) conj.push_back(q * nat.action[b] * qi);
  const FiniteModule natq = make_finite_module(g, conj);
  const auto iso = module_isomorphism(nat, natq);
  REQUIRE(iso.has_value());
  CHECK(rank_of(*iso) == 2);
  for (int b = 0; b < g->dim; ++b)
    CHECK(*iso * nat.action[b] == natq.action[b] * *iso);

  const FiniteModule adj = adjoint_module(g);
  CHECK(adj.dim == 3);
  CHECK(is_nontrivial(adj));
  CHECK(!module_isomorphism(nat, adj).has_value());

  const FiniteModule triv2 =
      make_finite_module(g, std::vector<SpMat>(g->dim, SpMat(F, 2, 2)));
  CHECK(!module_isomorphism(nat, triv2).has_value());
}

TEST_CASE("evaluation equivalence on the desk set") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), i4 = Cyclo::zeta(F);

  FamilyPtr u1 = evaluation_family(eval_at(g, one));
  FamilyPtr um = evaluation_family(eval_at(g, i4));
  FamilyPtr m1 = tensor_module({u1, um});
  FamilyPtr m2 = tensor_module({um, u1});
  CHECK(modules_isomorphic_E(m1, m2));
  CHECK(modules_isomorphic_E(m2, m1));
  CHECK(modules_isomorphic_E(m1, m1));
  FamilyPtr blind = opaque_wrap(m2, -12, 12);
  CHECK(modules_isomorphic_E(m1, blind));
  CHECK(modules_isomorphic_E(m2, blind));

  CHECK(!modules_isomorphic_E(u1, um));
  FamilyPtr adj1 = evaluation_family(
      make_evaluation_module(adjoint_module(g), one, one));
  CHECK(!modules_isomorphic_E(u1, adj1));
}

TEST_CASE("classification of a mixed tensor round-trips") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L);

  FamilyPtr m = tensor_module(
      {small_induced(g, 2), evaluation_family(eval_at(g, one))});
  const ClassificationResult r = classify_in_C(m);
  CHECK(!r.restricted.trivial);
  CHECK(r.restricted.level == one);
  CHECK(r.restricted.depth_num == 2);
  CHECK(r.restricted.top.dim == 1);
  CHECK(!is_nontrivial(r.restricted.top));
  REQUIRE(r.evaluation.size() == 1);
  CHECK(r.evaluation[0].point == one);
  CHECK(r.evaluation[0].factor.dim == 2);
  CHECK(module_isomorphism(r.evaluation[0].factor, natural_module(g))
            .has_value());
  REQUIRE(r.permutation.size() == 1);
  CHECK(r.permutation[0] == 0);
  CHECK(rank_of(r.intertwiner) == 14);
  CHECK(contains(r.evidence, "annihilator"));

  FamilyPtr model = tensor_module(
      {build_induced(g, r.restricted.level, r.restricted.top,
                     r.restricted.depth_num),
       evaluation_family(make_evaluation_module(
           r.evaluation[0].factor, r.evaluation[0].point,
           r.evaluation[0].root))});
  for (int b = 0; b < g->dim; ++b)
    for (long e = -4; e <= 4; ++e) {
      if (mod2(e - g->grades[b]) != 0) continue;
      CHECK(m->mode_at(b, e) * r.intertwiner ==
            r.intertwiner * model->mode_at(b, e));
    }
}

TEST_CASE("pure inputs classify with trivial complements") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), mone(F, -1L), i4 = Cyclo::zeta(F);

  FamilyPtr u1 = evaluation_family(eval_at(g, one));
  FamilyPtr um = evaluation_family(eval_at(g, i4));
  const ClassificationResult re = classify_in_C(tensor_module({u1, um}));
  CHECK(re.restricted.trivial);
  CHECK(re.restricted.level.is_zero());
  REQUIRE(re.evaluation.size() == 2);
  CHECK(re.evaluation[0].point == mone);
  CHECK(re.evaluation[1].point == one);
  REQUIRE(re.permutation.size() == 2);
  CHECK(re.permutation[0] == 1);
  CHECK(re.permutation[1] == 0);
  CHECK(rank_of(re.intertwiner) == 4);

  const ClassificationResult rr = classify_in_C(small_induced(g, 2));
  CHECK(!rr.restricted.trivial);
  CHECK(rr.restricted.level == one);
  CHECK(rr.restricted.top.dim == 1);
  CHECK(rr.evaluation.empty());
  CHECK(rr.permutation.empty());
  CHECK(rank_of(rr.intertwiner) == 7);

  FamilyPtr z = evaluation_family(
      make_evaluation_module(trivial_module(g, false), one, one));
  const ClassificationResult rz = classify_in_C(z);
  CHECK(rz.restricted.trivial);
  CHECK(rz.evaluation.empty());

  try {
    classify_in_C(small_induced(g, 1));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(contains(e.what(), "restricted stage"));
    CHECK(contains(e.what(), "depth"));
  }
}

TEST_CASE("slot permutation leaves the classification unchanged") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), i4 = Cyclo::zeta(F);

  FamilyPtr trunc = small_induced(g, 2);
  FamilyPtr ma = tensor_module({trunc, evaluation_family(eval_at(g, one)),
                                evaluation_family(eval_at(g, i4))});
  FamilyPtr mb = tensor_module({trunc, evaluation_family(eval_at(g, i4)),
                                evaluation_family(eval_at(g, one))});
  const ClassificationResult ra = classify_in_C(ma);
  const ClassificationResult rb = classify_in_C(mb);
  REQUIRE(ra.evaluation.size() == 2);
  REQUIRE(rb.evaluation.size() == 2);
  for (size_t j = 0; j < 2; ++j) {
    CHECK(ra.evaluation[j].point == rb.evaluation[j].point);
    CHECK(ra.evaluation[j].factor.dim == rb.evaluation[j].factor.dim);
    CHECK(module_isomorphism(ra.evaluation[j].factor, rb.evaluation[j].factor)
              .has_value());
  }
  CHECK(ra.restricted.level == rb.restricted.level);
  CHECK(ra.restricted.depth_num == rb.restricted.depth_num);
  CHECK(module_isomorphism(ra.restricted.top, rb.restricted.top).has_value());
  CHECK(ra.permutation == std::vector<int>{1, 0});
  CHECK(rb.permutation == std::vector<int>{0, 1});
}

TEST_CASE("classification is invariant under basis change") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), i4 = Cyclo::zeta(F);
  testutil::Rng rng(5);

  FamilyPtr u1 = evaluation_family(eval_at(g, one));
  FamilyPtr um = evaluation_family(eval_at(g, i4));
  FamilyPtr m = tensor_module({u1, um});
  const SpMat p = random_invertible(rng, F, 4);
  const SpMat pi = invert(p);
  FamilyPtr conj = opaque_family(
      g, 4, Cyclo(F),
      [m, p, pi](int b, long n) { return p * m->mode(b, n) * pi; }, -12, 12);
  const ClassificationResult rc = classify_in_C(conj);
  const ClassificationResult r0 = classify_in_C(m);
  CHECK(rc.restricted.trivial == r0.restricted.trivial);
  REQUIRE(rc.evaluation.size() == r0.evaluation.size());
  for (size_t j = 0; j < rc.evaluation.size(); ++j) {
    CHECK(rc.evaluation[j].point == r0.evaluation[j].point);
    CHECK(rc.evaluation[j].factor.dim == r0.evaluation[j].factor.dim);
    CHECK(module_isomorphism(rc.evaluation[j].factor,
                             r0.evaluation[j].factor)
              .has_value());
  }
  CHECK(rc.permutation.empty());
  CHECK(modules_isomorphic_E(conj, m));

  // A structure-preserving change of the slot basis on a mixed tensor.
  const SpMat q = random_invertible(rng, F, 2);
  const SpMat qi = invert(q);
  const FiniteModule nat = natural_module(g);
  std::vector<SpMat> acts;
  for (int b = 0; b < g->dim; ++b) acts.push_back(q * nat.action[b] * qi);
  FamilyPtr trunc = small_induced(g, 2);
  FamilyPtr mm = tensor_module(
      {trunc, evaluation_family(make_evaluation_module(
                  make_finite_module(g, acts), one, one))});
  const ClassificationResult rm = classify_in_C(mm);
  const ClassificationResult rx =
      classify_in_C(tensor_module({trunc, evaluation_family(eval_at(g, one))}));
  CHECK(rm.restricted.level == rx.restricted.level);
  CHECK(rm.restricted.depth_num == rx.restricted.depth_num);
  CHECK(rm.restricted.top.dim == rx.restricted.top.dim);
  REQUIRE(rm.evaluation.size() == 1);
  CHECK(rm.evaluation[0].point == rx.evaluation[0].point);
  CHECK(module_isomorphism(rm.evaluation[0].factor, rx.evaluation[0].factor)
            .has_value());
}

TEST_CASE("classification recovers a mixed tensor from erased labels") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), mone(F, -1L), i4 = Cyclo::zeta(F);

  FamilyPtr m = tensor_module({small_induced(g, 2),
                               evaluation_family(eval_at(g, one)),
                               evaluation_family(eval_at(g, i4))});
  FamilyPtr masked = opaque_wrap(m, -16, 16);
  const ClassificationResult r = classify_in_C(masked);
  CHECK(!r.restricted.trivial);
  CHECK(r.restricted.level == one);
  CHECK(r.restricted.depth_num == 2);
  CHECK(r.restricted.top.dim == 1);
  CHECK(!is_nontrivial(r.restricted.top));
  REQUIRE(r.evaluation.size() == 2);
  CHECK(r.evaluation[0].point == mone);
  CHECK(r.evaluation[1].point == one);
  for (const auto& s : r.evaluation) {
    CHECK(s.factor.dim == 2);
    CHECK(s.root.pow(2) == s.point);
    CHECK(module_isomorphism(s.factor, natural_module(g)).has_value());
  }
  CHECK(r.permutation.empty());
  CHECK(rank_of(r.intertwiner) == 28);

  FamilyPtr model = tensor_module(
      {build_induced(g, r.restricted.level, r.restricted.top,
                     r.restricted.depth_num),
       evaluation_family(make_evaluation_module(
           r.evaluation[0].factor, r.evaluation[0].point, r.evaluation[0].root)),
       evaluation_family(make_evaluation_module(
           r.evaluation[1].factor, r.evaluation[1].point,
           r.evaluation[1].root))});
  for (int b = 0; b < g->dim; ++b)
    for (long e = -6; e <= 6; ++e) {
      if (mod2(e - g->grades[b]) != 0) continue;
      CHECK(m->mode_at(b, e) * r.intertwiner ==
            r.intertwiner * model->mode_at(b, e));
    }

  // The same carrier after an exact random change of basis.
  testutil::Rng rng(11);
  const SpMat p = random_invertible(rng, F, 28);
  const SpMat pi = invert(p);
  FamilyPtr conj = opaque_family(
      g, 28, m->central,
      [m, p, pi](int b, long n) { return p * m->mode(b, n) * pi; }, -16, 16);
  const ClassificationResult rc = classify_in_C(conj);
  CHECK(rc.restricted.level == r.restricted.level);
  CHECK(rc.restricted.depth_num == r.restricted.depth_num);
  CHECK(rc.restricted.top.dim == r.restricted.top.dim);
  REQUIRE(rc.evaluation.size() == 2);
  for (size_t j = 0; j < 2; ++j) {
    CHECK(rc.evaluation[j].point == r.evaluation[j].point);
    CHECK(rc.evaluation[j].factor.dim == r.evaluation[j].factor.dim);
    CHECK(module_isomorphism(rc.evaluation[j].factor, r.evaluation[j].factor)
              .has_value());
  }
  CHECK(rc.permutation.empty());
  CHECK(rank_of(rc.intertwiner) == 28);
}

TEST_CASE("module homomorphisms transport both factor actions") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L);
  testutil::Rng rng(9);

  FamilyPtr trunc = small_induced(g, 2);
  FamilyPtr m1 = tensor_module({trunc, evaluation_family(eval_at(g, one))});
  const SpMat q = random_invertible(rng, F, 2);
  const SpMat qi = invert(q);
  const FiniteModule nat = natural_module(g);
  std::vector<SpMat> acts;
  for (int b = 0; b < g->dim; ++b) acts.push_back(q * nat.action[b] * qi);
  FamilyPtr m2 = tensor_module(
      {trunc, evaluation_family(make_evaluation_module(
                  make_finite_module(g, acts), one, one))});

  const auto phi = family_isomorphism(m1, m2, -8, 8);
  REQUIRE(phi.has_value());
  CHECK(rank_of(*phi) == 14);
  const FactorizedRep f1 = factorize_rep(m1);
  const FactorizedRep f2 = factorize_rep(m2);
  for (int b = 0; b < g->dim; ++b)
    for (long e = -4; e <= 4; ++e) {
      if (mod2(e - g->grades[b]) != 0) continue;
      CHECK(*phi * f1.piR->mode_at(b, e) == f2.piR->mode_at(b, e) * *phi);
      CHECK(*phi * f1.piE->mode_at(b, e) == f2.piE->mode_at(b, e) * *phi);
    }
}

TEST_CASE("annihilators of nontrivial tensors are exact point products") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), i4 = Cyclo::zeta(F);
  const Cyclo onepi = one + i4;  // square root of 2*zeta

  const std::vector<std::pair<Cyclo, Cyclo>> root_pairs = {
      {one, i4}, {one, Cyclo(F, 2L)}, {i4, onepi}, {Cyclo(F, 2L), i4}};
  for (const auto& [ra, rb] : root_pairs) {
    const Cyclo pa = ra.pow(g->order), pb = rb.pow(g->order);
    REQUIRE(pa != pb);
    FamilyPtr m = tensor_module({evaluation_family(eval_at(g, ra)),
                                 evaluation_family(eval_at(g, rb))});
    CHECK(minimal_annihilator(m).p == Poly::from_roots(F, {pa, pb}));
    CHECK(minimal_annihilator(evaluation_family(eval_at(g, ra))).p ==
          Poly::from_roots(F, {pa}));
  }

  // One full recovery at a non-integer point pair.
  FamilyPtr m = tensor_module({evaluation_family(eval_at(g, i4)),
                               evaluation_family(eval_at(g, onepi))});
  const auto pts = recover_points(minimal_annihilator(m).p);
  const RecoveredFactors rf = recover_factors(m, pts);
  REQUIRE(rf.slots.size() == 2);
  CHECK(rank_of(rf.intertwiner) == 4);
}
