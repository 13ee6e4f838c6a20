#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

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

/// Scalar-coefficient distribution: entries at the given (numerator, value)
/// pairs, window [lo, hi], exact on both sides.
FormalDistribution scalar_regular(
    const CycloField* F, int den, long lo, long hi,
    const std::vector<std::pair<long, Cyclo>>& vals) {
  LaurentPart part;
  part.den = den;
  part.lo = lo;
  part.hi = hi;
  part.exact_below = true;
  part.exact_above = true;
  for (const auto& [k, v] : vals) {
    SpMat m(F, 1, 1);
    m.set(0, 0, v);
    part.entries.emplace(k, std::move(m));
  }
  return FormalDistribution::regular(F, std::move(part), 1, 1);
}

FormalDistribution identity_at(const CycloField* F, int den, int dim, long k,
                               const Cyclo& value) {
  LaurentPart part;
  part.den = den;
  part.lo = k;
  part.hi = k;
  part.exact_below = true;
  part.exact_above = true;
  if (!value.is_zero())
    part.entries.emplace(k, SpMat::identity(F, dim).scaled(value));
  return FormalDistribution::regular(F, std::move(part), dim, dim);
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("certificate validation on wrapping") {
  const CycloField* F = CycloField::get(4);
  const Cyclo one(F, 1L);
  SpMat c(F, 1, 1);
  c.set(0, 0, Cyclo(F, 3L));
  FormalDistribution at = FormalDistribution::atom(F, 1, one, one, 0, 0, c);

  CHECK_THROWS_AS(make_ebar_element(at, Poly(F)), Error);
  CHECK_THROWS_AS(make_ebar_element(at, Poly::x(F)), Error);
  // (x - 2) does not remove the atom at 1.
  CHECK_THROWS_AS(
      make_ebar_element(at, Poly::from_roots(F, {Cyclo(F, 2L)})), Error);
  EbarElement e = make_ebar_element(at, Poly::from_roots(F, {one}));
  CHECK(e.dist.has_atoms());
}

TEST_CASE("decompose splits regular and atom parts") {
  const CycloField* F = CycloField::get(4);
  const Cyclo one(F, 1L), c3(F, 3L);

  // Pure regular x^2 with certificate 1.
  FormalDistribution reg = scalar_regular(F, 1, -4, 4, {{2, c3}});
  EbarElement er = make_ebar_element(reg, Poly::constant(F, one));
  DistDecomposition dr = decompose_dist(er);
  CHECK(!dr.singular.has_atoms());
  CHECK(dr.regular.entries.size() == 1);
  CHECK(dr.regular.entries.at(2).get(0, 0) == c3);

  // Pure atom at z = 1.
  SpMat c(F, 1, 1);
  c.set(0, 0, c3);
  FormalDistribution at = FormalDistribution::atom(F, 1, one, one, 0, 0, c);
  EbarElement ea = make_ebar_element(at, Poly::from_roots(F, {one}));
  DistDecomposition da = decompose_dist(ea);
  CHECK(da.regular.is_identically_zero());
  CHECK(da.singular.atoms().size() == 1);

  // Mixed on denominator 2: x^{-3/2} plus a shifted atom at -1.
  const Cyclo i4 = Cyclo::zeta(F), minus_one(F, -1L);
  FormalDistribution mixed =
      scalar_regular(F, 2, -6, 6, {{-3, c3}}) +
      FormalDistribution::atom(F, 2, minus_one, i4, 1, 0, c);
  EbarElement em = make_ebar_element(mixed, Poly::from_roots(F, {minus_one}));
  DistDecomposition dm = decompose_dist(em);
  CHECK(dm.regular.entries.size() == 1);
  CHECK(dm.regular.entries.count(-3) == 1);
  CHECK(dm.singular.atoms().size() == 1);
  CHECK(dm.singular.atoms()[0].point == minus_one);
  CHECK(dm.singular.atoms()[0].shift == 1);

  // A stale certificate is re-checked.
  EbarElement bad{mixed, Poly::constant(F, one)};
  CHECK_THROWS_AS(decompose_dist(bad), Error);
  EbarElement bad0{mixed, Poly::x(F)};
  CHECK_THROWS_AS(decompose_dist(bad0), Error);
}

TEST_CASE("projection formula on spec inputs") {
  const CycloField* F = CycloField::get(4);
  const Cyclo one(F, 1L), two(F, 2L);
  SpMat c(F, 1, 1);
  c.set(0, 0, Cyclo(F, 5L));

  // Atom at 1 with f = x - 1: f * e = 0, so the projection vanishes.
  FormalDistribution at1 = FormalDistribution::atom(F, 1, one, one, 0, 0, c);
  EbarElement e1 = make_ebar_element(at1, Poly::from_roots(F, {one}));
  LaurentPart p1 = psi_R_via_formula(e1, e1.certificate, -3, 3);
  CHECK(p1.entries.empty());
  CHECK(p1.exact_below);
  CHECK(p1.exact_above);

  // Regular x^0 with f = 1: identity.
  FormalDistribution x0 = scalar_regular(F, 1, -2, 2, {{0, Cyclo(F, 5L)}});
  EbarElement e2 = make_ebar_element(x0, Poly::constant(F, one));
  LaurentPart p2 = psi_R_via_formula(e2, e2.certificate, -2, 2);
  CHECK(p2.entries.size() == 1);
  CHECK(p2.entries.at(0) == c);

  // C x^{-1} plus an atom at 2: the expansion of 1/(x - 2) convolves the
  // regular part back out and cancels the atom exactly.
  FormalDistribution mixed =
      scalar_regular(F, 1, -3, 3, {{-1, Cyclo(F, 5L)}}) +
      FormalDistribution::atom(F, 1, two, two, 0, 0, c);
  EbarElement e3 = make_ebar_element(mixed, Poly::from_roots(F, {two}));
  LaurentPart p3 = psi_R_via_formula(e3, e3.certificate, -3, 3);
  CHECK(p3.entries.size() == 1);
  CHECK(p3.entries.at(-1) == c);

  // Well-definedness: f and f * g give the same projection.
  Poly fg = e3.certificate * Poly::from_roots(F, {Cyclo(F, 3L)});
  LaurentPart p3b = psi_R_via_formula(e3, fg, -3, 3);
  CHECK(p3.entries == p3b.entries);

  // f(0) = 0 is rejected.
  CHECK_THROWS_AS(psi_R_via_formula(e3, Poly::x(F), -3, 3), Error);
  // A non-certificate leaves atoms behind.
  CHECK_THROWS_AS(
      psi_R_via_formula(e3, Poly::from_roots(F, {Cyclo(F, 7L)}), -3, 3),
      Error);
}

TEST_CASE("projection laws on random mixed distributions") {
  const CycloField* F = CycloField::get(4);
  testutil::Rng rng(11);
  const Cyclo one(F, 1L), minus_one(F, -1L), i4 = Cyclo::zeta(F);
  Poly f = Poly::from_roots(F, {one, minus_one, one, minus_one});

  for (int trial = 0; trial < 6; ++trial) {
    std::vector<std::pair<long, Cyclo>> vals;
    for (long k = -4; k <= 4; ++k)
      if (rng.pick(0, 2) == 0) vals.emplace_back(k, rng.cyclo(F));
    FormalDistribution dist = scalar_regular(F, 2, -4, 4, vals);
    SpMat c1(F, 1, 1), c2(F, 1, 1);
    c1.set(0, 0, rng.cyclo(F));
    c2.set(0, 0, rng.cyclo(F));
    if (!c1.is_zero())
      dist = dist + FormalDistribution::atom(F, 2, one, one,
                                             static_cast<int>(rng.pick(0, 1)),
                                             static_cast<int>(rng.pick(0, 1)),
                                             c1);
    if (!c2.is_zero())
      dist = dist +
             FormalDistribution::atom(F, 2, minus_one, i4,
                                      static_cast<int>(rng.pick(0, 1)),
                                      static_cast<int>(rng.pick(0, 1)), c2);
    EbarElement e = make_ebar_element(dist, f);
    DistDecomposition d = decompose_dist(e);

    // psi_R + psi_E = id.
    FormalDistribution recombined =
        FormalDistribution::regular(F, d.regular, 1, 1) + d.singular;
    CHECK(dist_equal(recombined, dist).equal);

    // psi_R is the identity on its own image, zero on the atom part.
    EbarElement er = make_ebar_element(dist.without_atoms(), f);
    DistDecomposition dr = decompose_dist(er);
    CHECK(!dr.singular.has_atoms());
    CHECK(dist_equal(FormalDistribution::regular(F, dr.regular, 1, 1),
                     dist.without_atoms())
              .equal);
    EbarElement es = make_ebar_element(dist.atoms_only(), f);
    CHECK(decompose_dist(es).regular.is_identically_zero());

    // f * psi_R(a) = f * a.
    CHECK(dist_equal(apply_polynomial(f, dist.without_atoms()),
                     apply_polynomial(f, dist))
              .equal);

    // The formula path agrees with the structural projection.
    LaurentPart viaf = psi_R_via_formula(e, f, -4, 4);
    CHECK(dist_equal(FormalDistribution::regular(F, viaf, 1, 1),
                     dist.without_atoms())
              .equal);
  }
}

TEST_CASE("series of a carrier reproduces its modes") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const int N = g->order, ie = g->basis_index("e");

  FamilyPtr u = evaluation_family(eval_at(g, Cyclo::zeta(F)));
  EbarElement se = rep_series(u, g->basis_vec(ie), -5, 5);
  CHECK(se.dist.has_atoms());
  CHECK(se.dist.regular_part().is_identically_zero());
  CHECK(se.certificate.degree() == 1);
  for (long k = -5; k <= 5; ++k) {
    auto c = se.dist.coeff(k);
    REQUIRE(c.has_value());
    if (((-k - N - g->grades[ie]) % N + N) % N == 0)
      CHECK(*c == u->mode_at(ie, -k - N));
    else
      CHECK(c->is_zero());
  }

  FamilyPtr w = small_induced(g, 4);
  FamilyPtr t = tensor_module({w, u});
  EbarElement st = rep_series(t, g->basis_vec(ie), -t->depth_num - 3 * N,
                              t->depth_num + 3 * N);
  CHECK(st.dist.has_atoms());
  CHECK(!st.dist.regular_part().is_identically_zero());
  for (long k = -t->depth_num - 3 * N; k <= t->depth_num + 3 * N; ++k) {
    if (((-k - N - g->grades[ie]) % N + N) % N != 0) continue;
    auto c = st.dist.coeff(k);
    REQUIRE(c.has_value());
    CHECK(*c == t->mode_at(ie, -k - N));
  }
  // The regular part is supported inside the truncation band.
  for (const auto& [k, mat] : st.dist.regular_part().entries) {
    CHECK(k >= -t->depth_num - N);
    CHECK(k <= t->depth_num - N);
    CHECK(!mat.is_zero());
  }

  FamilyPtr blind = opaque_family(
      g, 2, Cyclo(F), [F](int, long) { return SpMat(F, 2, 2); }, -6, 6);
  CHECK_THROWS_AS(rep_series(blind, g->basis_vec(ie), -4, 4), Error);
}

TEST_CASE("mode connection produces verified coefficients") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const int N = g->order, ie = g->basis_index("e");
  const Cyclo one(F, 1L);

  // Restricted carrier with f = 1: beta = (1).
  FamilyPtr w = small_induced(g, 2);
  EbarElement sw = rep_series(w, g->basis_vec(ie), -w->depth_num - 3 * N,
                              w->depth_num + N);
  CHECK(sw.certificate.degree() == 0);
  Vec top = vec_unit(F, w->dim, 0);
  std::vector<Cyclo> beta = mode_connection(sw, -1, top);
  REQUIRE(beta.size() == 1);
  CHECK(beta[0] == one);
  // Above the support the projection vanishes and the sum is empty.
  CHECK(mode_connection(sw, 1, top).empty());

  // Evaluation carrier at z = -1 with f = x + 1: the expansion telescopes.
  FamilyPtr u = evaluation_family(eval_at(g, Cyclo::zeta(F)));
  EbarElement su = rep_series(u, g->basis_vec(ie), -5, 5);
  Vec v0 = vec_unit(F, 2, 0);
  std::vector<Cyclo> bu = mode_connection(su, -5, v0);
  REQUIRE(bu.size() == 3);
  CHECK(bu[0] == one);
  CHECK(bu[1].is_zero());
  CHECK(bu[2] == Cyclo(F, -1L));
  // The combination really kills the evaluation action.
  SpMat comb = u->mode_at(ie, -5).scaled(bu[0]) +
               u->mode_at(ie, -1).scaled(bu[2]);
  CHECK(comb.is_zero());

  // Mixed tensor: the beta combination through the source modes equals the
  // structurally split lower-truncated action.
  FamilyPtr t = tensor_module({small_induced(g, 2), evaluation_family(
                                                        eval_at(g, one))});
  EbarElement st = rep_series(t, g->basis_vec(ie), -t->depth_num - 4 * N,
                              t->depth_num + 3 * N);
  FactorizedRep fac = factorize_rep(t);
  testutil::Rng rng(7);
  for (long n : {-3L, -1L, 1L}) {
    for (int trial = 0; trial < 3; ++trial) {
      Vec vv(t->dim, Cyclo(F));
      for (int i = 0; i < t->dim; ++i) vv[i] = rng.cyclo(F);
      std::vector<Cyclo> bs = mode_connection(st, n, vv);
      Vec combo = vec_zero(F, t->dim);
      for (size_t s = 0; s < bs.size(); ++s) {
        if (bs[s].is_zero()) continue;
        Vec term = t->mode_at(ie, n + static_cast<long>(s) * N).apply(vv);
        combo = vec_add(combo, vec_scaled(term, bs[s]));
      }
      CHECK(combo == fac.piR->mode_at(ie, n).apply(vv));
    }
  }

  // A window that misses the bottom of the support leaves the projection
  // undetermined.
  EbarElement narrow =
      rep_series(t, g->basis_vec(ie), -t->depth_num - N + 1, 0);
  CHECK(!narrow.dist.regular_part().exact_below);
  CHECK_THROWS_AS(mode_connection(narrow, -3, vec_unit(F, t->dim, 0)), Error);
}

TEST_CASE("commutator transport on evaluation, restricted, mixed") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const int N = g->order;
  const int ie = g->basis_index("e"), ih = g->basis_index("h"),
            iff = g->basis_index("f");
  const Cyclo one(F, 1L);
  const Cyclo pairing = g->form(g->basis_vec(ie), g->basis_vec(iff));
  const int coset = g->grades[ie];

  // Evaluation module: everything lives in the atoms, tildes vanish.
  {
    FamilyPtr u = evaluation_family(eval_at(g, Cyclo::zeta(F)));
    EbarElement a = rep_series(u, g->basis_vec(ie), -6, 6);
    EbarElement b = rep_series(u, g->basis_vec(iff), -6, 6);
    EbarElement c0 = rep_series(u, g->bracket_vec(g->basis_vec(ie),
                                                  g->basis_vec(iff)),
                                -6, 6);
    EbarElement c1{identity_at(F, N, u->dim, 0, Cyclo(F)),
                   Poly::constant(F, one)};
    TransportReport r = commutator_transport(a, b, coset, c0, c1, -4, 4);
    CHECK(r.shape_ok);
    CHECK(r.recovery_ok);
    CHECK(r.tilde_ok);
    CHECK(r.pairs_checked > 0);
    CHECK(r.pairs_skipped == 0);
  }

  // Restricted carrier: the tilde identity is the original one; the central
  // term appears as the constant series <e,f> * level on the diagonal.
  {
    FamilyPtr w = small_induced(g, 2);
    const long lo = -w->depth_num - 3 * N, hi = w->depth_num + 3 * N;
    EbarElement a = rep_series(w, g->basis_vec(ie), lo, hi);
    EbarElement b = rep_series(w, g->basis_vec(iff), lo, hi);
    EbarElement c0 = rep_series(w, g->basis_vec(ih), lo, hi);
    EbarElement c1{identity_at(F, N, w->dim, 0, pairing * w->central),
                   Poly::constant(F, one)};
    TransportReport r = commutator_transport(a, b, coset, c0, c1, -3, 3, w);
    CHECK(r.shape_ok);
    CHECK(r.recovery_ok);
    CHECK(r.tilde_ok);
    CHECK(r.pairs_checked > 0);

    // Dropping the central series breaks the shape at paired exponents.
    EbarElement c1z{identity_at(F, N, w->dim, 0, Cyclo(F)),
                    Poly::constant(F, one)};
    CHECK_THROWS_AS(commutator_transport(a, b, coset, c0, c1z, -3, 3, w),
                    Error);
  }

  // Mixed tensor: full machine verification of the transported shape.
  {
    FamilyPtr t = tensor_module({small_induced(g, 2),
                                 evaluation_family(eval_at(g, one))});
    const long lo = -t->depth_num - 4 * N, hi = t->depth_num + 4 * N;
    EbarElement a = rep_series(t, g->basis_vec(ie), lo, hi);
    EbarElement b = rep_series(t, g->basis_vec(iff), lo, hi);
    EbarElement c0 = rep_series(t, g->basis_vec(ih), lo, hi);
    EbarElement c1{identity_at(F, N, t->dim, 0, pairing * t->central),
                   Poly::constant(F, one)};
    TransportReport r = commutator_transport(a, b, coset, c0, c1, -4, 4, t);
    CHECK(r.shape_ok);
    CHECK(r.recovery_ok);
    CHECK(r.tilde_ok);
    CHECK(r.pairs_checked > 0);

    // A corrupted c0 is caught and the error names the failing exponents.
    EbarElement c0bad = c0;
    c0bad.dist = c0.dist + identity_at(F, N, t->dim, 0, Cyclo(F, 1L));
    bool threw = false;
    try {
      commutator_transport(a, b, coset, c0bad, c1, -4, 4, t);
    } catch (const Error& err) {
      threw = true;
      CHECK(contains(err.what(), "mismatch at exponent"));
    }
    CHECK(threw);

    // Mismatched carrier dimension is rejected up front.
    FamilyPtr u = evaluation_family(eval_at(g, one));
    CHECK_THROWS_AS(commutator_transport(a, b, coset, c0, c1, -4, 4, u),
                    Error);
  }
}

TEST_CASE("factorization of structural carriers") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const int ie = g->basis_index("e"), ih = g->basis_index("h");
  const Cyclo one(F, 1L), i4 = Cyclo::zeta(F);

  // Pure evaluation: the whole action is the atom side.
  {
    FamilyPtr u = evaluation_family(eval_at(g, i4));
    FactorizedRep fac = factorize_rep(u);
    for (int b : {ie, ih})
      for (long n : {-2L, 0L, 1L}) {
        CHECK(fac.piR->mode(b, n).is_zero());
        CHECK(fac.piE->mode(b, n) == u->mode(b, n));
      }
    CHECK(fac.piR->central.is_zero());
    CHECK(fac.piE->central.is_zero());
    CHECK(fac.certificate.degree() == 1);
  }

  // Pure restricted: the whole action is the lower-truncated side.
  {
    FamilyPtr w = small_induced(g, 2);
    FactorizedRep fac = factorize_rep(w);
    for (int b : {ie, ih})
      for (long n : {-1L, 0L, 1L}) {
        CHECK(fac.piR->mode(b, n) == w->mode(b, n));
        CHECK(fac.piE->mode(b, n).is_zero());
      }
    CHECK(fac.piR->central == w->central);
    CHECK(fac.piE->central.is_zero());
    CHECK(fac.restricted_bound_num == w->depth_num);
    CHECK(fac.certificate.degree() == 0);
  }

  // Mixed three-factor tensor: the split acts slot-wise.
  {
    FamilyPtr w = small_induced(g, 2);
    FamilyPtr u1 = evaluation_family(eval_at(g, one));
    FamilyPtr um = evaluation_family(eval_at(g, i4));
    FamilyPtr t = tensor_module({w, u1, um});
    FactorizedRep fac = factorize_rep(t);
    SpMat idw = SpMat::identity(F, w->dim), id2 = SpMat::identity(F, 2);
    for (int b : {ie, ih})
      for (long n : {-2L, -1L, 0L, 1L}) {
        CHECK(fac.piR->mode(b, n) == w->mode(b, n).kron(id2).kron(id2));
        CHECK(fac.piE->mode(b, n) ==
              idw.kron(u1->mode(b, n)).kron(id2) +
                  idw.kron(id2).kron(um->mode(b, n)));
      }
    CHECK(fac.piR->central == t->central);
    CHECK(fac.piE->central.is_zero());
    CHECK(fac.restricted_bound_num == w->depth_num);
    // The certificate covers both evaluation points.
    CHECK(fac.certificate.degree() == 2);
    CHECK(fac.certificate.eval(one).is_zero());
    CHECK(fac.certificate.eval(Cyclo(F, -1L)).is_zero());
  }
}

TEST_CASE("slot permutation intertwines the factor actions") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L);
  FamilyPtr w = small_induced(g, 2);
  FamilyPtr u = evaluation_family(eval_at(g, one));
  FamilyPtr t1 = tensor_module({w, u});
  FamilyPtr t2 = tensor_module({u, w});
  FactorizedRep f1 = factorize_rep(t1);
  FactorizedRep f2 = factorize_rep(t2);

  SpMat swap(F, t1->dim, t1->dim);
  for (int a = 0; a < w->dim; ++a)
    for (int c = 0; c < 2; ++c) swap.set(c * w->dim + a, a * 2 + c, one);
  for (int b = 0; b < g->dim; ++b)
    for (long n : {-1L, 0L, 1L}) {
      CHECK(swap * f1.piR->mode(b, n) == f2.piR->mode(b, n) * swap);
      CHECK(swap * f1.piE->mode(b, n) == f2.piE->mode(b, n) * swap);
    }
}

TEST_CASE("factorization verifies on a mixed tensor") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L);
  FamilyPtr t = tensor_module({small_induced(g, 2),
                               evaluation_family(eval_at(g, one))});
  FactorizedRep fac = factorize_rep(t);
  FactorReport rep = verify_factorization(fac, -4, 4);
  CHECK(rep.brackets.ok);
  CHECK(rep.cross.ok);
  CHECK(rep.additivity.ok);
  CHECK(rep.restriction.ok);
  CHECK(rep.nilpotency.ok);
  CHECK(rep.all_ok());
  CHECK(!rep.inconclusive);
  CHECK(rep.cross.count > 0);
  CHECK(rep.nilpotency.count > 0);

  // Perturbing one mode of the lower-truncated side breaks additivity at
  // exactly that mode.
  FamilyPtr piR = fac.piR;
  const int ie = g->basis_index("e");
  FamilyPtr crooked = opaque_family(
      g, t->dim, fac.piR->central,
      [piR, ie, F](int b, long n) {
        SpMat m = piR->mode(b, n);
        if (b == ie && n == 0)
          m = m + SpMat::identity(F, m.rows());
        return m;
      },
      -12, 12);
  FactorizedRep bad{fac.source, crooked, fac.piE, fac.certificate,
                    fac.restricted_bound_num, fac.category};
  FactorReport brep = verify_factorization(bad, -4, 4);
  CHECK(!brep.additivity.ok);
  CHECK(contains(brep.additivity.detail, "mode sum mismatch"));
  CHECK(contains(brep.additivity.detail, "1/2"));
  CHECK(!brep.all_ok());
}

TEST_CASE("opaque carriers factor through the annihilator recurrence") {
  const CycloField* F = CycloField::get(4);
  AlgebraPtr g = builtin_graded_algebra(F, "sl2", "inner");
  const Cyclo one(F, 1L), i4 = Cyclo::zeta(F);
  FamilyPtr u1 = evaluation_family(eval_at(g, one));
  FamilyPtr um = evaluation_family(eval_at(g, i4));
  FamilyPtr t = tensor_module({u1, um});

  auto wrap = [&](long lo, long hi) {
    return opaque_family(
        g, t->dim, Cyclo(F), [t](int b, long n) { return t->mode(b, n); },
        lo, hi);
  };

  // Generous window: the reconstruction recovers the full atom action.
  FamilyPtr blind = wrap(-10, 10);
  FactorizedRep fac = factorize_rep(blind);
  CHECK(fac.certificate.degree() == 2);
  for (int b = 0; b < g->dim; ++b)
    for (long e = -6; e <= 6; ++e) {
      if (((e - g->grades[b]) % 2 + 2) % 2 != 0) continue;
      CHECK(fac.piE->mode_at(b, e) == t->mode_at(b, e));
      CHECK(fac.piR->mode_at(b, e).is_zero());
    }
  FactorReport rep = verify_factorization(fac, -4, 4);
  CHECK(rep.all_ok());

  // Too narrow for the seed and guard bands: explicit window advice.
  bool threw = false;
  try {
    factorize_rep(wrap(-4, 4));
  } catch (const Error& err) {
    threw = true;
    CHECK(contains(err.what(), "window"));
  }
  CHECK(threw);

  // Super-exponential mode growth defeats every recurrence and every
  // truncation bound, so the carrier is rejected as uncertified.
  const int ih = g->basis_index("h");
  FamilyPtr stray = opaque_family(
      g, 2, Cyclo(F),
      [F, ih](int b, long n) {
        if (b == ih && n >= 0)
          return SpMat::identity(F, 2).scaled(Cyclo(F, 2L).pow(n * n));
        return SpMat(F, 2, 2);
      },
      -8, 8);
  bool threw2 = false;
  try {
    factorize_rep(stray);
  } catch (const Error& err) {
    threw2 = true;
    CHECK(contains(err.what(), "not certified"));
  }
  CHECK(threw2);
}
