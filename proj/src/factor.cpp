#include "affmod/factor.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>

namespace affmod {

namespace {

long mod_pos(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string frac_str(long num, int den) {
  std::ostringstream os;
  os << num << "/" << den;
  return os.str();
}

void require_certificate(const Poly& f) {
  if (f.is_zero()) throw Error("certificate must be nonzero");
  if (f.coeff(0).is_zero())
    throw Error("certificate vanishes at zero; shift the variable first");
}

/// Mode at exponent numerator m of a distribution: the coefficient of
/// x^{-(m+N)/N}, when the window determines it.
std::optional<SpMat> dist_mode(const FormalDistribution& d, long m_num) {
  return d.coeff(-m_num - d.den());
}

std::optional<SpMat> dist_mode_regular(const FormalDistribution& d,
                                       long m_num) {
  return d.regular_coeff(-m_num - d.den());
}

/// Columns on which operator products with the given exponent deficits stay
/// inside a truncated carrier; all columns when there is no truncation.
std::vector<int> safe_columns(const FamilyPtr& carrier, int dim,
                              const std::vector<long>& deficits) {
  std::vector<int> cols;
  if (!carrier || !carrier->truncated) {
    cols.reserve(dim);
    for (int j = 0; j < dim; ++j) cols.push_back(j);
    return cols;
  }
  for (int j = 0; j < dim; ++j) {
    const long d = carrier->degrees[j];
    bool ok = true;
    for (long v : deficits)
      if (d - v > carrier->depth_num) {
        ok = false;
        break;
      }
    if (ok) cols.push_back(j);
  }
  return cols;
}

int first_bad_column(const SpMat& m, const std::vector<int>& cols) {
  for (int j : cols) {
    Vec col = m.apply(vec_unit(m.field(), m.cols(), j));
    if (!vec_is_zero(col)) return j;
  }
  return -1;
}

}  // namespace

EbarElement make_ebar_element(FormalDistribution dist, Poly certificate) {
  require_certificate(certificate);
  if (apply_polynomial(certificate, dist).has_atoms())
    throw Error("certificate does not annihilate the atom part");
  return EbarElement{std::move(dist), std::move(certificate)};
}

EbarElement rep_series(const FamilyPtr& m, const Vec& a, long lo_num,
                       long hi_num) {
  const GradedLieAlgebra& g = *m->alg;
  const CycloField* F = g.field;
  const int N = g.order;
  if (static_cast<int>(a.size()) != g.dim)
    throw Error("coefficient vector length mismatch");
  if (lo_num > hi_num) throw Error("empty series window");
  std::vector<FamilyPtr> leaves = tensor_leaves(m);
  for (const auto& l : leaves)
    if (l->provenance == "opaque")
      throw Error("structural series requires a structural carrier");
  ClassReport rep = category_of(m);
  if (!rep.c_member)
    throw Error("carrier has no annihilator certificate: " + rep.status);

  // Delta atoms of nontrivial evaluation leaves, slotted into the tensor.
  FormalDistribution atom_part =
      FormalDistribution::zero(F, N, m->dim, m->dim);
  long pre = 1;
  for (const auto& l : leaves) {
    long post = m->dim / (pre * l->dim);
    if (l->provenance == "evaluation" && is_nontrivial(l->eval_payload->base)) {
      FormalDistribution leaf = evaluation_series(*l->eval_payload, a);
      for (const DeltaAtom& at : leaf.atoms()) {
        SpMat coeff =
            SpMat::identity(F, static_cast<int>(pre))
                .kron(at.coeff)
                .kron(SpMat::identity(F, static_cast<int>(post)));
        atom_part = atom_part + FormalDistribution::atom(F, N, at.point,
                                                         at.root, at.shift,
                                                         at.deriv, coeff);
      }
    }
    pre *= l->dim;
  }

  LaurentPart reg;
  reg.den = N;
  reg.lo = lo_num;
  reg.hi = hi_num;
  if (m->truncated) {
    reg.exact_below = lo_num <= -m->depth_num - N;
    reg.exact_above = hi_num >= m->depth_num - N;
  } else {
    // Evaluation leaves only: the regular part vanishes identically.
    reg.exact_below = true;
    reg.exact_above = true;
  }
  for (long k = lo_num; k <= hi_num; ++k) {
    const long e = -k - N;
    SpMat total(F, m->dim, m->dim);
    for (int b = 0; b < g.dim; ++b) {
      if (a[b].is_zero()) continue;
      if (mod_pos(e - g.grades[b], N) != 0) continue;
      total = total + m->mode_at(b, e).scaled(a[b]);
    }
    for (const DeltaAtom& at : atom_part.atoms())
      total = total - atom_coeff(F, N, at, k);
    if (!total.is_zero()) reg.entries.emplace(k, std::move(total));
  }

  FormalDistribution dist =
      FormalDistribution::regular(F, std::move(reg), m->dim, m->dim) +
      atom_part;
  return make_ebar_element(std::move(dist), *rep.c_poly);
}

DistDecomposition decompose_dist(const EbarElement& e) {
  require_certificate(e.certificate);
  FormalDistribution singular = e.dist.atoms_only();
  FormalDistribution killed = apply_polynomial(e.certificate, singular);
  if (killed.has_atoms() || !killed.regular_part().is_identically_zero())
    throw Error("certificate does not annihilate the atom part");
  return DistDecomposition{e.dist.regular_part(), std::move(singular)};
}

LaurentPart psi_R_via_formula(const EbarElement& e, const Poly& f,
                              long lo_num, long hi_num) {
  if (lo_num > hi_num) throw Error("empty window");
  require_certificate(f);
  const CycloField* F = e.dist.field();
  const int N = e.dist.den();
  FormalDistribution g = apply_polynomial(f, e.dist);
  if (g.has_atoms())
    throw Error("polynomial is not a certificate for this series");
  const LaurentPart& gr = g.regular_part();
  if (!gr.exact_below)
    throw Error("the series is not known to be bounded below; no expansion");

  LaurentPart out;
  out.den = N;
  out.lo = lo_num;
  out.hi = hi_num;
  if (gr.window_empty()) {
    if (!gr.exact_above)
      throw Error("window undetermined above; widen the series window");
    out.exact_below = true;
    out.exact_above = true;
    return out;
  }
  if (hi_num > gr.hi)
    throw Error("window undetermined above numerator " +
                std::to_string(gr.hi) + "; widen the series window");
  out.exact_below = lo_num <= gr.lo;

  const long terms = std::max(0L, (hi_num - gr.lo) / N + 1);
  std::vector<Cyclo> alpha =
      iota_expand(Poly::constant(F, Cyclo(F, 1L)), f, static_cast<int>(terms));
  for (long k = lo_num; k <= hi_num; ++k) {
    SpMat acc(F, e.dist.rows(), e.dist.cols());
    for (long i = 0; k - i * N >= gr.lo; ++i) {
      auto c = g.regular_coeff(k - i * N);
      if (!c)
        throw Error("window undetermined at numerator " +
                    std::to_string(k - i * N));
      if (!c->is_zero()) acc = acc + c->scaled(alpha[i]);
    }
    if (!acc.is_zero()) out.entries.emplace(k, std::move(acc));
  }
  return out;
}

std::vector<Cyclo> mode_connection(const EbarElement& e, long n_num,
                                   const Vec& w) {
  const CycloField* F = e.dist.field();
  const int N = e.dist.den();
  const Poly& f = e.certificate;
  require_certificate(f);
  if (static_cast<int>(w.size()) != e.dist.cols())
    throw Error("vector length mismatch");
  FormalDistribution g = apply_polynomial(f, e.dist);
  if (g.has_atoms())
    throw Error("certificate does not annihilate the atom part");
  const LaurentPart& gr = g.regular_part();
  if (!gr.exact_below)
    throw Error("range exceeds the safe window: series unbounded below");

  // Lowest numerator where f * dist * w can be nonzero: in-window entries
  // plus, when the window is not exact above, everything past its top.
  long c_min = std::numeric_limits<long>::max();
  for (const auto& [k, mat] : gr.entries)
    if (!vec_is_zero(mat.apply(w))) {
      c_min = std::min(c_min, k);
      break;
    }
  if (!gr.exact_above) {
    if (gr.window_empty())
      throw Error("range exceeds the safe window: the series window is empty");
    c_min = std::min(c_min, gr.hi + 1);
  }
  long k_trunc = 0;
  if (c_min != std::numeric_limits<long>::max())
    k_trunc = std::max(0L, -floor_div(c_min, N));

  const long c = -n_num - N;  // series numerator of the requested mode
  const long i_max = floor_div(c + k_trunc * static_cast<long>(N), N);
  const long degf = f.degree();
  std::vector<Cyclo> alpha;
  if (i_max >= 0)
    alpha = iota_expand(Poly::constant(F, Cyclo(F, 1L)), f,
                        static_cast<int>(i_max + 1));
  std::vector<Cyclo> beta(static_cast<size_t>(std::max(0L, i_max + 1 + degf)),
                          Cyclo(F));
  for (long i = 0; i <= i_max; ++i)
    for (long j = 0; j <= degf; ++j) beta[i + j] += alpha[i] * f.coeff(j);
  while (!beta.empty() && beta.back().is_zero()) beta.pop_back();

  // Verify the identity exactly on w.
  Vec lhs = vec_zero(F, e.dist.rows());
  for (long i = 0; i <= i_max; ++i) {
    auto mat = g.regular_coeff(c - i * N);
    if (!mat)
      throw Error("range exceeds the safe window above numerator " +
                  std::to_string(gr.hi));
    if (!mat->is_zero()) lhs = vec_add(lhs, vec_scaled(mat->apply(w), alpha[i]));
  }
  Vec rhs = vec_zero(F, e.dist.rows());
  for (size_t s = 0; s < beta.size(); ++s) {
    if (beta[s].is_zero()) continue;
    auto mat = dist_mode(e.dist, n_num + static_cast<long>(s) * N);
    if (!mat)
      throw Error("range exceeds the safe window: mode " +
                  frac_str(n_num + static_cast<long>(s) * N, N) +
                  " is undetermined");
    rhs = vec_add(rhs, vec_scaled(mat->apply(w), beta[s]));
  }
  if (lhs != rhs) throw Error("mode connection identity failed on the vector");
  auto structural = dist_mode_regular(e.dist, n_num);
  if (structural && structural->apply(w) != lhs)
    throw Error("mode connection disagrees with the structural projection");
  return beta;
}

TransportReport commutator_transport(const EbarElement& a,
                                     const EbarElement& b, int coset_num,
                                     const EbarElement& c0,
                                     const EbarElement& c1, long lo_num,
                                     long hi_num, const FamilyPtr& carrier) {
  if (lo_num > hi_num) throw Error("empty window");
  const CycloField* F = a.dist.field();
  const int N = a.dist.den();
  const int dim = a.dist.rows();
  if (b.dist.den() != N || c0.dist.den() != N || c1.dist.den() != N)
    throw Error("mixed exponent denominators");
  if (b.dist.rows() != dim || c0.dist.rows() != dim || c1.dist.rows() != dim ||
      a.dist.cols() != dim || b.dist.cols() != dim || c0.dist.cols() != dim ||
      c1.dist.cols() != dim)
    throw Error("mixed carrier dimensions");
  if (carrier && carrier->dim != dim)
    throw Error("carrier dimension mismatch");
  const Cyclo i_over_N(F, Rational(coset_num, N));
  TransportReport rep;

  auto commutator_at = [&](long m, long n) -> std::optional<SpMat> {
    auto am = dist_mode(a.dist, m), bn = dist_mode(b.dist, n);
    if (!am || !bn) return std::nullopt;
    return *am * *bn - *bn * *am;
  };
  auto tilde_commutator_at = [&](long m, long n) -> std::optional<SpMat> {
    auto am = dist_mode_regular(a.dist, m), bn = dist_mode_regular(b.dist, n);
    if (!am || !bn) return std::nullopt;
    return *am * *bn - *bn * *am;
  };

  // Residue recovery of c1 and c0 from the bracket.
  for (long q = lo_num; q <= hi_num; ++q) {
    auto t1 = commutator_at(coset_num + N, q - coset_num);
    auto t2 = commutator_at(coset_num, q - coset_num + N);
    auto c1q = dist_mode(c1.dist, q);
    if (!t1 || !t2 || !c1q) {
      ++rep.pairs_skipped;
    } else {
      std::vector<int> cols = safe_columns(
          carrier, dim,
          {coset_num + N, q - coset_num, q - coset_num + N,
           static_cast<long>(coset_num), q + N});
      SpMat diff = *t1 - *t2 - *c1q;
      int bad = first_bad_column(diff, cols);
      if (bad >= 0)
        throw Error("second residue mismatch at exponent " + frac_str(q, N) +
                    ", column " + std::to_string(bad));
      ++rep.pairs_checked;
    }
    auto t0 = commutator_at(coset_num, q - coset_num);
    auto c0q = dist_mode(c0.dist, q);
    auto c1s = dist_mode(c1.dist, q - N);
    if (!t0 || !c0q || !c1s) {
      ++rep.pairs_skipped;
    } else {
      std::vector<int> cols = safe_columns(
          carrier, dim, {static_cast<long>(coset_num), q - coset_num, q});
      SpMat diff = *t0 - *c0q - c1s->scaled(i_over_N);
      int bad = first_bad_column(diff, cols);
      if (bad >= 0)
        throw Error("first residue mismatch at exponent " + frac_str(q, N) +
                    ", column " + std::to_string(bad));
      ++rep.pairs_checked;
    }
  }
  rep.recovery_ok = true;

  // Bracket shape for the originals and for the projections.
  bool tilde_ok = true;
  std::string tilde_detail;
  for (long m = lo_num; m <= hi_num; ++m) {
    if (mod_pos(m - coset_num, N) != 0) continue;
    const Cyclo m_over_N(F, Rational(m, N));
    for (long n = lo_num; n <= hi_num; ++n) {
      std::vector<int> cols = safe_columns(carrier, dim, {m, n, m + n});
      auto lhs = commutator_at(m, n);
      auto c0mn = dist_mode(c0.dist, m + n);
      auto c1mn = dist_mode(c1.dist, m + n - N);
      if (!lhs || !c0mn || !c1mn) {
        ++rep.pairs_skipped;
      } else {
        SpMat diff = *lhs - *c0mn - c1mn->scaled(m_over_N);
        int bad = first_bad_column(diff, cols);
        if (bad >= 0)
          throw Error("bracket shape mismatch at exponents " + frac_str(m, N) +
                      ", " + frac_str(n, N) + ", column " +
                      std::to_string(bad));
        ++rep.pairs_checked;
      }
      auto tl = tilde_commutator_at(m, n);
      auto tc0 = dist_mode_regular(c0.dist, m + n);
      auto tc1 = dist_mode_regular(c1.dist, m + n - N);
      if (!tl || !tc0 || !tc1) {
        ++rep.pairs_skipped;
      } else {
        SpMat diff = *tl - *tc0 - tc1->scaled(m_over_N);
        int bad = first_bad_column(diff, cols);
        if (bad >= 0 && tilde_ok) {
          tilde_ok = false;
          tilde_detail = "projected shape mismatch at exponents " +
                         frac_str(m, N) + ", " + frac_str(n, N) + ", column " +
                         std::to_string(bad);
        }
        ++rep.pairs_checked;
      }
    }
  }
  if (rep.pairs_checked == 0)
    throw Error("window admits no checkable coefficient pairs");
  rep.shape_ok = true;
  rep.tilde_ok = tilde_ok;
  rep.detail = tilde_ok ? "ok" : tilde_detail;
  return rep;
}

namespace {

FamilyPtr zero_leaf(const AlgebraPtr& alg, int dim) {
  const CycloField* F = alg->field;
  std::vector<SpMat> acts(alg->dim, SpMat(F, dim, dim));
  FiniteModule base = make_finite_module(alg, std::move(acts));
  return evaluation_family(
      make_evaluation_module(std::move(base), Cyclo(F, 1L), Cyclo(F, 1L)));
}

bool leaf_goes_to_atoms(const FamilyPtr& leaf) {
  return leaf->provenance == "evaluation" &&
         is_nontrivial(leaf->eval_payload->base);
}

/// Rebuilds the tensor with the complementary side's leaves replaced by
/// zero actions of the same dimension, preserving the slot layout.
FamilyPtr rebuild_side(const FamilyPtr& m, bool atom_side, int max_dim) {
  if (m->provenance == "tensor") {
    std::vector<FamilyPtr> fs;
    fs.reserve(m->tensor_factors.size());
    for (const auto& f : m->tensor_factors)
      fs.push_back(rebuild_side(f, atom_side, max_dim));
    return tensor_module(std::move(fs), max_dim);
  }
  if (leaf_goes_to_atoms(m) == atom_side) return m;
  return zero_leaf(m->alg, m->dim);
}

}  // namespace

FactorizedRep factorize_rep(const FamilyPtr& m, long window_num,
                            long degree_bound) {
  const GradedLieAlgebra& g = *m->alg;
  const CycloField* F = g.field;
  const int N = g.order;
  ClassReport cat = category_of(m, window_num, degree_bound);
  if (!cat.c_member)
    throw Error("carrier is not certified in the middle category: " +
                cat.status);
  FactorizedRep out{m, nullptr, nullptr, *cat.c_poly, 0, std::move(cat)};

  bool structural = m->provenance != "opaque";
  for (const auto& l : tensor_leaves(m))
    if (l->provenance == "opaque") structural = false;

  if (structural) {
    out.piR = rebuild_side(m, false, m->dim);
    out.piE = rebuild_side(m, true, m->dim);
    out.restricted_bound_num = out.piR->truncated ? out.piR->depth_num : 0;
    return out;
  }

  // Annihilator-recurrence reconstruction of the atom part. In series
  // numerators q (mode e = -q - N), f * dist vanishes for q below some
  // bound; the atom part satisfies f0 A(q) = -sum_{j>=1} f_j A(q - jN) with
  // f0 = f(0) != 0 and equals the full series at the window bottom, where
  // the lower-truncated part has died out.
  long wlo, whi;
  if (m->opaque_window) {
    wlo = m->opaque_window->first;
    whi = m->opaque_window->second;
  } else {
    whi = window_num > 0 ? window_num : 2L * m->dim * N + 2 * N;
    wlo = -whi;
  }
  const Poly f = out.certificate;
  const long degf = f.degree();
  if (f.coeff(0).is_zero())
    throw Error("annihilator vanishes at zero; widen the exponent window");
  const long slo = -whi - N, shi = -wlo - N;

  if (degf == 0) {
    out.piR = m;
    out.piE = zero_leaf(m->alg, m->dim);
    out.restricted_bound_num = wlo - 1;
    return out;
  }

  // Bottom-margin check: f * dist must vanish on the seed band plus a guard
  // band, and the first nonzero value bounds the lower-truncated support.
  const long seed_top = slo + degf * N - 1;
  const long margin_top = seed_top + (degf + 1) * N;
  if (margin_top + degf * N > shi)
    throw Error("atom reconstruction failed: window too narrow for the seed "
                "and guard bands; widen it");
  long restricted_bound = wlo - 1;
  bool any_bound = false;
  for (int b = 0; b < g.dim; ++b) {
    long q_bot = shi + 1;
    for (long q = slo + degf * N; q <= shi; ++q) {
      if (mod_pos(-q - N - g.grades[b], N) != 0) continue;
      SpMat acc(F, m->dim, m->dim);
      for (long j = 0; j <= degf; ++j)
        acc = acc + m->mode_at(b, -(q - j * N) - N).scaled(f.coeff(j));
      if (!acc.is_zero()) {
        q_bot = q;
        break;
      }
    }
    if (q_bot <= margin_top)
      throw Error(
          "atom reconstruction failed: the annihilated tail is not visible "
          "at the window bottom; widen the window below");
    if (q_bot <= shi) {
      any_bound = true;
      restricted_bound = std::max(restricted_bound, -q_bot - N);
    }
  }
  out.restricted_bound_num = any_bound ? restricted_bound : wlo - 1;

  const Cyclo f0inv = f.coeff(0).inverse();
  const AlgebraPtr alg = m->alg;
  const int dim = m->dim;
  auto atom_at = [m, alg, F, dim, f, degf, f0inv, slo, shi,
                  seed_top](int basis, long n) -> SpMat {
    const long e = n * alg->order + alg->grades[basis];
    const long q = -e - static_cast<long>(alg->order);
    if (q < slo || q > shi)
      throw Error("mode outside the reconstruction window");
    const int N = alg->order;
    long q0 = q;
    while (q0 - N >= slo) q0 -= N;
    std::vector<SpMat> chain;
    chain.reserve(static_cast<size_t>((q - q0) / N + 1));
    for (long qq = q0; qq <= q; qq += N) {
      if (qq <= seed_top) {
        chain.push_back(m->mode_at(basis, -qq - N));
        continue;
      }
      SpMat acc(F, dim, dim);
      for (long j = 1; j <= degf; ++j)
        acc = acc +
              chain[static_cast<size_t>((qq - j * N - q0) / N)].scaled(
                  f.coeff(j));
      chain.push_back(acc.scaled(f0inv).scaled(Cyclo(F, -1L)));
    }
    return chain.back();
  };
  out.piE = opaque_family(alg, dim, Cyclo(F), atom_at, wlo, whi);
  out.piR = opaque_family(
      alg, dim, m->central,
      [m, atom_at](int basis, long n) {
        return m->mode(basis, n) - atom_at(basis, n);
      },
      wlo, whi);
  return out;
}

FactorReport verify_factorization(const FactorizedRep& F, long lo_num,
                                  long hi_num) {
  if (lo_num > hi_num) throw Error("empty exponent window");
  const GradedLieAlgebra& g = *F.source->alg;
  const CycloField* Fld = g.field;
  const int N = g.order;
  const int dim = F.source->dim;
  FactorReport rep;

  // (1) defining bracket relations on each side separately.
  BracketCheck bR = commutator_series_check(F.piR, lo_num, hi_num);
  BracketCheck bE = commutator_series_check(F.piE, lo_num, hi_num);
  rep.brackets.ok = bR.ok && bE.ok;
  rep.brackets.count = bR.pairs_checked + bE.pairs_checked;
  rep.brackets.detail = !bR.ok ? "lower-truncated side: " + bR.detail
                        : !bE.ok ? "atom side: " + bE.detail
                                 : "ok";

  // (2) the two sides commute.
  rep.cross.ok = true;
  rep.cross.detail = "ok";
  for (int a = 0; a < g.dim && rep.cross.ok; ++a)
    for (long e1 = lo_num; e1 <= hi_num && rep.cross.ok; ++e1) {
      if (mod_pos(e1 - g.grades[a], N) != 0) continue;
      SpMat X = F.piR->mode_at(a, e1);
      for (int b = 0; b < g.dim && rep.cross.ok; ++b)
        for (long e2 = lo_num; e2 <= hi_num; ++e2) {
          if (mod_pos(e2 - g.grades[b], N) != 0) continue;
          SpMat Y = F.piE->mode_at(b, e2);
          SpMat diff = X * Y - Y * X;
          if (!diff.is_zero()) {
            std::ostringstream os;
            int bad = first_bad_column(diff, safe_columns(nullptr, dim, {}));
            os << "sides fail to commute on (" << g.basis_names[a] << ", "
               << g.basis_names[b] << ") at exponents " << frac_str(e1, N)
               << ", " << frac_str(e2, N) << ", column " << bad;
            rep.cross.detail = os.str();
            rep.cross.ok = false;
            break;
          }
          ++rep.cross.count;
        }
    }

  // (3) the sides add up to the source mode-wise.
  rep.additivity.ok = true;
  rep.additivity.detail = "ok";
  for (int a = 0; a < g.dim && rep.additivity.ok; ++a)
    for (long e = lo_num; e <= hi_num; ++e) {
      if (mod_pos(e - g.grades[a], N) != 0) continue;
      SpMat diff = F.source->mode_at(a, e) - F.piR->mode_at(a, e) -
                   F.piE->mode_at(a, e);
      if (!diff.is_zero()) {
        std::ostringstream os;
        os << "mode sum mismatch on " << g.basis_names[a] << " at exponent "
           << frac_str(e, N) << ", column "
           << first_bad_column(diff, safe_columns(nullptr, dim, {}));
        rep.additivity.detail = os.str();
        rep.additivity.ok = false;
        break;
      }
      ++rep.additivity.count;
    }
  if (!F.piE->central.is_zero()) {
    rep.additivity.ok = false;
    rep.additivity.detail = "atom side carries a central scalar";
  }
  if (F.piR->central != F.source->central) {
    rep.additivity.ok = false;
    rep.additivity.detail = "central scalar not kept on the lower-truncated "
                            "side";
  }

  // (4) piR vanishes above its bound; the certificate kills piE mode-wise.
  rep.restriction.ok = true;
  rep.restriction.detail = "ok";
  const Poly& f = F.certificate;
  const long degf = f.degree();
  for (int a = 0; a < g.dim && rep.restriction.ok; ++a) {
    for (long e = std::max(F.restricted_bound_num + 1, lo_num); e <= hi_num;
         ++e) {
      if (mod_pos(e - g.grades[a], N) != 0) continue;
      SpMat mat = F.piR->mode_at(a, e);
      if (!mat.is_zero()) {
        std::ostringstream os;
        os << "lower-truncated side fails to vanish on " << g.basis_names[a]
           << " at exponent " << frac_str(e, N);
        rep.restriction.detail = os.str();
        rep.restriction.ok = false;
        break;
      }
      ++rep.restriction.count;
    }
    if (!rep.restriction.ok) break;
    for (long e = lo_num; e + degf * N <= hi_num; ++e) {
      if (mod_pos(e - g.grades[a], N) != 0) continue;
      SpMat acc(Fld, dim, dim);
      for (long j = 0; j <= degf; ++j)
        acc = acc + F.piE->mode_at(a, e + j * N).scaled(f.coeff(j));
      if (!acc.is_zero()) {
        std::ostringstream os;
        os << "certificate fails to annihilate the atom side on "
           << g.basis_names[a] << " at exponent " << frac_str(e, N)
           << ", column "
           << first_bad_column(acc, safe_columns(nullptr, dim, {}));
        rep.restriction.detail = os.str();
        rep.restriction.ok = false;
        break;
      }
      ++rep.restriction.count;
    }
  }

  // (5) spanning-set modes act locally nilpotently on both sides; where the
  // sides commute, the vanishing power is cross-checked by the binomial
  // split of (source - lower-truncated)^K.
  rep.nilpotency.ok = true;
  rep.nilpotency.detail = "ok";
  NilpotentSet set = nilpotent_spanning_set(F.source->alg);
  std::vector<Vec> samples;
  samples.push_back(vec_unit(Fld, dim, 0));
  if (dim > 2) samples.push_back(vec_unit(Fld, dim, dim / 2));
  if (dim > 1) samples.push_back(vec_unit(Fld, dim, dim - 1));
  Vec ones = vec_zero(Fld, dim);
  for (int i = 0; i < dim; ++i) ones[i] = Cyclo(Fld, 1L);
  samples.push_back(std::move(ones));
  const int bound = dim + 1;
  for (size_t el = 0; el < set.elements.size() && rep.nilpotency.ok; ++el) {
    bool conclusive = false;
    for (long n : {0L, 1L}) {
      for (const Vec& v : samples) {
        NilpotencyResult rR =
            local_nilpotency_check(F.piR, set, static_cast<int>(el), n, v,
                                   bound);
        NilpotencyResult rE =
            local_nilpotency_check(F.piE, set, static_cast<int>(el), n, v,
                                   bound);
        if (rR.inconclusive || rE.inconclusive) {
          rep.inconclusive = true;
          continue;
        }
        conclusive = true;
        ++rep.nilpotency.count;
        // Binomial split cross-check.
        const Vec& elem = set.elements[el];
        SpMat A = F.source->mode_mixed(elem, n);
        SpMat R = F.piR->mode_mixed(elem, n);
        SpMat E = F.piE->mode_mixed(elem, n);
        if (!(A * R - R * A).is_zero()) continue;
        const int K = *rE.power;
        std::vector<Vec> rpow;
        rpow.push_back(v);
        for (int i = 1; i <= K; ++i) rpow.push_back(R.apply(rpow.back()));
        Vec acc = vec_zero(Fld, dim);
        Cyclo binom(Fld, 1L);
        for (int i = 0; i <= K; ++i) {
          Vec term = rpow[static_cast<size_t>(i)];
          for (int s = 0; s < K - i; ++s) term = A.apply(term);
          Cyclo sign = i % 2 == 0 ? Cyclo(Fld, 1L) : Cyclo(Fld, -1L);
          acc = vec_add(acc, vec_scaled(term, binom * sign));
          if (i < K) binom *= Cyclo(Fld, Rational(K - i, i + 1));
        }
        Vec direct = v;
        for (int s = 0; s < K; ++s) direct = E.apply(direct);
        if (acc != direct) {
          std::ostringstream os;
          os << "binomial split mismatch for " << set.labels[el]
             << " at mode " << n;
          rep.nilpotency.detail = os.str();
          rep.nilpotency.ok = false;
          break;
        }
      }
      if (!rep.nilpotency.ok) break;
    }
    if (rep.nilpotency.ok && !conclusive) {
      rep.nilpotency.ok = false;
      rep.nilpotency.detail =
          "no conclusive nilpotency probe for " + set.labels[el];
    }
  }
  return rep;
}

}  // namespace affmod
