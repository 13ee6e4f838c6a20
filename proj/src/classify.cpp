#include "affmod/classify.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "affmod/factor.hpp"

namespace affmod {

namespace {

long mod_pos(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

std::string frac_str(long num, long den) {
  if (num % den == 0) return std::to_string(num / den);
  return std::to_string(num) + "/" + std::to_string(den);
}

/// Window resolution shared with the category test: the declared window for
/// opaque carriers, otherwise the requested or default symmetric range.
std::pair<long, long> resolve_window(const ModeFamily& m, long window_num) {
  if (m.opaque_window) return *m.opaque_window;
  const long hi = window_num > 0
                      ? window_num
                      : 2L * m.dim * m.alg->order + 2 * m.alg->order;
  return {-hi, hi};
}

std::vector<Cyclo> lattice_candidates(const CycloField* F,
                                      const std::vector<Cyclo>& extra) {
  std::set<Cyclo> seen(extra.begin(), extra.end());
  const Cyclo z = Cyclo::zeta(F, 1);
  for (long a = -8; a <= 8; ++a)
    for (long b = -8; b <= 8; ++b)
      seen.insert(Cyclo(F, a) + z * Cyclo(F, b));
  return std::vector<Cyclo>(seen.begin(), seen.end());
}

Cyclo root_for_point(const CycloField* F, long order, const Cyclo& z) {
  if (order == 1) return z;
  for (const Cyclo& r : lattice_candidates(F, {z})) {
    if (r.is_zero()) continue;
    if (r.pow(order) == z) return r;
  }
  throw Error("no order-" + std::to_string(order) + " root of " + z.str() +
              " in the candidate lattice; enlarge the field modulus");
}

Vec flatten(const SpMat& m) {
  Vec out = vec_zero(m.field(), m.rows() * m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (const auto& [j, v] : m.row(i)) out[i * m.cols() + j] = v;
  return out;
}

SpMat unflatten(const CycloField* F, const Vec& v, int rows, int cols) {
  SpMat out(F, rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!v[i * cols + j].is_zero()) out.set(i, j, v[i * cols + j]);
  return out;
}

SpMat columns_matrix(const CycloField* F, const std::vector<Vec>& cols) {
  const int n = cols.empty() ? 0 : static_cast<int>(cols[0].size());
  SpMat out(F, n, static_cast<int>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k)
    for (int i = 0; i < n; ++i)
      if (!cols[k][i].is_zero()) out.set(i, static_cast<int>(k), cols[k][i]);
  return out;
}

bool is_scalar_matrix(const SpMat& x) {
  return x == SpMat::identity(x.field(), x.rows()).scaled(x.get(0, 0));
}

SpMat poly_at_matrix(const Poly& q, const SpMat& x) {
  const CycloField* F = x.field();
  SpMat out(F, x.rows(), x.cols());
  SpMat pw = SpMat::identity(F, x.rows());
  for (long k = 0; k <= q.degree(); ++k) {
    if (!q.coeff(k).is_zero()) out = out + pw.scaled(q.coeff(k));
    if (k < q.degree()) pw = pw * x;
  }
  return out;
}

Poly matrix_min_poly(const SpMat& x) {
  const CycloField* F = x.field();
  const int n = x.rows();
  std::vector<Vec> pows;
  SpMat pw = SpMat::identity(F, n);
  for (int d = 1; d <= n; ++d) {
    pows.push_back(flatten(pw));
    pw = pw * x;
    const Vec target = flatten(pw);
    SpMat sys(F, n * n, d);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < n * n; ++i)
        if (!pows[k][i].is_zero()) sys.set(i, k, pows[k][i]);
    if (auto sol = solve_linear(sys, target)) {
      Vec cs(static_cast<size_t>(d) + 1, Cyclo(F));
      for (int k = 0; k < d; ++k) cs[k] = Cyclo(F) - (*sol)[k];
      cs[d] = Cyclo(F, 1L);
      return Poly(F, cs);
    }
  }
  throw Error("minimal polynomial search failed");
}

/// A nontrivial proper monic factor of q, or the constant 1 when none is
/// found by square-free splitting or lattice root division.
Poly proper_factor(const CycloField* F, const Poly& q) {
  const Poly one = Poly::constant(F, Cyclo(F, 1L));
  if (q.degree() < 2) return one;
  const Poly g = gcd_monic(q, q.derivative());
  if (g.degree() > 0 && g.degree() < q.degree()) return g;
  for (const Cyclo& c : lattice_candidates(F, {}))
    if (q.eval(c).is_zero())
      return Poly::from_roots(F, {c});
  bool rational = true;
  for (long k = 0; k <= q.degree() && rational; ++k)
    rational = q.coeff(k).is_rational();
  if (rational)
    for (long k = -64; k <= 64; ++k)
      if (q.eval(Cyclo(F, k)).is_zero())
        return Poly::from_roots(F, {Cyclo(F, k)});
  return one;
}

std::vector<Vec> closure_basis(const CycloField* F,
                               const std::vector<SpMat>& ops,
                               const std::vector<Vec>& seeds, int ambient) {
  EchelonSpace span(F, ambient);
  std::vector<Vec> queue;
  for (const auto& s : seeds)
    if (span.insert(s)) queue.push_back(s);
  while (!queue.empty()) {
    const Vec v = queue.back();
    queue.pop_back();
    for (const auto& op : ops) {
      Vec w = op.apply(v);
      if (span.insert(w)) queue.push_back(w);
    }
  }
  return span.basis();
}

/// Ops rewritten in the coordinates of an invariant subspace basis.
std::vector<SpMat> restrict_ops(const CycloField* F,
                                const std::vector<SpMat>& ops,
                                const std::vector<Vec>& basis) {
  const int s = static_cast<int>(basis.size());
  const SpMat bmat = columns_matrix(F, basis);
  std::vector<SpMat> out;
  for (const auto& op : ops) {
    SpMat r(F, s, s);
    for (int k = 0; k < s; ++k) {
      const Vec img = op.apply(basis[k]);
      auto c = solve_linear(bmat, img);
      if (!c) throw Error("subspace is not invariant under the action");
      for (int i = 0; i < s; ++i)
        if (!(*c)[i].is_zero()) r.set(i, k, (*c)[i]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Vec> lift_basis(const CycloField* F,
                            const std::vector<Vec>& space,
                            const std::vector<Vec>& sub) {
  std::vector<Vec> out;
  for (const auto& c : sub) {
    Vec v = vec_zero(F, static_cast<int>(space[0].size()));
    for (size_t i = 0; i < space.size(); ++i)
      if (!c[i].is_zero()) v = vec_add(v, vec_scaled(space[i], c[i]));
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<SpMat> commutant_basis(const CycloField* F,
                                   const std::vector<SpMat>& ops, int n) {
  std::vector<const SpMat*> nz;
  for (const auto& op : ops)
    if (!op.is_zero()) nz.push_back(&op);
  if (nz.empty()) {
    std::vector<SpMat> out;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        SpMat e(F, n, n);
        e.set(i, j, Cyclo(F, 1L));
        out.push_back(std::move(e));
      }
    return out;
  }
  SpMat sys(F, static_cast<int>(nz.size()) * n * n, n * n);
  int blk = 0;
  for (const SpMat* a : nz) {
    for (int k = 0; k < n; ++k)
      for (const auto& [j, v] : a->row(k))
        for (int i = 0; i < n; ++i) sys.add_at(blk + i * n + j, i * n + k, v);
    for (int i = 0; i < n; ++i)
      for (const auto& [k, v] : a->row(i))
        for (int j = 0; j < n; ++j)
          sys.add_at(blk + i * n + j, k * n + j, Cyclo(F) - v);
    blk += n * n;
  }
  std::vector<SpMat> out;
  for (const Vec& v : kernel_basis(sys)) out.push_back(unflatten(F, v, n, n));
  return out;
}

/// Basis, in ambient coordinates, of an irreducible subspace invariant
/// under the ops: descend through single-vector closures, then split along
/// kernels of polynomials in commuting operators until the commutant is
/// scalar. A component that resists splitting over the field is an error.
std::vector<Vec> irreducible_subspace(const CycloField* F,
                                      const std::vector<SpMat>& ambient_ops,
                                      int ambient) {
  std::vector<Vec> space;
  for (int i = 0; i < ambient; ++i) space.push_back(vec_unit(F, ambient, i));
  std::vector<SpMat> cur = ambient_ops;
  while (true) {
    const int s = static_cast<int>(space.size());
    std::optional<std::vector<Vec>> best;
    for (int i = 0; i < s; ++i) {
      auto cl = closure_basis(F, cur, {vec_unit(F, s, i)}, s);
      if (static_cast<int>(cl.size()) < s && (!best || cl.size() < best->size()))
        best = cl;
    }
    if (best) {
      space = lift_basis(F, space, *best);
      cur = restrict_ops(F, cur, *best);
      continue;
    }
    if (s == 1) return space;
    // Unit seeds can be generic after a change of basis; kernels of
    // polynomial factors of the acting operators reach non-generic vectors.
    for (const auto& x : cur) {
      if (x.is_zero()) continue;
      const Poly q = matrix_min_poly(x);
      const Poly q1 = proper_factor(F, q);
      if (q1.degree() <= 0 || q1.degree() >= q.degree()) continue;
      for (const Vec& v : kernel_basis(poly_at_matrix(q1, x))) {
        auto cl = closure_basis(F, cur, {v}, s);
        if (static_cast<int>(cl.size()) < s &&
            (!best || cl.size() < best->size()))
          best = cl;
      }
    }
    if (best) {
      space = lift_basis(F, space, *best);
      cur = restrict_ops(F, cur, *best);
      continue;
    }
    const auto com = commutant_basis(F, cur, s);
    if (com.size() <= 1) return space;
    std::vector<SpMat> tries;
    for (const auto& x : com)
      if (!is_scalar_matrix(x)) tries.push_back(x);
    const size_t singles = tries.size();
    for (size_t a = 0; a < singles; ++a)
      for (size_t b = 0; b < singles; ++b) {
        SpMat p = tries[a] * tries[b];
        if (!is_scalar_matrix(p)) tries.push_back(std::move(p));
        if (a < b) {
          SpMat q = tries[a] + tries[b];
          if (!is_scalar_matrix(q)) tries.push_back(std::move(q));
        }
      }
    bool split = false;
    for (const auto& x : tries) {
      const Poly q = matrix_min_poly(x);
      const Poly q1 = proper_factor(F, q);
      if (q1.degree() <= 0 || q1.degree() >= q.degree()) continue;
      const auto ker = kernel_basis(poly_at_matrix(q1, x));
      if (ker.empty() || static_cast<int>(ker.size()) == s) continue;
      space = lift_basis(F, space, ker);
      cur = restrict_ops(F, cur, ker);
      split = true;
      break;
    }
    if (!split)
      throw Error(
          "cannot split an isotypic component over this cyclotomic field; "
          "enlarge the modulus");
  }
}

struct ModePair {
  SpMat a, b;
};

/// All maps P with P A = B P per pair are parametrized by their values on
/// closure seeds; the seed values solve an exact linear system and an
/// invertible representative is then searched for.
std::optional<SpMat> equivariant_isomorphism(const CycloField* F, int dim,
                                             const std::vector<ModePair>& pairs) {
  EchelonSpace plain(F, dim);
  EchelonSpace tagged(F, 2 * dim);
  std::vector<Vec> bas;
  std::vector<SpMat> words;
  std::vector<int> seed_of;
  int nseeds = 0;

  // The word matrix is only materialized when the image vector enlarges the
  // span; most images are rejected and skipping their products is the bulk
  // of the work at higher carrier dimensions.
  auto push = [&](const Vec& v, const std::function<SpMat()>& w, int sd) {
    if (!plain.insert(v)) return;
    Vec aug = vec_zero(F, 2 * dim);
    for (int i = 0; i < dim; ++i) aug[i] = v[i];
    aug[dim + static_cast<int>(bas.size())] = Cyclo(F, 1L);
    tagged.insert(std::move(aug));
    bas.push_back(v);
    words.push_back(w());
    seed_of.push_back(sd);
  };

  size_t cursor = 0;
  while (true) {
    if (cursor == bas.size()) {
      if (plain.is_full()) break;
      int u = -1;
      for (int i = 0; i < dim && u < 0; ++i)
        if (!plain.contains(vec_unit(F, dim, i))) u = i;
      push(
          vec_unit(F, dim, u), [&] { return SpMat::identity(F, dim); },
          nseeds++);
      continue;
    }
    const Vec v = bas[cursor];
    const SpMat w = words[cursor];
    const int sd = seed_of[cursor];
    ++cursor;
    for (const auto& pr : pairs) {
      if (pr.a.is_zero()) continue;
      push(pr.a.apply(v), [&] { return pr.b * w; }, sd);
    }
  }

  const int nb = static_cast<int>(bas.size());
  auto coords = [&](const Vec& v) {
    Vec aug = vec_zero(F, 2 * dim);
    for (int i = 0; i < dim; ++i) aug[i] = v[i];
    Vec res = tagged.reduce(std::move(aug));
    for (int i = 0; i < dim; ++i)
      if (!res[i].is_zero()) throw Error("closure span is not closed");
    Vec c(static_cast<size_t>(nb), Cyclo(F));
    for (int i = 0; i < nb; ++i) c[i] = Cyclo(F) - res[dim + i];
    return c;
  };

  // Solution space over the stacked seed values, intersected one
  // equivariance constraint at a time; per kernel vector keep the matrix
  // whose columns are the images of the closure basis.
  const int nu = nseeds * dim;
  std::vector<Vec> kb;
  for (int i = 0; i < nu; ++i) kb.push_back(vec_unit(F, nu, i));
  std::vector<std::vector<Vec>> imgs;  // [kernel vec][basis index] -> image
  auto rebuild_imgs = [&] {
    imgs.assign(kb.size(), {});
    for (size_t k = 0; k < kb.size(); ++k) {
      imgs[k].reserve(nb);
      for (int i = 0; i < nb; ++i) {
        Vec seed(kb[k].begin() + seed_of[i] * dim,
                 kb[k].begin() + (seed_of[i] + 1) * dim);
        imgs[k].push_back(words[i].apply(seed));
      }
    }
  };
  rebuild_imgs();

  for (int bi = 0; bi < nb && !kb.empty(); ++bi) {
    for (const auto& pr : pairs) {
      if (kb.empty()) break;
      const Vec c = coords(pr.a.apply(bas[bi]));
      std::vector<Vec> residuals;
      bool violated = false;
      for (size_t k = 0; k < kb.size(); ++k) {
        Vec r = pr.b.apply(imgs[k][bi]);
        for (int l = 0; l < nb; ++l)
          if (!c[l].is_zero()) r = vec_sub(r, vec_scaled(imgs[k][l], c[l]));
        if (!vec_is_zero(r)) violated = true;
        residuals.push_back(std::move(r));
      }
      if (!violated) continue;
      const auto combos = kernel_basis(columns_matrix(F, residuals));
      std::vector<Vec> next;
      for (const Vec& cb : combos) {
        Vec u = vec_zero(F, nu);
        for (size_t k = 0; k < kb.size(); ++k)
          if (!cb[k].is_zero()) u = vec_add(u, vec_scaled(kb[k], cb[k]));
        next.push_back(std::move(u));
      }
      kb = std::move(next);
      rebuild_imgs();
    }
  }
  if (kb.empty()) return std::nullopt;

  // Candidate maps in standard coordinates.
  std::vector<Vec> unit_coords;
  for (int j = 0; j < dim; ++j) unit_coords.push_back(coords(vec_unit(F, dim, j)));
  auto to_matrix = [&](size_t k) {
    SpMat p(F, dim, dim);
    for (int j = 0; j < dim; ++j) {
      Vec col = vec_zero(F, dim);
      for (int l = 0; l < nb; ++l)
        if (!unit_coords[j][l].is_zero())
          col = vec_add(col, vec_scaled(imgs[k][l], unit_coords[j][l]));
      for (int i = 0; i < dim; ++i)
        if (!col[i].is_zero()) p.set(i, j, col[i]);
    }
    return p;
  };
  std::vector<SpMat> cands;
  for (size_t k = 0; k < kb.size(); ++k) cands.push_back(to_matrix(k));

  auto verified = [&](const SpMat& p) {
    if (rank_of(p) != dim) return false;
    for (const auto& pr : pairs)
      if (p * pr.a != pr.b * p) return false;
    return true;
  };
  for (const auto& p : cands)
    if (verified(p)) return p;
  for (size_t i = 0; i < cands.size(); ++i)
    for (size_t j = i + 1; j < cands.size(); ++j) {
      SpMat s = cands[i] + cands[j];
      if (verified(s)) return s;
      s = cands[i] - cands[j];
      if (verified(s)) return s;
    }
  if (cands.size() >= 2) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 128; ++t) {
      SpMat s(F, dim, dim);
      for (const auto& c : cands) {
        const long w = static_cast<long>(rng() % (4UL * dim + 3)) - 2L * dim - 1;
        s = s + c.scaled(Cyclo(F, w));
      }
      if (verified(s)) return s;
    }
  }
  return std::nullopt;
}

struct SlotContext {
  std::vector<Cyclo> points;
  std::vector<Cyclo> roots;
  std::vector<std::vector<SpMat>> sigma;  // [slot][basis element]
  long checks = 0;
};

/// Slot operators at sorted distinct points, validated as commuting
/// algebra actions that reassemble every mode on the window.
SlotContext slot_operators(const FamilyPtr& m, std::vector<Cyclo> points,
                           long window_num) {
  const CycloField* F = m->alg->field;
  const long N = m->alg->order;
  for (const auto& z : points)
    if (z.is_zero()) throw Error("evaluation points must be nonzero");
  std::sort(points.begin(), points.end());
  for (size_t i = 0; i + 1 < points.size(); ++i)
    if (points[i] == points[i + 1])
      throw Error("evaluation points must be pairwise distinct");
  const auto [lo, hi] = resolve_window(*m, window_num);
  const long r = static_cast<long>(points.size());
  SlotContext ctx;
  ctx.points = points;
  const std::vector<Poly> proj = lagrange_projectors(F, points);
  for (long j = 0; j < r; ++j)
    ctx.roots.push_back(root_for_point(F, N, points[j]));
  for (long j = 0; j < r; ++j) {
    std::vector<SpMat> act;
    for (int b = 0; b < m->alg->dim; ++b) {
      const long g = m->alg->grades[b];
      if (g < lo || g + (r - 1) * N > hi)
        throw Error("the declared window is too short for slot recovery; "
                    "exponent numerators up to " +
                    std::to_string(g + (r - 1) * N) + " are needed");
      SpMat acc(F, m->dim, m->dim);
      for (long s = 0; s < r; ++s) {
        const Cyclo c = proj[j].coeff(s);
        if (c.is_zero()) continue;
        acc = acc + m->mode_at(b, g + s * N).scaled(c);
      }
      act.push_back(acc.scaled(ctx.roots[j].pow(-g)));
    }
    ctx.sigma.push_back(std::move(act));
  }
  for (long j = 0; j < r; ++j) {
    try {
      make_finite_module(m->alg, ctx.sigma[j]);
    } catch (const Error& e) {
      throw Error("slot action at point " + points[j].str() +
                  " fails: " + e.what());
    }
  }
  for (long j = 0; j < r; ++j)
    for (long l = j + 1; l < r; ++l)
      for (int a = 0; a < m->alg->dim; ++a)
        for (int b = 0; b < m->alg->dim; ++b)
          if (ctx.sigma[j][a] * ctx.sigma[l][b] !=
              ctx.sigma[l][b] * ctx.sigma[j][a])
            throw Error("slot actions at " + points[j].str() + " and " +
                        points[l].str() + " do not commute");
  const long rlo = std::max(lo, -(r + 2) * N);
  const long rhi = std::min(hi, (r + 2) * N);
  long count = 0;
  for (int b = 0; b < m->alg->dim; ++b) {
    const long g = m->alg->grades[b];
    for (long e = rlo; e <= rhi; ++e) {
      if (mod_pos(e - g, N) != 0) continue;
      SpMat expect(F, m->dim, m->dim);
      for (long j = 0; j < r; ++j)
        expect = expect + ctx.sigma[j][b].scaled(ctx.roots[j].pow(e));
      if (m->mode_at(b, e) != expect)
        throw Error("modes are not atom sums over the recovered points at "
                    "exponent " + frac_str(e, N) + " of " +
                    m->alg->basis_names[b]);
      ++count;
    }
  }
  if (count == 0 && r > 0)
    throw Error("window admits no checkable modes for atom reassembly");
  ctx.checks = count;
  return ctx;
}

std::vector<EvaluationSlot> extract_slots(const FamilyPtr& m,
                                          const SlotContext& ctx) {
  const CycloField* F = m->alg->field;
  std::vector<EvaluationSlot> out;
  for (size_t j = 0; j < ctx.points.size(); ++j) {
    const auto sub = irreducible_subspace(F, ctx.sigma[j], m->dim);
    const auto acts = restrict_ops(F, ctx.sigma[j], sub);
    FiniteModule fm = make_finite_module(m->alg, acts);
    if (!is_nontrivial(fm))
      throw Error("recovered slot module at point " + ctx.points[j].str() +
                  " is trivial; the carrier is not a tensor of irreducible "
                  "evaluation modules");
    out.push_back({ctx.points[j], ctx.roots[j], std::move(fm)});
  }
  return out;
}

FamilyPtr rebuild_evaluation(const AlgebraPtr& alg,
                             const std::vector<EvaluationSlot>& slots,
                             int fallback_dim) {
  const CycloField* F = alg->field;
  if (slots.empty()) {
    std::vector<SpMat> z(alg->dim, SpMat(F, fallback_dim, fallback_dim));
    return evaluation_family(make_evaluation_module(
        make_finite_module(alg, z), Cyclo(F, 1L), Cyclo(F, 1L)));
  }
  std::vector<FamilyPtr> fams;
  for (const auto& s : slots)
    fams.push_back(
        evaluation_family(make_evaluation_module(s.factor, s.point, s.root)));
  if (fams.size() == 1) return fams[0];
  long total = 1;
  for (const auto& f : fams) total *= f->dim;
  return tensor_module(fams, std::max<int>(static_cast<int>(total), 4096));
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string(stage) + " stage: " + e.what());
  }
}

}  // namespace

AnnihilatorResult minimal_annihilator(const FamilyPtr& m, long window_num,
                                      long degree_bound) {
  const CycloField* F = m->alg->field;
  const long N = m->alg->order;
  const ClassReport rep = category_of(m, window_num, degree_bound);
  if (!rep.evaluation_like)
    throw Error("carrier is not certified in the evaluation category: " +
                rep.status);
  const auto [lo, hi] = resolve_window(*m, window_num);
  const long max_deg = degree_bound > 0
                           ? degree_bound
                           : std::min<long>(m->dim, (hi - lo) / (2L * N));
  for (long deg = 0; deg <= max_deg; ++deg) {
    std::vector<std::pair<int, long>> positions;
    for (int b = 0; b < m->alg->dim; ++b)
      for (long e = lo; e + deg * N <= hi; ++e) {
        if (mod_pos(e - m->alg->grades[b], N) != 0) continue;
        positions.emplace_back(b, e);
      }
    if (positions.empty()) break;
    const int rows_per = m->dim * m->dim;
    SpMat sys(F, static_cast<int>(positions.size()) * rows_per,
              static_cast<int>(deg + 1));
    for (size_t pi = 0; pi < positions.size(); ++pi) {
      const auto& [b, e] = positions[pi];
      for (long k = 0; k <= deg; ++k) {
        const SpMat a = m->mode_at(b, e + k * N);
        for (int i = 0; i < a.rows(); ++i)
          for (const auto& [j, val] : a.row(i))
            sys.set(static_cast<int>(pi) * rows_per + i * m->dim + j,
                    static_cast<int>(k), val);
      }
    }
    const std::vector<Vec> ker = kernel_basis(sys);
    if (ker.empty()) continue;
    if (ker.size() != 1 || ker.front()[deg].is_zero())
      throw Error("the annihilator is not pinned at degree " +
                  std::to_string(deg) + " on this window; widen it");
    const Poly p = Poly(F, ker.front()).monic();
    if (p.coeff(0).is_zero())
      throw Error("the annihilator vanishes at zero on this window; widen "
                  "the exponent window");
    AnnihilatorResult out{p, {}, ""};
    const std::vector<Cyclo> pts = recover_points(p, {});
    if (!pts.empty()) {
      const std::vector<Poly> proj = lagrange_projectors(F, pts);
      const long r = static_cast<long>(pts.size());
      for (long j = 0; j < r; ++j) {
        bool found = false;
        for (int b = 0; b < m->alg->dim && !found; ++b) {
          const long g = m->alg->grades[b];
          if (g < lo || g + (r - 1) * N > hi) continue;
          SpMat t(F, m->dim, m->dim);
          for (long s = 0; s < r; ++s) {
            const Cyclo c = proj[j].coeff(s);
            if (!c.is_zero())
              t = t + m->mode_at(b, g + s * N).scaled(c);
          }
          if (t.is_zero()) continue;
          for (int col = 0; col < m->dim && !found; ++col) {
            bool nz = false;
            for (int row = 0; row < m->dim && !nz; ++row)
              nz = !t.get(row, col).is_zero();
            if (!nz) continue;
            out.witnesses.push_back(
                {pts[j], b, vec_unit(F, m->dim, col)});
            found = true;
          }
        }
        if (!found)
          throw Error("no minimality witness at point " + pts[j].str() +
                      "; the annihilator is not minimal on this window");
      }
    }
    out.evidence = "least-degree annihilator on the exponent window [" +
                   frac_str(lo, N) + ", " + frac_str(hi, N) +
                   "]; every root carries a nonzero slot-coefficient witness";
    return out;
  }
  throw Error("no annihilator of degree <= " + std::to_string(max_deg) +
              " on the available window");
}

std::vector<Cyclo> recover_points(const Poly& p,
                                  const std::vector<Cyclo>& candidates) {
  if (p.is_zero()) throw Error("the zero polynomial has no point set");
  const CycloField* F = p.field();
  if (p.coeff(0).is_zero())
    throw Error("the polynomial vanishes at zero; points must be nonzero");
  Poly q = squarefree_part(p);
  const std::vector<Cyclo> cand = lattice_candidates(F, candidates);
  std::vector<Cyclo> roots;
  bool progress = true;
  while (q.degree() > 0 && progress) {
    progress = false;
    for (const Cyclo& c : cand) {
      if (c.is_zero()) continue;
      if (!q.eval(c).is_zero()) continue;
      roots.push_back(c);
      q = q.divmod(Poly::from_roots(F, {c})).first;
      progress = true;
      break;
    }
  }
  if (q.degree() > 0)
    throw Error("point recovery is incomplete over the candidate set; "
                "unresolved factor: " + q.monic().str());
  std::sort(roots.begin(), roots.end());
  return roots;
}

RecoveredFactors recover_factors(const FamilyPtr& m,
                                 const std::vector<Cyclo>& points,
                                 long window_num) {
  const CycloField* F = m->alg->field;
  const long N = m->alg->order;
  const ClassReport rep = category_of(m, window_num, 0);
  if (!rep.evaluation_like)
    throw Error("carrier is not certified in the evaluation category: " +
                rep.status);
  if (!m->central.is_zero())
    throw Error("evaluation carriers have zero central scalar; found " +
                m->central.str());
  const auto [lo, hi] = resolve_window(*m, window_num);
  if (points.empty()) {
    for (int b = 0; b < m->alg->dim; ++b)
      for (long e = std::max(lo, -3 * N); e <= std::min(hi, 3 * N); ++e) {
        if (mod_pos(e - m->alg->grades[b], N) != 0) continue;
        if (!m->mode_at(b, e).is_zero())
          throw Error("no evaluation points given but the modes act nonzero");
      }
    RecoveredFactors out;
    out.intertwiner = SpMat::identity(F, m->dim);
    out.evidence = "the carrier acts trivially; no evaluation slots";
    return out;
  }
  const SlotContext ctx = slot_operators(m, points, window_num);
  RecoveredFactors out;
  out.slots = extract_slots(m, ctx);
  long total = 1;
  for (const auto& s : out.slots) total *= s.factor.dim;
  if (total != m->dim)
    throw Error("recovered slots have total dimension " +
                std::to_string(total) + " but the carrier dimension is " +
                std::to_string(m->dim) +
                "; the carrier is not a tensor of irreducible evaluation "
                "modules");
  const FamilyPtr model = rebuild_evaluation(m->alg, out.slots, m->dim);
  const long w = (static_cast<long>(points.size()) + 1) * N;
  const auto phi = family_isomorphism(model, m, -w, w);
  if (!phi)
    throw Error("no invertible intertwiner between the rebuilt evaluation "
                "tensor and the carrier");
  out.intertwiner = *phi;
  std::ostringstream ev;
  ev << out.slots.size() << " slots recovered; " << ctx.checks
     << " mode reassembly checks; intertwiner verified";
  out.evidence = ev.str();
  return out;
}

Vec evaluation_isomorphism(const AffineElement& x, const Cyclo& point,
                           const Cyclo& root) {
  const AlgebraPtr& alg = x.alg;
  const CycloField* F = alg->field;
  if (point.is_zero()) throw Error("evaluation point must be nonzero");
  if (root.pow(alg->order) != point)
    throw Error("root^N must equal the evaluation point");
  Vec out = vec_zero(F, alg->dim);
  for (const auto& [key, c] : x.terms) {
    const auto& [e, b] = key;
    if (mod_pos(e - alg->grades[b], alg->order) != 0)
      throw Error("exponent numerator off the lattice of " +
                  alg->basis_names[b]);
    out[b] += c * root.pow(e);
  }
  return out;
}

long loop_evaluation_check(const AlgebraPtr& alg, const Cyclo& point,
                           const Cyclo& root, long lo_num, long hi_num) {
  const CycloField* F = alg->field;
  const long N = alg->order;
  long count = 0;
  for (int a = 0; a < alg->dim; ++a)
    for (long u = lo_num; u <= hi_num; ++u) {
      if (mod_pos(u - alg->grades[a], N) != 0) continue;
      AffineElement x(alg);
      x.add_term(a, u, Cyclo(F, 1L));
      const Vec px = evaluation_isomorphism(x, point, root);
      AffineElement xt(alg);
      xt.add_term(a, u + N, Cyclo(F, 1L));
      if (evaluation_isomorphism(xt, point, root) != vec_scaled(px, point))
        throw Error("multiplication by t does not scale by the point at " +
                    alg->basis_names[a] + " t^" + frac_str(u, N));
      ++count;
      for (int b = 0; b < alg->dim; ++b)
        for (long v = lo_num; v <= hi_num; ++v) {
          if (mod_pos(v - alg->grades[b], N) != 0) continue;
          AffineElement y(alg);
          y.add_term(b, v, Cyclo(F, 1L));
          const Vec py = evaluation_isomorphism(y, point, root);
          const Vec lhs =
              evaluation_isomorphism(affine_bracket(x, y), point, root);
          if (lhs != alg->bracket_vec(px, py))
            throw Error("evaluation fails the bracket law on (" +
                        alg->basis_names[a] + " t^" + frac_str(u, N) + ", " +
                        alg->basis_names[b] + " t^" + frac_str(v, N) + ")");
          ++count;
        }
    }
  return count;
}

std::optional<SpMat> module_isomorphism(const FiniteModule& a,
                                        const FiniteModule& b) {
  if (a.alg != b.alg) throw Error("modules over different algebras");
  if (a.g0_only != b.g0_only) return std::nullopt;
  if (a.dim != b.dim) return std::nullopt;
  std::vector<ModePair> pairs;
  for (int i = 0; i < a.alg->dim; ++i) {
    if (a.g0_only && a.alg->grades[i] != 0) continue;
    if (a.action[i].is_zero() && b.action[i].is_zero()) continue;
    pairs.push_back({a.action[i], b.action[i]});
  }
  if (pairs.empty()) return SpMat::identity(a.alg->field, a.dim);
  return equivariant_isomorphism(a.alg->field, a.dim, pairs);
}

std::optional<SpMat> family_isomorphism(const FamilyPtr& a, const FamilyPtr& b,
                                        long lo_num, long hi_num) {
  if (a->alg != b->alg) throw Error("families over different algebras");
  if (a->dim != b->dim) return std::nullopt;
  if (!(a->central == b->central)) return std::nullopt;
  const CycloField* F = a->alg->field;
  const long N = a->alg->order;
  long lo = lo_num, hi = hi_num;
  for (const FamilyPtr& f : {a, b})
    if (f->opaque_window) {
      lo = std::max(lo, f->opaque_window->first);
      hi = std::min(hi, f->opaque_window->second);
    }
  if (lo > hi) throw Error("empty exponent window for the intertwiner solve");
  std::vector<ModePair> pairs;
  for (int bb = 0; bb < a->alg->dim; ++bb)
    for (long e = lo; e <= hi; ++e) {
      if (mod_pos(e - a->alg->grades[bb], N) != 0) continue;
      SpMat ma = a->mode_at(bb, e);
      SpMat mb = b->mode_at(bb, e);
      if (ma.is_zero() && mb.is_zero()) continue;
      pairs.push_back({std::move(ma), std::move(mb)});
    }
  if (pairs.empty()) return SpMat::identity(F, a->dim);
  return equivariant_isomorphism(F, a->dim, pairs);
}

bool modules_isomorphic_E(const FamilyPtr& m1, const FamilyPtr& m2,
                          long window_num) {
  const AnnihilatorResult a1 = minimal_annihilator(m1, window_num);
  const AnnihilatorResult a2 = minimal_annihilator(m2, window_num);
  if (!(a1.p == a2.p)) return false;
  const std::vector<Cyclo> pts = recover_points(a1.p);
  const RecoveredFactors f1 = recover_factors(m1, pts, window_num);
  const RecoveredFactors f2 = recover_factors(m2, pts, window_num);
  for (size_t j = 0; j < pts.size(); ++j) {
    if (f1.slots[j].factor.dim != f2.slots[j].factor.dim) return false;
    if (!module_isomorphism(f1.slots[j].factor, f2.slots[j].factor))
      return false;
  }
  return true;
}

ClassificationResult classify_in_C(const FamilyPtr& m, long window_num,
                                   const std::vector<Cyclo>& candidates) {
  const CycloField* F = m->alg->field;
  const long N = m->alg->order;
  const FactorizedRep fac = run_stage(
      "factorization", [&] { return factorize_rep(m, window_num, 0); });

  std::optional<AnnihilatorResult> ann;
  std::vector<EvaluationSlot> slots;
  run_stage("evaluation", [&] {
    ann = minimal_annihilator(fac.piE, window_num);
    const std::vector<Cyclo> pts = recover_points(ann->p, candidates);
    if (!pts.empty()) {
      const SlotContext ctx = slot_operators(fac.piE, pts, window_num);
      slots = extract_slots(fac.piE, ctx);
    }
  });

  RestrictedDescriptor des{Cyclo(F), trivial_module(m->alg, true), 0, true};
  run_stage("restricted", [&] {
    const Cyclo level = central_charge(fac.piR);
    if (fac.category.evaluation_like) {
      if (!level.is_zero())
        throw Error("evaluation-like carrier with nonzero central scalar " +
                    level.str());
      des.level = level;
      return;
    }
    std::vector<Vec> sing;
    long depth = 0;
    if (fac.piR->truncated) {
      if (fac.piR->depth_num < N)
        throw Error("singular-vector extraction through degree 1 needs depth "
                    "at least 1; the carrier depth is " +
                    frac_str(fac.piR->depth_num, N));
      depth = fac.piR->depth_num;
      sing = singular_vectors(fac.piR, 0);
      if (sing.empty())
        throw Error("the restricted part has no degree-0 component");
    } else {
      // Windowed reconstruction: the depth is the top of the positive-mode
      // support and the top sits inside the joint kernel of those modes.
      const long scan_hi = fac.piR->opaque_window
                               ? fac.piR->opaque_window->second
                               : 2L * m->dim * N + 2 * N;
      for (int b = 0; b < m->alg->dim; ++b)
        for (long e = scan_hi; e >= 1; --e) {
          if (mod_pos(e - m->alg->grades[b], N) != 0) continue;
          if (e <= depth) break;
          if (!fac.piR->mode_at(b, e).is_zero()) {
            depth = std::max(depth, e);
            break;
          }
        }
      if (depth < 1)
        throw Error("the restricted part has no positive-mode support on the "
                    "window; cannot locate a top");
      std::vector<std::pair<int, long>> pos;
      for (int b = 0; b < m->alg->dim; ++b)
        for (long e = 1; e <= depth; ++e) {
          if (mod_pos(e - m->alg->grades[b], N) != 0) continue;
          pos.emplace_back(b, e);
        }
      SpMat stacked(F, static_cast<int>(pos.size()) * m->dim, m->dim);
      for (size_t p = 0; p < pos.size(); ++p) {
        const SpMat a = fac.piR->mode_at(pos[p].first, pos[p].second);
        for (int i = 0; i < a.rows(); ++i)
          for (const auto& [j, val] : a.row(i))
            stacked.set(static_cast<int>(p) * m->dim + i, j, val);
      }
      sing = kernel_basis(stacked);
      if (sing.empty())
        throw Error("the restricted part has no singular vectors on the "
                    "window");
    }
    std::vector<SpMat> raw;
    std::vector<int> g0;
    for (int b = 0; b < m->alg->dim; ++b)
      if (m->alg->grades[b] == 0) {
        g0.push_back(b);
        raw.push_back(fac.piR->mode_at(b, 0));
      }
    const auto ops = restrict_ops(F, raw, sing);
    const auto sub =
        irreducible_subspace(F, ops, static_cast<int>(sing.size()));
    const auto tops = restrict_ops(F, ops, sub);
    std::map<int, SpMat> g0map;
    for (size_t k = 0; k < g0.size(); ++k) g0map.emplace(g0[k], tops[k]);
    des.top = make_top_module(m->alg, static_cast<int>(sub.size()), g0map);
    des.level = level;
    des.depth_num = depth;
    des.trivial = false;
  });

  ClassificationResult out;
  run_stage("validation", [&] {
    std::vector<FamilyPtr> fams;
    if (!des.trivial)
      fams.push_back(build_induced(m->alg, des.level, des.top, des.depth_num));
    for (const auto& s : slots)
      fams.push_back(evaluation_family(
          make_evaluation_module(s.factor, s.point, s.root)));
    FamilyPtr model;
    if (fams.empty())
      model = rebuild_evaluation(m->alg, {}, m->dim);
    else if (fams.size() == 1)
      model = fams[0];
    else
      model = tensor_module(fams, std::max<int>(m->dim, 4096));
    if (model->dim != m->dim)
      throw Error("rebuilt model dimension " + std::to_string(model->dim) +
                  " does not match the carrier dimension " +
                  std::to_string(m->dim));
    const long depth = des.trivial ? 0 : des.depth_num;
    const long w = depth + (static_cast<long>(slots.size()) + 1) * N;
    const auto phi = family_isomorphism(model, m, -w, w);
    if (!phi)
      throw Error("no invertible intertwiner between the rebuilt model and "
                  "the carrier");
    out.intertwiner = *phi;
  });

  if (m->provenance == "tensor" || m->provenance == "evaluation") {
    for (const FamilyPtr& l : tensor_leaves(m)) {
      if (l->provenance != "evaluation" || !l->eval_payload) continue;
      if (!is_nontrivial(l->eval_payload->base)) continue;
      for (size_t j = 0; j < slots.size(); ++j)
        if (slots[j].point == l->eval_payload->point) {
          out.permutation.push_back(static_cast<int>(j));
          break;
        }
    }
  }
  out.restricted = des;
  out.evaluation = slots;
  std::ostringstream ev;
  ev << "annihilator " << ann->p.str() << "; " << slots.size()
     << " evaluation slots; level " << des.level.str()
     << "; model rebuilt and matched by an invertible intertwiner";
  out.evidence = ev.str();
  return out;
}

}  // namespace affmod
