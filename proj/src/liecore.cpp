#include "affmod/liecore.hpp"

#include <algorithm>
#include <sstream>

namespace affmod {

namespace {

long mod_pos(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

SpMat flatten_columns(const CycloField* F, const std::vector<SpMat>& mats) {
  if (mats.empty()) return SpMat(F, 0, 0);
  const int n = mats[0].rows();
  SpMat out(F, n * n, static_cast<int>(mats.size()));
  for (size_t c = 0; c < mats.size(); ++c)
    for (int i = 0; i < n; ++i)
      for (const auto& [j, v] : mats[c].row(i))
        out.set(i * n + j, static_cast<int>(c), v);
  return out;
}

Vec flatten_vec(const CycloField* F, const SpMat& m) {
  Vec out(m.rows() * m.cols(), Cyclo(F));
  for (int i = 0; i < m.rows(); ++i)
    for (const auto& [j, v] : m.row(i)) out[i * m.cols() + j] = v;
  return out;
}

SpMat commutator(const SpMat& a, const SpMat& b) { return a * b - b * a; }

Cyclo trace_product(const CycloField* F, const SpMat& a, const SpMat& b) {
  Cyclo acc(F);
  for (int i = 0; i < a.rows(); ++i)
    for (const auto& [j, v] : a.row(i)) acc += v * b.get(j, i);
  return acc;
}

}  // namespace

Vec GradedLieAlgebra::bracket_vec(const Vec& a, const Vec& b) const {
  if (static_cast<int>(a.size()) != dim || static_cast<int>(b.size()) != dim)
    throw Error("bracket operand has wrong length");
  Vec out = vec_zero(field, dim);
  for (int i = 0; i < dim; ++i) {
    if (a[i].is_zero()) continue;
    for (int j = 0; j < dim; ++j) {
      if (b[j].is_zero()) continue;
      const Cyclo c = a[i] * b[j];
      for (int k = 0; k < dim; ++k)
        if (!bracket[i][j][k].is_zero()) out[k] += c * bracket[i][j][k];
    }
  }
  return out;
}

Cyclo GradedLieAlgebra::form(const Vec& a, const Vec& b) const {
  Cyclo acc(field);
  for (int i = 0; i < dim; ++i) {
    if (a[i].is_zero()) continue;
    for (int j = 0; j < dim; ++j)
      if (!b[j].is_zero() && !gram[i][j].is_zero())
        acc += a[i] * b[j] * gram[i][j];
  }
  return acc;
}

std::optional<int> GradedLieAlgebra::homogeneous_grade(const Vec& v) const {
  std::optional<int> g;
  for (int i = 0; i < dim; ++i) {
    if (v[i].is_zero()) continue;
    if (!g)
      g = grades[i];
    else if (*g != grades[i])
      return std::nullopt;
  }
  return g;
}

SpMat GradedLieAlgebra::natural_matrix(const Vec& v) const {
  if (natural_rep.empty()) throw Error("algebra has no natural representation");
  SpMat out(field, natural_dim, natural_dim);
  for (int i = 0; i < dim; ++i)
    if (!v[i].is_zero()) out = out + natural_rep[i].scaled(v[i]);
  return out;
}

int GradedLieAlgebra::basis_index(const std::string& n) const {
  for (int i = 0; i < dim; ++i)
    if (basis_names[i] == n) return i;
  throw Error("unknown basis element: " + n);
}

AlgebraPtr make_graded_algebra(GradedLieAlgebra g) {
  const CycloField* F = g.field;
  const int d = g.dim;
  const int N = g.order;
  if (N < 1) throw Error("grading order must be positive");
  if (F->modulus() % N != 0)
    throw Error("field modulus must be a multiple of the grading order");
  if (static_cast<int>(g.basis_names.size()) != d ||
      static_cast<int>(g.grades.size()) != d ||
      static_cast<int>(g.bracket.size()) != d ||
      static_cast<int>(g.gram.size()) != d)
    throw Error("algebra table sizes disagree with dim");
  for (int i = 0; i < d; ++i)
    if (g.grades[i] < 0 || g.grades[i] >= N)
      throw Error("grade out of range for basis element " + g.basis_names[i]);

  auto at = [&](int a, int b) -> const Vec& {
    return g.bracket[a][b];
  };
  // Antisymmetry.
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int k = 0; k < d; ++k)
        if (at(a, b)[k] + at(b, a)[k] != Cyclo(F))
          throw Error("antisymmetry fails on (" + g.basis_names[a] + ", " +
                      g.basis_names[b] + ")");
  // Jacobi.
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        Vec s = g.bracket_vec(at(a, b), g.basis_vec(c));
        s = vec_add(s, g.bracket_vec(at(b, c), g.basis_vec(a)));
        s = vec_add(s, g.bracket_vec(at(c, a), g.basis_vec(b)));
        if (!vec_is_zero(s))
          throw Error("Jacobi fails on (" + g.basis_names[a] + ", " +
                      g.basis_names[b] + ", " + g.basis_names[c] + ")");
      }
  // Form symmetry, invariance, nondegeneracy.
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (g.gram[a][b] != g.gram[b][a]) throw Error("form is not symmetric");
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        const Cyclo lhs = g.form(at(a, b), g.basis_vec(c));
        const Cyclo rhs = g.form(g.basis_vec(a), at(b, c));
        if (lhs != rhs)
          throw Error("form invariance fails on (" + g.basis_names[a] + ", " +
                      g.basis_names[b] + ", " + g.basis_names[c] + ")");
      }
  if (rank_of(SpMat::from_dense(F, g.gram)) != d)
    throw Error("form is degenerate");
  // Grading compatibility.
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      for (int k = 0; k < d; ++k)
        if (!at(a, b)[k].is_zero() &&
            mod_pos(g.grades[a] + g.grades[b] - g.grades[k], N) != 0)
          throw Error("bracket breaks grading on (" + g.basis_names[a] + ", " +
                      g.basis_names[b] + ")");
      if (!g.gram[a][b].is_zero() &&
          mod_pos(g.grades[a] + g.grades[b], N) != 0)
        throw Error("form pairs grades " + std::to_string(g.grades[a]) +
                    " and " + std::to_string(g.grades[b]));
    }
  // Natural representation, when present, must realize the bracket.
  if (!g.natural_rep.empty()) {
    if (static_cast<int>(g.natural_rep.size()) != d)
      throw Error("natural representation table size mismatch");
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        SpMat lhs = commutator(g.natural_rep[a], g.natural_rep[b]);
        if (lhs != g.natural_matrix(at(a, b)))
          throw Error("natural representation violates the bracket on (" +
                      g.basis_names[a] + ", " + g.basis_names[b] + ")");
      }
  }
  return std::make_shared<const GradedLieAlgebra>(std::move(g));
}

AlgebraPtr builtin_algebra(const CycloField* field, const std::string& name) {
  const Cyclo one(field, 1L), mone(field, -1L);
  std::vector<std::string> names;
  std::vector<SpMat> mats;
  int n = 0;
  auto unit = [&](int i, int j) {
    SpMat m(field, n, n);
    m.set(i, j, one);
    return m;
  };
  if (name == "sl2") {
    n = 2;
    names = {"e", "h", "f"};
    SpMat h(field, 2, 2);
    h.set(0, 0, one);
    h.set(1, 1, mone);
    mats = {unit(0, 1), h, unit(1, 0)};
  } else if (name == "sl3") {
    n = 3;
    names = {"e12", "e13", "e23", "f12", "f13", "f23", "h1", "h2"};
    SpMat h1(field, 3, 3), h2(field, 3, 3);
    h1.set(0, 0, one);
    h1.set(1, 1, mone);
    h2.set(1, 1, one);
    h2.set(2, 2, mone);
    mats = {unit(0, 1), unit(0, 2), unit(1, 2),
            unit(1, 0), unit(2, 0), unit(2, 1), h1, h2};
  } else {
    throw Error("unknown built-in algebra: " + name);
  }
  const int d = static_cast<int>(mats.size());
  GradedLieAlgebra g;
  g.field = field;
  g.order = 1;
  g.dim = d;
  g.name = name;
  g.twist = "identity";
  g.basis_names = names;
  g.grades.assign(d, 0);
  g.natural_rep = mats;
  g.natural_dim = n;
  // Structure constants and trace form computed from the matrices.
  SpMat basis_cols = flatten_columns(field, mats);
  g.bracket.assign(d, std::vector<Vec>(d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      auto sol = solve_linear(basis_cols,
                              flatten_vec(field, commutator(mats[a], mats[b])));
      if (!sol) throw Error("built-in table: commutator left the span");
      g.bracket[a][b] = *sol;
    }
  g.gram.assign(d, vec_zero(field, d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      g.gram[a][b] = trace_product(field, mats[a], mats[b]);
  return make_graded_algebra(std::move(g));
}

FiniteAutomorphism builtin_automorphism(const GradedLieAlgebra& g,
                                        const std::string& name) {
  const CycloField* F = g.field;
  if (name == "identity")
    return FiniteAutomorphism{SpMat::identity(F, g.dim), 1};
  if (name == "inner" && g.name == "sl2") {
    // Conjugation by diag(1, -1): e -> -e, h -> h, f -> -f.
    SpMat m(F, g.dim, g.dim);
    m.set(g.basis_index("e"), g.basis_index("e"), Cyclo(F, -1L));
    m.set(g.basis_index("h"), g.basis_index("h"), Cyclo(F, 1L));
    m.set(g.basis_index("f"), g.basis_index("f"), Cyclo(F, -1L));
    return FiniteAutomorphism{m, 2};
  }
  if (name == "diagram" && g.name == "sl3") {
    // X -> -X^T, expressed on basis coefficients via the natural matrices.
    SpMat basis_cols = flatten_columns(F, g.natural_rep);
    SpMat m(F, g.dim, g.dim);
    for (int b = 0; b < g.dim; ++b) {
      SpMat img = g.natural_rep[b].transpose().scaled(Cyclo(F, -1L));
      auto sol = solve_linear(basis_cols, flatten_vec(F, img));
      if (!sol) throw Error("diagram automorphism left the basis span");
      for (int i = 0; i < g.dim; ++i)
        if (!(*sol)[i].is_zero()) m.set(i, b, (*sol)[i]);
    }
    return FiniteAutomorphism{m, 2};
  }
  throw Error("no built-in automorphism '" + name + "' for " + g.name);
}

AlgebraPtr eigen_decompose(const AlgebraPtr& g, const FiniteAutomorphism& sigma) {
  const CycloField* F = g->field;
  const int d = g->dim;
  const int N = sigma.order;
  if (N < 1) throw Error("automorphism order must be positive");
  if (F->modulus() % N != 0)
    throw Error("field modulus must be a multiple of the automorphism order");
  if (sigma.matrix.rows() != d || sigma.matrix.cols() != d)
    throw Error("automorphism matrix has wrong shape");
  // sigma^N = id.
  SpMat p = SpMat::identity(F, d);
  for (int i = 0; i < N; ++i) p = p * sigma.matrix;
  if (p != SpMat::identity(F, d))
    throw Error("automorphism does not have the declared order");
  // Automorphism property and form preservation on basis pairs.
  auto apply = [&](const Vec& v) { return sigma.matrix.apply(v); };
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Vec lhs = apply(g->bracket[a][b]);
      Vec rhs = g->bracket_vec(apply(g->basis_vec(a)), apply(g->basis_vec(b)));
      if (lhs != rhs)
        throw Error("not an automorphism: bracket fails on (" +
                    g->basis_names[a] + ", " + g->basis_names[b] + ")");
      if (g->form(apply(g->basis_vec(a)), apply(g->basis_vec(b))) !=
          g->gram[a][b])
        throw Error("automorphism does not preserve the form on (" +
                    g->basis_names[a] + ", " + g->basis_names[b] + ")");
    }
  const Cyclo eps = Cyclo::zeta(F, F->modulus() / N);
  std::vector<Vec> new_basis;
  std::vector<int> new_grades;
  for (int i = 0; i < N; ++i) {
    SpMat shifted = sigma.matrix - SpMat::identity(F, d).scaled(eps.pow(i));
    for (auto& v : kernel_basis(shifted)) {
      new_basis.push_back(std::move(v));
      new_grades.push_back(i);
    }
  }
  if (static_cast<int>(new_basis.size()) != d)
    throw Error("eigenspace dimensions do not sum to dim");

  SpMat pmat(F, d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r)
      if (!new_basis[c][r].is_zero()) pmat.set(r, c, new_basis[c][r]);

  GradedLieAlgebra out;
  out.field = F;
  out.order = N;
  out.dim = d;
  out.name = g->name;
  out.twist = "custom";
  out.grades = new_grades;
  out.basis_names.resize(d);
  for (int c = 0; c < d; ++c) {
    int unit_at = -1;
    bool is_unit = true;
    for (int r = 0; r < d; ++r) {
      if (new_basis[c][r].is_zero()) continue;
      if (unit_at >= 0 || new_basis[c][r] != Cyclo(F, 1L)) {
        is_unit = false;
        break;
      }
      unit_at = r;
    }
    if (is_unit && unit_at >= 0)
      out.basis_names[c] = g->basis_names[unit_at];
    else
      out.basis_names[c] =
          "g" + std::to_string(new_grades[c]) + "_" + std::to_string(c);
  }
  out.bracket.assign(d, std::vector<Vec>(d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      auto sol = solve_linear(pmat, g->bracket_vec(new_basis[a], new_basis[b]));
      if (!sol) throw Error("bracket left the eigenbasis span");
      out.bracket[a][b] = *sol;
    }
  out.gram.assign(d, vec_zero(F, d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      out.gram[a][b] = g->form(new_basis[a], new_basis[b]);
  if (!g->natural_rep.empty()) {
    out.natural_dim = g->natural_dim;
    for (int c = 0; c < d; ++c)
      out.natural_rep.push_back(g->natural_matrix(new_basis[c]));
  }
  return make_graded_algebra(std::move(out));
}

AlgebraPtr builtin_graded_algebra(const CycloField* field,
                                  const std::string& algebra,
                                  const std::string& automorphism) {
  AlgebraPtr flat = builtin_algebra(field, algebra);
  if (automorphism == "identity") return flat;
  FiniteAutomorphism sigma = builtin_automorphism(*flat, automorphism);
  AlgebraPtr graded = eigen_decompose(flat, sigma);
  GradedLieAlgebra stamped = *graded;
  stamped.twist = automorphism;
  return std::make_shared<const GradedLieAlgebra>(std::move(stamped));
}

std::vector<Vec> normalize_form(const GradedLieAlgebra& g,
                                const std::vector<Vec>& candidate) {
  if (static_cast<int>(candidate.size()) != g.dim)
    throw Error("candidate form has wrong shape");
  Cyclo lambda(g.field);
  for (int i = 0; i < g.dim && lambda.is_zero(); ++i)
    for (int j = 0; j < g.dim && lambda.is_zero(); ++j)
      if (!g.gram[i][j].is_zero() && !candidate[i][j].is_zero())
        lambda = candidate[i][j] / g.gram[i][j];
  if (lambda.is_zero()) throw Error("candidate form is degenerate");
  for (int i = 0; i < g.dim; ++i)
    for (int j = 0; j < g.dim; ++j)
      if (candidate[i][j] != lambda * g.gram[i][j])
        throw Error("candidate form is not proportional to the invariant form");
  return g.gram;
}

AffineElement AffineElement::term(AlgebraPtr a, int basis, long n,
                                  const Cyclo& coeff) {
  AffineElement x(std::move(a));
  const long num = n * x.alg->order + x.alg->grades[basis];
  x.add_term(basis, num, coeff);
  return x;
}

AffineElement AffineElement::central_term(AlgebraPtr a, const Cyclo& coeff) {
  AffineElement x(std::move(a));
  x.central = coeff;
  return x;
}

void AffineElement::add_term(int basis, long exp_num, const Cyclo& coeff) {
  if (basis < 0 || basis >= alg->dim) throw Error("bad basis index");
  if (mod_pos(exp_num - alg->grades[basis], alg->order) != 0)
    throw Error("exponent fractional part disagrees with the grade of " +
                alg->basis_names[basis]);
  if (coeff.is_zero()) return;
  auto key = std::make_pair(exp_num, basis);
  auto it = terms.find(key);
  if (it == terms.end())
    terms.emplace(key, coeff);
  else {
    it->second += coeff;
    if (it->second.is_zero()) terms.erase(it);
  }
}

bool AffineElement::is_zero() const { return terms.empty() && central.is_zero(); }

AffineElement AffineElement::operator+(const AffineElement& o) const {
  if (alg != o.alg) throw Error("mixed algebras in affine sum");
  AffineElement out = *this;
  for (const auto& [k, c] : o.terms) out.add_term(k.second, k.first, c);
  out.central += o.central;
  return out;
}

AffineElement AffineElement::scaled(const Cyclo& c) const {
  AffineElement out(alg);
  if (c.is_zero()) return out;
  for (const auto& [k, v] : terms) out.terms.emplace(k, v * c);
  out.central = central * c;
  return out;
}

bool AffineElement::operator==(const AffineElement& o) const {
  return alg == o.alg && terms == o.terms && central == o.central;
}

std::string AffineElement::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, c] : terms) {
    if (!first) os << " + ";
    first = false;
    os << "(" << c.str() << ")*" << alg->basis_names[k.second] << "(t^"
       << FracExp(k.first, alg->order).str() << ")";
  }
  if (!central.is_zero()) {
    if (!first) os << " + ";
    os << "(" << central.str() << ")*k";
  }
  return os.str();
}

AffineElement affine_bracket(const AffineElement& x, const AffineElement& y) {
  if (x.alg != y.alg) throw Error("mixed algebras in affine bracket");
  const auto& g = *x.alg;
  const CycloField* F = g.field;
  AffineElement out(x.alg);
  for (const auto& [ka, ca] : x.terms) {
    for (const auto& [kb, cb] : y.terms) {
      const long u = ka.first, v = kb.first;
      const int a = ka.second, b = kb.second;
      const Cyclo c = ca * cb;
      const Vec& w = g.bracket[a][b];
      for (int k = 0; k < g.dim; ++k)
        if (!w[k].is_zero()) out.add_term(k, u + v, c * w[k]);
      if (u + v == 0 && !g.gram[a][b].is_zero())
        out.central += c * Cyclo(F, Rational(u, g.order)) * g.gram[a][b];
    }
  }
  return out;
}

std::optional<int> ad_nilpotency_index(const GradedLieAlgebra& g, const Vec& v) {
  SpMat ad(g.field, g.dim, g.dim);
  for (int j = 0; j < g.dim; ++j) {
    Vec col = g.bracket_vec(v, g.basis_vec(j));
    for (int i = 0; i < g.dim; ++i)
      if (!col[i].is_zero()) ad.set(i, j, col[i]);
  }
  SpMat p = ad;
  for (int e = 1; e <= g.dim; ++e) {
    if (p.is_zero()) return e;
    p = p * ad;
  }
  return std::nullopt;
}

namespace {

// Candidates described by natural-representation matrices, converted to
// coefficients over the graded basis.
std::vector<std::pair<std::string, SpMat>> table_candidates(
    const GradedLieAlgebra& g) {
  const CycloField* F = g.field;
  const Cyclo one(F, 1L), mone(F, -1L);
  auto unit3 = [&](int i, int j) {
    SpMat m(F, 3, 3);
    m.set(i, j, one);
    return m;
  };
  std::vector<std::pair<std::string, SpMat>> out;
  if (g.name == "sl2" && g.twist == "identity") {
    SpMat e(F, 2, 2), f(F, 2, 2), mix(F, 2, 2);
    e.set(0, 1, one);
    f.set(1, 0, one);
    mix.set(0, 0, one);
    mix.set(0, 1, one);
    mix.set(1, 0, mone);
    mix.set(1, 1, mone);
    out = {{"e", e}, {"f", f}, {"h+e-f", mix}};
    return out;
  }
  if (g.name == "sl2" && g.twist == "inner") {
    SpMat e(F, 2, 2), f(F, 2, 2);
    e.set(0, 1, one);
    f.set(1, 0, one);
    out = {{"e", e}, {"f", f}};
    return out;
  }
  if (g.name == "sl3" && g.twist == "identity") {
    out = {{"e12", unit3(0, 1)}, {"e13", unit3(0, 2)}, {"e23", unit3(1, 2)},
           {"f12", unit3(1, 0)}, {"f13", unit3(2, 0)}, {"f23", unit3(2, 1)}};
    SpMat m1 = unit3(0, 0) - unit3(1, 1) + unit3(0, 1) - unit3(1, 0);
    SpMat m2 = unit3(1, 1) - unit3(2, 2) + unit3(1, 2) - unit3(2, 1);
    out.push_back({"h1+e12-f12", m1});
    out.push_back({"h2+e23-f23", m2});
    return out;
  }
  if (g.name == "sl3" && g.twist == "diagram") {
    if (F->modulus() % 4 != 0)
      throw Error("sl3 diagram table needs zeta_4: use a field modulus "
                  "divisible by 4");
    const Cyclo i4 = Cyclo::zeta(F, F->modulus() / 4);
    auto A = [&](int i, int j) { return unit3(i, j) - unit3(j, i); };
    // Isotropic antisymmetric combinations.
    out.push_back({"A12+i*A13", A(0, 1) + A(0, 2).scaled(i4)});
    out.push_back({"A12-i*A13", A(0, 1) - A(0, 2).scaled(i4)});
    out.push_back({"A13+i*A23", A(0, 2) + A(1, 2).scaled(i4)});
    // Rank-one symmetric matrices v v^T for isotropic v.
    auto vvT = [&](std::vector<Cyclo> v) {
      SpMat m(F, 3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          Cyclo c = v[i] * v[j];
          if (!c.is_zero()) m.set(i, j, c);
        }
      return m;
    };
    const Cyclo z0(F), o(F, 1L);
    out.push_back({"s1", vvT({o, i4, z0})});
    out.push_back({"s2", vvT({o, -i4, z0})});
    out.push_back({"s3", vvT({z0, o, i4})});
    out.push_back({"s4", vvT({z0, o, -i4})});
    out.push_back({"s5", vvT({o, z0, i4})});
    return out;
  }
  throw Error("no nilpotent table for " + g.name + "/" + g.twist +
              "; supply candidates");
}

}  // namespace

NilpotentSet nilpotent_spanning_set(const AlgebraPtr& g,
                                    const std::vector<Vec>& custom_candidates) {
  const CycloField* F = g->field;
  NilpotentSet out;
  std::vector<std::pair<std::string, Vec>> cands;
  if (!custom_candidates.empty()) {
    int idx = 0;
    for (const auto& v : custom_candidates)
      cands.push_back({"candidate" + std::to_string(idx++), v});
  } else {
    SpMat basis_cols = flatten_columns(F, g->natural_rep);
    for (auto& [label, mat] : table_candidates(*g)) {
      auto sol = solve_linear(basis_cols, flatten_vec(F, mat));
      if (!sol) throw Error("table element outside the algebra: " + label);
      cands.push_back({label, *sol});
    }
  }

  for (const auto& [label, v] : cands) {
    auto grade = g->homogeneous_grade(v);
    if (!grade)
      throw Error("candidate not homogeneous: " + label);
    if (!vec_is_zero(g->bracket_vec(v, v)))
      throw Error("candidate does not commute with itself: " + label);
    if (!g->form(v, v).is_zero())
      throw Error("candidate not isotropic: " + label);
    if (!ad_nilpotency_index(*g, v))
      throw Error("candidate not ad-nilpotent: " + label);
    if (!g->natural_rep.empty()) {
      SpMat m = g->natural_matrix(v);
      SpMat p = m;
      for (int e = 1; e < g->natural_dim; ++e) p = p * m;
      if (!p.is_zero())
        throw Error("candidate not nilpotent in the natural representation: " +
                    label);
    }
    // All modes of v commute: sample the affine bracket on exponent pairs
    // (u, -u) on v's lattice.
    AffineElement base(g);
    for (long n = -2; n <= 2; ++n) {
      const long u = n * g->order + *grade;
      if (mod_pos(-u - *grade, g->order) != 0) continue;
      AffineElement xu(g), xv(g);
      for (int i = 0; i < g->dim; ++i) {
        if (v[i].is_zero()) continue;
        xu.add_term(i, u, v[i]);
        xv.add_term(i, -u, v[i]);
      }
      if (!affine_bracket(xu, xv).is_zero())
        throw Error("candidate modes do not commute: " + label);
    }
    out.elements.push_back(v);
    out.labels.push_back(label);
  }

  EchelonSpace span(F, g->dim);
  for (const auto& v : out.elements) span.insert(v);
  out.span_rank = span.dim();
  out.spans = span.is_full();
  // Lie closure of the span.
  EchelonSpace closure(F, g->dim);
  for (const auto& v : out.elements) closure.insert(v);
  bool grew = true;
  while (grew && !closure.is_full()) {
    grew = false;
    std::vector<Vec> cur = closure.basis();
    for (size_t i = 0; i < cur.size(); ++i)
      for (size_t j = i + 1; j < cur.size(); ++j)
        if (closure.insert(g->bracket_vec(cur[i], cur[j]))) grew = true;
  }
  out.generates = closure.is_full();
  return out;
}

}  // namespace affmod
