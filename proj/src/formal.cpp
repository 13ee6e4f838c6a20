#include "affmod/formal.hpp"

#include <algorithm>
#include <sstream>

namespace affmod {

namespace {

long mod_pos(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

struct Bound {
  bool finite = true;
  long v = 0;
  static Bound at(long x) { return Bound{true, x}; }
  static Bound infinite() { return Bound{false, 0}; }
};

Bound lo_eff(const LaurentPart& p) {
  return p.exact_below ? Bound::infinite() : Bound::at(p.lo);
}
Bound hi_eff(const LaurentPart& p) {
  return p.exact_above ? Bound::infinite() : Bound::at(p.hi);
}
Bound max_lo(Bound a, Bound b) {
  if (!a.finite) return b;
  if (!b.finite) return a;
  return Bound::at(std::max(a.v, b.v));
}
Bound min_hi(Bound a, Bound b) {
  if (!a.finite) return b;
  if (!b.finite) return a;
  return Bound::at(std::min(a.v, b.v));
}

}  // namespace

FormalDistribution::FormalDistribution(const CycloField* field, int den,
                                       int rows, int cols)
    : field_(field), rows_(rows), cols_(cols) {
  if (den < 1) throw Error("distribution denominator must be positive");
  if (field->modulus() % den != 0)
    throw Error("field modulus must be a multiple of the twist order");
  regular_.den = den;
  regular_.exact_below = true;
  regular_.exact_above = true;
}

FormalDistribution FormalDistribution::zero(const CycloField* field, int den,
                                            int rows, int cols) {
  return FormalDistribution(field, den, rows, cols);
}

FormalDistribution FormalDistribution::atom(const CycloField* field, int den,
                                            const Cyclo& point,
                                            const Cyclo& root, int shift,
                                            int deriv, const SpMat& coeff) {
  FormalDistribution d(field, den, coeff.rows(), coeff.cols());
  if (point.is_zero()) throw Error("delta atom requires a nonzero point");
  if (root.pow(den) != point)
    throw Error("delta atom root is not a den-th root of the point");
  if (deriv < 0) throw Error("delta atom derivative order must be >= 0");
  DeltaAtom a{point, root, static_cast<int>(mod_pos(shift, den)), deriv, coeff};
  d.atoms_.push_back(std::move(a));
  d.canonicalize_atoms();
  return d;
}

FormalDistribution FormalDistribution::regular(const CycloField* field,
                                               LaurentPart part, int rows,
                                               int cols) {
  FormalDistribution d(field, part.den, rows, cols);
  for (auto it = part.entries.begin(); it != part.entries.end();) {
    if (it->first < part.lo || it->first > part.hi)
      throw Error("regular-part entry outside its window");
    if (it->second.rows() != rows || it->second.cols() != cols)
      throw Error("regular-part entry has wrong shape");
    if (it->second.is_zero())
      it = part.entries.erase(it);
    else
      ++it;
  }
  d.regular_ = std::move(part);
  return d;
}

std::optional<SpMat> FormalDistribution::regular_coeff(long k) const {
  const bool below = k < regular_.lo;
  const bool above = k > regular_.hi;
  if (regular_.window_empty()) {
    if (regular_.exact_below && regular_.exact_above)
      return SpMat(field_, rows_, cols_);
    return std::nullopt;
  }
  if (below) {
    if (!regular_.exact_below) return std::nullopt;
    return SpMat(field_, rows_, cols_);
  }
  if (above) {
    if (!regular_.exact_above) return std::nullopt;
    return SpMat(field_, rows_, cols_);
  }
  auto it = regular_.entries.find(k);
  if (it == regular_.entries.end()) return SpMat(field_, rows_, cols_);
  return it->second;
}

std::optional<SpMat> FormalDistribution::coeff(long k) const {
  auto base = regular_coeff(k);
  if (!base) return std::nullopt;
  SpMat out = *base;
  for (const auto& a : atoms_) {
    SpMat c = atom_coeff(field_, den(), a, k);
    if (!c.is_zero()) out = out + c;
  }
  return out;
}

void FormalDistribution::canonicalize_atoms() {
  const int N = den();
  const Cyclo zetaN = Cyclo::zeta(field_, field_->modulus() / N);
  std::vector<DeltaAtom> out;
  for (auto& a : atoms_) {
    if (a.coeff.rows() != rows_ || a.coeff.cols() != cols_)
      throw Error("delta atom coefficient has wrong shape");
    if (a.coeff.is_zero()) continue;
    // Canonical root: the lexicographically least among zeta_N^j * root.
    // Swapping the root to zeta_N^j * root rescales the coefficient by
    // zeta_N^(-j*shift).
    Cyclo best = a.root;
    long best_j = 0;
    Cyclo cur = a.root;
    for (long j = 1; j < N; ++j) {
      cur *= zetaN;
      if (cur < best) {
        best = cur;
        best_j = j;
      }
    }
    DeltaAtom b = a;
    b.root = best;
    b.coeff = a.coeff.scaled(zetaN.pow(-best_j * a.shift));
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end(), [](const DeltaAtom& x, const DeltaAtom& y) {
    if (x.point != y.point) return x.point < y.point;
    if (x.shift != y.shift) return x.shift < y.shift;
    return x.deriv < y.deriv;
  });
  atoms_.clear();
  for (auto& a : out) {
    if (!atoms_.empty()) {
      DeltaAtom& last = atoms_.back();
      if (last.point == a.point && last.shift == a.shift &&
          last.deriv == a.deriv) {
        last.coeff = last.coeff + a.coeff;
        if (last.coeff.is_zero()) atoms_.pop_back();
        continue;
      }
    }
    atoms_.push_back(std::move(a));
  }
}

FormalDistribution FormalDistribution::operator+(
    const FormalDistribution& o) const {
  if (field_ != o.field_ || den() != o.den() || rows_ != o.rows_ ||
      cols_ != o.cols_)
    throw Error("distribution shape/den/field mismatch in addition");
  FormalDistribution out(field_, den(), rows_, cols_);
  const LaurentPart& A = regular_;
  const LaurentPart& B = o.regular_;
  LaurentPart R;
  R.den = A.den;
  R.exact_below = A.exact_below && B.exact_below;
  R.exact_above = A.exact_above && B.exact_above;
  Bound lo = max_lo(lo_eff(A), lo_eff(B));
  Bound hi = min_hi(hi_eff(A), hi_eff(B));
  // Storage window: determinable region clipped to where entries can live.
  long slo = lo.finite ? lo.v : std::min(A.lo, B.lo);
  long shi = hi.finite ? hi.v : std::max(A.hi, B.hi);
  if ((A.window_empty() && B.window_empty()) || slo > shi) {
    slo = 0;
    shi = -1;
  }
  R.lo = slo;
  R.hi = shi;
  auto take = [&](const std::map<long, SpMat>& src) {
    for (const auto& [k, m] : src) {
      if (k < R.lo || k > R.hi) continue;
      auto it = R.entries.find(k);
      if (it == R.entries.end())
        R.entries.emplace(k, m);
      else {
        it->second = it->second + m;
        if (it->second.is_zero()) R.entries.erase(it);
      }
    }
  };
  take(A.entries);
  take(B.entries);
  out.regular_ = std::move(R);
  out.atoms_ = atoms_;
  out.atoms_.insert(out.atoms_.end(), o.atoms_.begin(), o.atoms_.end());
  out.canonicalize_atoms();
  return out;
}

FormalDistribution FormalDistribution::scaled(const Cyclo& c) const {
  if (c.is_zero()) return zero(field_, den(), rows_, cols_);
  FormalDistribution out(field_, den(), rows_, cols_);
  out.regular_ = regular_;
  out.regular_.entries.clear();
  for (const auto& [k, m] : regular_.entries) {
    SpMat s = m.scaled(c);
    if (!s.is_zero()) out.regular_.entries.emplace(k, std::move(s));
  }
  out.atoms_ = atoms_;
  for (auto& a : out.atoms_) a.coeff = a.coeff.scaled(c);
  out.canonicalize_atoms();
  return out;
}

FormalDistribution FormalDistribution::operator-(
    const FormalDistribution& o) const {
  return *this + o.scaled(Cyclo(field_, -1L));
}

FormalDistribution FormalDistribution::shifted(long j) const {
  FormalDistribution out(field_, den(), rows_, cols_);
  out.regular_ = regular_;
  out.regular_.entries.clear();
  if (!regular_.window_empty()) {
    out.regular_.lo = regular_.lo + j;
    out.regular_.hi = regular_.hi + j;
  }
  for (const auto& [k, m] : regular_.entries)
    out.regular_.entries.emplace(k + j, m);
  const int N = den();
  for (const auto& a : atoms_) {
    if (a.deriv != 0)
      throw Error("fractional shift of a derivative delta atom is unsupported");
    // x^(j/N) * atom(z, r, i) = r^j * atom(z, r, i - j).
    DeltaAtom b = a;
    b.shift = static_cast<int>(mod_pos(a.shift - j, N));
    b.coeff = a.coeff.scaled(a.root.pow(j));
    out.atoms_.push_back(std::move(b));
  }
  out.canonicalize_atoms();
  return out;
}

FormalDistribution FormalDistribution::without_atoms() const {
  FormalDistribution out(field_, den(), rows_, cols_);
  out.regular_ = regular_;
  return out;
}

FormalDistribution FormalDistribution::atoms_only() const {
  FormalDistribution out(field_, den(), rows_, cols_);
  out.atoms_ = atoms_;
  out.canonicalize_atoms();
  return out;
}

std::string FormalDistribution::str() const {
  std::ostringstream os;
  os << "regular den=" << den();
  if (regular_.window_empty())
    os << " window=empty";
  else
    os << " window=[" << regular_.lo << "," << regular_.hi << "]";
  os << (regular_.exact_below ? " zero-below" : "")
     << (regular_.exact_above ? " zero-above" : "");
  os << " entries=" << regular_.entries.size();
  os << " atoms=" << atoms_.size();
  for (const auto& a : atoms_)
    os << " {z=" << a.point.str() << " shift=" << a.shift
       << " deriv=" << a.deriv << "}";
  return os.str();
}

SpMat atom_coeff(const CycloField* field, int den, const DeltaAtom& a, long k) {
  if (mod_pos(k + a.shift, den) != 0) return SpMat(field, a.coeff.rows(), a.coeff.cols());
  // Coefficient of x^(k/N) in (d/dx)^d [x^-1 (z/x)^(i/N) delta(z/x)]:
  //   falling(k/N + d, d) * root^(-k - d*N - N).
  const Cyclo f =
      falling_factorial(field, FracExp(k + static_cast<long>(a.deriv) * den, den),
                        a.deriv);
  const Cyclo zpow = a.root.pow(-k - static_cast<long>(a.deriv) * den - den);
  return a.coeff.scaled(f * zpow);
}

LaurentPart expand_atom(const CycloField* field, int den, const DeltaAtom& a,
                        long lo, long hi) {
  LaurentPart out;
  out.den = den;
  out.lo = lo;
  out.hi = hi;
  for (long k = lo; k <= hi; ++k) {
    SpMat c = atom_coeff(field, den, a, k);
    if (!c.is_zero()) out.entries.emplace(k, std::move(c));
  }
  return out;
}

FormalDistribution apply_polynomial(const Poly& p, const FormalDistribution& a) {
  const CycloField* F = a.field();
  const int N = a.den();
  if (p.is_zero()) return FormalDistribution::zero(F, N, a.rows(), a.cols());
  const int deg = p.degree();
  FormalDistribution out(F, N, a.rows(), a.cols());

  const LaurentPart& A = a.regular_part();
  LaurentPart R;
  R.den = N;
  R.exact_below = A.exact_below;
  R.exact_above = A.exact_above;
  if (A.window_empty()) {
    R.lo = 0;
    R.hi = -1;
  } else {
    // Coefficient at k needs A at k - j*N for all j in [0, deg]; outside the
    // window those are known only under the exact flags.
    R.lo = A.exact_below ? A.lo : A.lo + static_cast<long>(deg) * N;
    R.hi = A.exact_above ? A.hi + static_cast<long>(deg) * N : A.hi;
    for (long k = R.lo; k <= R.hi; ++k) {
      SpMat acc(F, a.rows(), a.cols());
      for (int j = 0; j <= deg; ++j) {
        if (p.coeff(j).is_zero()) continue;
        auto it = A.entries.find(k - static_cast<long>(j) * N);
        if (it != A.entries.end()) acc = acc + it->second.scaled(p.coeff(j));
      }
      if (!acc.is_zero()) R.entries.emplace(k, std::move(acc));
    }
    if (R.lo > R.hi) {
      R.lo = 0;
      R.hi = -1;
    }
  }
  out.regular_ = std::move(R);

  // Leibniz cascade on atoms.
  for (const auto& at : a.atoms()) {
    Poly ps = p;
    Cyclo sign(F, 1L);
    for (int s = 0; s <= at.deriv; ++s) {
      const Cyclo val = ps.eval(at.point);
      if (!val.is_zero()) {
        const Cyclo c =
            sign * Cyclo(F, binomial_rational(at.deriv, s)) * val;
        DeltaAtom b{at.point, at.root, at.shift, at.deriv - s,
                    at.coeff.scaled(c)};
        out.atoms_.push_back(std::move(b));
      }
      ps = ps.derivative();
      sign = -sign;
    }
  }
  out.canonicalize_atoms();
  return out;
}

SpMat residue(const FormalDistribution& a) {
  auto reg = a.regular_coeff(-a.den());
  if (!reg)
    throw Error("residue not determined by the stored window");
  SpMat out = *reg;
  for (const auto& at : a.atoms()) {
    SpMat c = atom_coeff(a.field(), a.den(), at, -a.den());
    if (!c.is_zero()) out = out + c;
  }
  return out;
}

DistCompare dist_equal(const FormalDistribution& a, const FormalDistribution& b) {
  DistCompare r;
  if (a.field() != b.field() || a.den() != b.den() || a.rows() != b.rows() ||
      a.cols() != b.cols()) {
    r.equal = false;
    r.detail = "shape/den/field mismatch";
    return r;
  }
  FormalDistribution d = a - b;
  if (d.has_atoms()) {
    const DeltaAtom& at = d.atoms().front();
    r.equal = false;
    std::ostringstream os;
    os << "atom mismatch at z=" << at.point.str() << " shift=" << at.shift
       << " deriv=" << at.deriv;
    r.detail = os.str();
    return r;
  }
  for (const auto& [k, m] : d.regular_part().entries) {
    if (m.is_zero()) continue;
    r.equal = false;
    std::ostringstream os;
    os << "coefficient mismatch at exponent " << FracExp(k, d.den()).str()
       << ": difference " << m.str();
    r.detail = os.str();
    return r;
  }
  return r;
}

std::vector<Cyclo> binomial_expand(const CycloField* field, const FracExp& e,
                                   long terms) {
  std::vector<Cyclo> out;
  out.reserve(terms);
  for (long k = 0; k < terms; ++k) out.push_back(frac_binomial(field, e, k));
  return out;
}

std::vector<Cyclo> iota_expand(const Poly& num, const Poly& den, int terms) {
  auto inv = series_inverse(den, terms);
  std::vector<Cyclo> out(terms, Cyclo(num.field()));
  for (int n = 0; n < terms; ++n) {
    Cyclo acc(num.field());
    for (int j = 0; j <= std::min(n, num.degree()); ++j)
      acc += num.coeff(j) * inv[n - j];
    out[n] = acc;
  }
  return out;
}

Poly delta_derivative_residue(const Poly& p) {
  const CycloField* F = p.field();
  // x1^-1 d/dx2 delta(x2/x1) = sum_n n x2^(n-1) x1^(-n-1); pairing with
  // p(x2) = sum_m p_m x2^m leaves the n = -m terms, each contributing
  // -m p_m x1^(m-1).
  std::vector<Cyclo> q(std::max(p.degree(), 0) + 1, Cyclo(F));
  for (int m = 1; m <= p.degree(); ++m) {
    const long n = -static_cast<long>(m);
    q[m - 1] = Cyclo(F, n) * p.coeff(m);
  }
  return p * Poly(F, std::move(q));
}

}  // namespace affmod
