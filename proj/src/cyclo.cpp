#include "affmod/cyclo.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace affmod {

namespace {

// Quotient of (x^M - 1) by a monic divisor, exact. Coefficients lowest first.
std::vector<Rational> divide_out(std::vector<Rational> num,
                                 const std::vector<Rational>& den) {
  const int dn = static_cast<int>(num.size()) - 1;
  const int dd = static_cast<int>(den.size()) - 1;
  std::vector<Rational> quo(dn - dd + 1, Rational(0));
  for (int k = dn - dd; k >= 0; --k) {
    Rational c = num[k + dd];
    quo[k] = c;
    if (c == 0) continue;
    for (int j = 0; j <= dd; ++j) num[k + j] -= c * den[j];
  }
  for (const auto& r : num)
    if (r != 0) throw Error("cyclotomic polynomial division left a remainder");
  return quo;
}

std::vector<Rational> cyclotomic_poly(int m,
                                      std::map<int, std::vector<Rational>>& memo) {
  auto it = memo.find(m);
  if (it != memo.end()) return it->second;
  // x^m - 1
  std::vector<Rational> cur(m + 1, Rational(0));
  cur[0] = Rational(-1);
  cur[m] = Rational(1);
  for (int d = 1; d < m; ++d) {
    if (m % d != 0) continue;
    cur = divide_out(std::move(cur), cyclotomic_poly(d, memo));
  }
  memo[m] = cur;
  return cur;
}

}  // namespace

const CycloField* CycloField::get(int modulus) {
  if (modulus < 1) throw Error("cyclotomic modulus must be >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CycloField>>* registry =
      new std::map<int, std::unique_ptr<CycloField>>();
  std::lock_guard<std::mutex> lock(mu);
  auto it = registry->find(modulus);
  if (it == registry->end()) {
    it = registry->emplace(modulus,
                           std::unique_ptr<CycloField>(new CycloField(modulus)))
             .first;
  }
  return it->second.get();
}

CycloField::CycloField(int modulus) : modulus_(modulus) {
  std::map<int, std::vector<Rational>> memo;
  min_poly_ = cyclotomic_poly(modulus, memo);
  degree_ = static_cast<int>(min_poly_.size()) - 1;
  // Rows expressing zeta^(degree+j) in the power basis. Row 0 comes straight
  // from Phi_M; the rest are obtained by multiplying the previous row by zeta
  // and reducing. Enough rows for both products of reduced values and raw
  // powers zeta^p with p < M.
  const int rows_needed =
      std::max(std::max(degree_ - 1, modulus_ - degree_), 1);
  std::vector<Rational> row(degree_);
  for (int i = 0; i < degree_; ++i) row[i] = -min_poly_[i];
  reduction_.push_back(row);
  for (int j = 1; j < rows_needed; ++j) {
    std::vector<Rational> next(degree_, Rational(0));
    Rational top = row[degree_ - 1];
    for (int i = degree_ - 1; i >= 1; --i) next[i] = row[i - 1];
    if (top != 0)
      for (int i = 0; i < degree_; ++i) next[i] += top * reduction_[0][i];
    reduction_.push_back(next);
    row = next;
  }
}

Cyclo::Cyclo(const CycloField* field, const Rational& r)
    : field_(field), coeff_(field->degree(), Rational(0)) {
  coeff_[0] = r;
  coeff_[0].canonicalize();
}

Cyclo::Cyclo(const CycloField* field, long n)
    : Cyclo(field, Rational(n)) {}

Cyclo Cyclo::zeta(const CycloField* field, long power) {
  const int m = field->modulus();
  long p = power % m;
  if (p < 0) p += m;
  std::vector<Rational> coeffs(static_cast<size_t>(p) + 1, Rational(0));
  coeffs[p] = Rational(1);
  return from_coeffs(field, std::move(coeffs));
}

Cyclo Cyclo::from_coeffs(const CycloField* field, std::vector<Rational> coeffs) {
  const int d = field->degree();
  Cyclo out(field);
  for (size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    if (static_cast<int>(i) < d) {
      out.coeff_[i] += coeffs[i];
    } else {
      const size_t j = i - d;
      if (j >= field->reduction_rows().size())
        throw Error("coefficient vector too long for one-pass reduction");
      const auto& row = field->reduction_rows()[j];
      for (int k = 0; k < d; ++k) out.coeff_[k] += coeffs[i] * row[k];
    }
  }
  for (auto& c : out.coeff_) c.canonicalize();
  return out;
}

bool Cyclo::is_zero() const {
  for (const auto& c : coeff_)
    if (c != 0) return false;
  return true;
}

bool Cyclo::is_rational() const {
  for (size_t i = 1; i < coeff_.size(); ++i)
    if (coeff_[i] != 0) return false;
  return true;
}

Rational Cyclo::rational_value() const {
  if (!is_rational()) throw Error("value is not rational: " + str());
  return coeff_[0];
}

void Cyclo::check_same_field(const Cyclo& o) const {
  if (field_ != o.field_) throw Error("mixed cyclotomic fields in arithmetic");
}

Cyclo Cyclo::operator-() const {
  Cyclo out(*this);
  for (auto& c : out.coeff_) c = -c;
  return out;
}

Cyclo Cyclo::operator+(const Cyclo& o) const {
  check_same_field(o);
  Cyclo out(*this);
  for (size_t i = 0; i < coeff_.size(); ++i) out.coeff_[i] += o.coeff_[i];
  return out;
}

Cyclo Cyclo::operator-(const Cyclo& o) const {
  check_same_field(o);
  Cyclo out(*this);
  for (size_t i = 0; i < coeff_.size(); ++i) out.coeff_[i] -= o.coeff_[i];
  return out;
}

Cyclo Cyclo::operator*(const Cyclo& o) const {
  check_same_field(o);
  const int d = field_->degree();
  std::vector<Rational> prod(2 * d - 1, Rational(0));
  for (int i = 0; i < d; ++i) {
    if (coeff_[i] == 0) continue;
    for (int j = 0; j < d; ++j) {
      if (o.coeff_[j] == 0) continue;
      prod[i + j] += coeff_[i] * o.coeff_[j];
    }
  }
  return from_coeffs(field_, std::move(prod));
}

Cyclo Cyclo::inverse() const {
  if (is_zero()) throw Error("division by zero in cyclotomic field");
  // Extended Euclid on (this, Phi_M) over Q[x]; Phi_M irreducible, so the
  // gcd is a nonzero constant.
  const int d = field_->degree();
  std::vector<Rational> r0(coeff_.begin(), coeff_.end());
  while (!r0.empty() && r0.back() == 0) r0.pop_back();
  std::vector<Rational> r1 = field_->min_poly();
  std::vector<Rational> s0{Rational(1)}, s1;  // s tracks the this-cofactor
  // Invariant: r0 = s0 * this (mod Phi), r1 = s1 * this (mod Phi).
  std::swap(r0, r1);
  std::swap(s0, s1);
  while (!(r1.size() == 1)) {
    if (r1.empty()) throw Error("inverse: unexpected zero remainder");
    // Divide r0 by r1.
    std::vector<Rational> rem = r0;
    std::vector<Rational> quo(rem.size() >= r1.size() ? rem.size() - r1.size() + 1 : 0,
                              Rational(0));
    const Rational lead = r1.back();
    for (int k = static_cast<int>(rem.size()) - static_cast<int>(r1.size());
         k >= 0; --k) {
      Rational c = rem[k + r1.size() - 1] / lead;
      quo[k] = c;
      if (c == 0) continue;
      for (size_t j = 0; j < r1.size(); ++j) rem[k + j] -= c * r1[j];
    }
    while (!rem.empty() && rem.back() == 0) rem.pop_back();
    // s2 = s0 - quo * s1
    std::vector<Rational> s2 = s0;
    if (!s1.empty() && !quo.empty()) {
      s2.resize(std::max(s2.size(), quo.size() + s1.size() - 1), Rational(0));
      for (size_t i = 0; i < quo.size(); ++i) {
        if (quo[i] == 0) continue;
        for (size_t j = 0; j < s1.size(); ++j) s2[i + j] -= quo[i] * s1[j];
      }
      while (!s2.empty() && s2.back() == 0) s2.pop_back();
    }
    r0 = std::move(r1);
    r1 = std::move(rem);
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  const Rational unit = r1[0];
  std::vector<Rational> inv(s1.size());
  for (size_t i = 0; i < s1.size(); ++i) inv[i] = s1[i] / unit;
  inv.resize(std::max<size_t>(inv.size(), 1), Rational(0));
  Cyclo out = from_coeffs(field_, std::move(inv));
  (void)d;
  return out;
}

Cyclo Cyclo::pow(long e) const {
  if (e < 0) return inverse().pow(-e);
  Cyclo acc(field_, Rational(1));
  Cyclo base = *this;
  unsigned long k = static_cast<unsigned long>(e);
  while (k) {
    if (k & 1) acc = acc * base;
    base = base * base;
    k >>= 1;
  }
  return acc;
}

bool Cyclo::operator==(const Cyclo& o) const {
  check_same_field(o);
  return coeff_ == o.coeff_;
}

bool Cyclo::operator<(const Cyclo& o) const {
  check_same_field(o);
  for (size_t i = 0; i < coeff_.size(); ++i) {
    if (coeff_[i] != o.coeff_[i]) return coeff_[i] < o.coeff_[i];
  }
  return false;
}

std::string rational_str(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

std::string Cyclo::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (size_t i = 0; i < coeff_.size(); ++i) {
    const Rational& c = coeff_[i];
    if (c == 0) continue;
    Rational a = c > 0 ? c : Rational(-c);
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? "-" : "+");
    }
    const bool unit = (a == 1);
    if (i == 0) {
      os << rational_str(a);
    } else {
      if (!unit) os << rational_str(a) << "*";
      os << "z";
      if (i > 1) os << "^" << i;
    }
  }
  return os.str();
}

}  // namespace affmod
