#include "affmod/poly.hpp"

#include <algorithm>
#include <sstream>

namespace affmod {

Poly::Poly(const CycloField* field, std::vector<Cyclo> coeffs)
    : field_(field), coeff_(std::move(coeffs)) {
  trim();
}

void Poly::trim() {
  while (!coeff_.empty() && coeff_.back().is_zero()) coeff_.pop_back();
}

Poly Poly::constant(const CycloField* field, const Cyclo& c) {
  return Poly(field, std::vector<Cyclo>{c});
}

Poly Poly::x(const CycloField* field) {
  return Poly(field, {Cyclo(field, 0L), Cyclo(field, 1L)});
}

Poly Poly::from_roots(const CycloField* field, const std::vector<Cyclo>& roots) {
  Poly p = constant(field, Cyclo(field, 1L));
  for (const auto& z : roots) {
    p = p * Poly(field, {-z, Cyclo(field, 1L)});
  }
  return p;
}

Cyclo Poly::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(coeff_.size())) return Cyclo(field_);
  return coeff_[k];
}

Cyclo Poly::leading() const {
  if (is_zero()) throw Error("leading coefficient of zero polynomial");
  return coeff_.back();
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<Cyclo> out(std::max(coeff_.size(), o.coeff_.size()), Cyclo(field_));
  for (size_t i = 0; i < coeff_.size(); ++i) out[i] += coeff_[i];
  for (size_t i = 0; i < o.coeff_.size(); ++i) out[i] += o.coeff_[i];
  return Poly(field_, std::move(out));
}

Poly Poly::operator-(const Poly& o) const {
  std::vector<Cyclo> out(std::max(coeff_.size(), o.coeff_.size()), Cyclo(field_));
  for (size_t i = 0; i < coeff_.size(); ++i) out[i] += coeff_[i];
  for (size_t i = 0; i < o.coeff_.size(); ++i) out[i] -= o.coeff_[i];
  return Poly(field_, std::move(out));
}

Poly Poly::operator*(const Poly& o) const {
  if (is_zero() || o.is_zero()) return Poly(field_);
  std::vector<Cyclo> out(coeff_.size() + o.coeff_.size() - 1, Cyclo(field_));
  for (size_t i = 0; i < coeff_.size(); ++i) {
    if (coeff_[i].is_zero()) continue;
    for (size_t j = 0; j < o.coeff_.size(); ++j) {
      if (o.coeff_[j].is_zero()) continue;
      out[i + j] += coeff_[i] * o.coeff_[j];
    }
  }
  return Poly(field_, std::move(out));
}

Poly Poly::scaled(const Cyclo& c) const {
  std::vector<Cyclo> out = coeff_;
  for (auto& a : out) a *= c;
  return Poly(field_, std::move(out));
}

std::pair<Poly, Poly> Poly::divmod(const Poly& d) const {
  if (d.is_zero()) throw Error("polynomial division by zero");
  if (degree() < d.degree()) return {Poly(field_), *this};
  std::vector<Cyclo> rem = coeff_;
  std::vector<Cyclo> quo(coeff_.size() - d.coeff_.size() + 1, Cyclo(field_));
  const Cyclo lead_inv = d.leading().inverse();
  for (int k = static_cast<int>(quo.size()) - 1; k >= 0; --k) {
    Cyclo c = rem[k + d.degree()] * lead_inv;
    quo[k] = c;
    if (c.is_zero()) continue;
    for (int j = 0; j <= d.degree(); ++j) rem[k + j] -= c * d.coeffs()[j];
  }
  return {Poly(field_, std::move(quo)), Poly(field_, std::move(rem))};
}

Poly Poly::derivative() const {
  if (coeff_.size() <= 1) return Poly(field_);
  std::vector<Cyclo> out(coeff_.size() - 1, Cyclo(field_));
  for (size_t i = 1; i < coeff_.size(); ++i)
    out[i - 1] = Cyclo(field_, static_cast<long>(i)) * coeff_[i];
  return Poly(field_, std::move(out));
}

Cyclo Poly::eval(const Cyclo& z) const {
  Cyclo acc(field_);
  for (int i = degree(); i >= 0; --i) acc = acc * z + coeff_[i];
  return acc;
}

Poly Poly::monic() const {
  if (is_zero()) throw Error("monic form of zero polynomial");
  return scaled(leading().inverse());
}

Poly Poly::shifted_up(int k) const {
  if (k < 0) throw Error("shifted_up requires k >= 0");
  if (is_zero()) return *this;
  std::vector<Cyclo> out(coeff_.size() + k, Cyclo(field_));
  for (size_t i = 0; i < coeff_.size(); ++i) out[i + k] = coeff_[i];
  return Poly(field_, std::move(out));
}

std::string Poly::str(const std::string& var) const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int i = degree(); i >= 0; --i) {
    const Cyclo& c = coeff_[i];
    if (c.is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    std::string cs = c.str();
    const bool needs_parens = cs.find('+') != std::string::npos ||
                              cs.find('-') != std::string::npos;
    if (i == 0) {
      os << (needs_parens ? "(" + cs + ")" : cs);
    } else {
      if (cs != "1") os << (needs_parens ? "(" + cs + ")" : cs) << "*";
      os << var;
      if (i > 1) os << "^" << i;
    }
  }
  return os.str();
}

Poly gcd_monic(const Poly& a, const Poly& b) {
  Poly r0 = a, r1 = b;
  while (!r1.is_zero()) {
    Poly r2 = r0.divmod(r1).second;
    r0 = std::move(r1);
    r1 = std::move(r2);
  }
  if (r0.is_zero()) return r0;
  return r0.monic();
}

Poly squarefree_part(const Poly& p) {
  if (p.is_zero()) throw Error("square-free part of zero polynomial");
  if (p.degree() == 0) return Poly::constant(p.field(), Cyclo(p.field(), 1L));
  Poly g = gcd_monic(p, p.derivative());
  Poly q = p.divmod(g).first;
  return q.monic();
}

std::vector<Poly> lagrange_projectors(const CycloField* field,
                                      const std::vector<Cyclo>& points) {
  for (size_t i = 0; i < points.size(); ++i)
    for (size_t j = i + 1; j < points.size(); ++j)
      if (points[i] == points[j])
        throw Error("lagrange_projectors requires distinct points");
  std::vector<Poly> out;
  for (size_t k = 0; k < points.size(); ++k) {
    Poly p = Poly::constant(field, Cyclo(field, 1L));
    Cyclo denom(field, 1L);
    for (size_t j = 0; j < points.size(); ++j) {
      if (j == k) continue;
      p = p * Poly(field, {-points[j], Cyclo(field, 1L)});
      denom *= points[k] - points[j];
    }
    out.push_back(p.scaled(denom.inverse()));
  }
  return out;
}

std::vector<Cyclo> series_inverse(const Poly& p, int terms) {
  if (p.is_zero() || p.coeff(0).is_zero())
    throw Error("series_inverse requires nonzero constant term; strip powers of x first");
  const CycloField* F = p.field();
  const Cyclo c0_inv = p.coeff(0).inverse();
  std::vector<Cyclo> out;
  out.reserve(terms);
  for (int n = 0; n < terms; ++n) {
    if (n == 0) {
      out.push_back(c0_inv);
      continue;
    }
    Cyclo acc(F);
    for (int j = 1; j <= std::min(n, p.degree()); ++j)
      acc += p.coeff(j) * out[n - j];
    out.push_back(-(c0_inv * acc));
  }
  return out;
}

}  // namespace affmod
