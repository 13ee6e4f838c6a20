#include "affmod/matrix.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace affmod {

SpMat SpMat::identity(const CycloField* field, int n) {
  SpMat m(field, n, n);
  const Cyclo one(field, 1L);
  for (int i = 0; i < n; ++i) m.data_[i].emplace_back(i, one);
  return m;
}

SpMat SpMat::from_dense(const CycloField* field, const std::vector<Vec>& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
  SpMat m(field, r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c)
      throw Error("ragged rows in from_dense");
    for (int j = 0; j < c; ++j)
      if (!rows[i][j].is_zero()) m.data_[i].emplace_back(j, rows[i][j]);
  }
  return m;
}

long SpMat::nnz() const {
  long n = 0;
  for (const auto& r : data_) n += static_cast<long>(r.size());
  return n;
}

bool SpMat::is_zero() const { return nnz() == 0; }

Cyclo SpMat::get(int i, int j) const {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
    throw Error("matrix index out of range");
  const auto& r = data_[i];
  auto it = std::lower_bound(
      r.begin(), r.end(), j,
      [](const std::pair<int, Cyclo>& e, int col) { return e.first < col; });
  if (it != r.end() && it->first == j) return it->second;
  return Cyclo(field_);
}

void SpMat::set(int i, int j, const Cyclo& v) {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
    throw Error("matrix index out of range");
  auto& r = data_[i];
  auto it = std::lower_bound(
      r.begin(), r.end(), j,
      [](const std::pair<int, Cyclo>& e, int col) { return e.first < col; });
  if (it != r.end() && it->first == j) {
    if (v.is_zero())
      r.erase(it);
    else
      it->second = v;
  } else if (!v.is_zero()) {
    r.insert(it, {j, v});
  }
}

void SpMat::check_shape_add(const SpMat& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_ || field_ != o.field_)
    throw Error("matrix shape/field mismatch");
}

SpMat SpMat::operator+(const SpMat& o) const {
  check_shape_add(o);
  SpMat out(field_, rows_, cols_);
  for (int i = 0; i < rows_; ++i) {
    const auto& a = data_[i];
    const auto& b = o.data_[i];
    auto& dst = out.data_[i];
    size_t ia = 0, ib = 0;
    while (ia < a.size() || ib < b.size()) {
      if (ib == b.size() || (ia < a.size() && a[ia].first < b[ib].first)) {
        dst.push_back(a[ia++]);
      } else if (ia == a.size() || b[ib].first < a[ia].first) {
        dst.push_back(b[ib++]);
      } else {
        Cyclo s = a[ia].second + b[ib].second;
        if (!s.is_zero()) dst.emplace_back(a[ia].first, s);
        ++ia;
        ++ib;
      }
    }
  }
  return out;
}

SpMat SpMat::operator-(const SpMat& o) const {
  return *this + o.scaled(Cyclo(field_, -1L));
}

SpMat SpMat::scaled(const Cyclo& c) const {
  SpMat out(field_, rows_, cols_);
  if (c.is_zero()) return out;
  for (int i = 0; i < rows_; ++i) {
    out.data_[i].reserve(data_[i].size());
    for (const auto& [j, v] : data_[i]) out.data_[i].emplace_back(j, v * c);
  }
  return out;
}

SpMat SpMat::operator*(const SpMat& o) const {
  if (cols_ != o.rows_ || field_ != o.field_)
    throw Error("matrix product shape/field mismatch");
  SpMat out(field_, rows_, o.cols_);
  for (int i = 0; i < rows_; ++i) {
    std::map<int, Cyclo> acc;
    for (const auto& [k, a] : data_[i]) {
      for (const auto& [j, b] : o.data_[k]) {
        auto it = acc.find(j);
        if (it == acc.end())
          acc.emplace(j, a * b);
        else
          it->second += a * b;
      }
    }
    for (auto& [j, v] : acc)
      if (!v.is_zero()) out.data_[i].emplace_back(j, std::move(v));
  }
  return out;
}

bool SpMat::operator==(const SpMat& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_ || field_ != o.field_) return false;
  return data_ == o.data_;
}

SpMat SpMat::transpose() const {
  SpMat out(field_, cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (const auto& [j, v] : data_[i]) out.data_[j].emplace_back(i, v);
  return out;
}

SpMat SpMat::kron(const SpMat& o) const {
  if (field_ != o.field_) throw Error("kron field mismatch");
  SpMat out(field_, rows_ * o.rows_, cols_ * o.cols_);
  for (int i1 = 0; i1 < rows_; ++i1) {
    for (int i2 = 0; i2 < o.rows_; ++i2) {
      auto& dst = out.data_[i1 * o.rows_ + i2];
      for (const auto& [j1, a] : data_[i1])
        for (const auto& [j2, b] : o.data_[i2])
          dst.emplace_back(j1 * o.cols_ + j2, a * b);
    }
  }
  return out;
}

Vec SpMat::apply(const Vec& v) const {
  if (static_cast<int>(v.size()) != cols_)
    throw Error("matrix-vector length mismatch");
  Vec out(rows_, Cyclo(field_));
  for (int i = 0; i < rows_; ++i)
    for (const auto& [j, a] : data_[i])
      if (!v[j].is_zero()) out[i] += a * v[j];
  return out;
}

std::vector<Vec> SpMat::dense() const {
  std::vector<Vec> out(rows_, Vec(cols_, Cyclo(field_)));
  for (int i = 0; i < rows_; ++i)
    for (const auto& [j, v] : data_[i]) out[i][j] = v;
  return out;
}

std::string SpMat::str() const {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < rows_; ++i) {
    if (i) os << "; ";
    for (int j = 0; j < cols_; ++j) {
      if (j) os << ", ";
      os << get(i, j).str();
    }
  }
  os << "]";
  return os.str();
}

Vec vec_zero(const CycloField* field, int n) { return Vec(n, Cyclo(field)); }

Vec vec_unit(const CycloField* field, int n, int i) {
  Vec v(n, Cyclo(field));
  v[i] = Cyclo(field, 1L);
  return v;
}

Vec vec_add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw Error("vector length mismatch");
  Vec out = a;
  for (size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

Vec vec_sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw Error("vector length mismatch");
  Vec out = a;
  for (size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

Vec vec_scaled(const Vec& a, const Cyclo& c) {
  Vec out = a;
  for (auto& x : out) x *= c;
  return out;
}

bool vec_is_zero(const Vec& a) {
  for (const auto& x : a)
    if (!x.is_zero()) return false;
  return true;
}

Vec vec_kron(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(x * y);
  return out;
}

std::string vec_str(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i].str();
  }
  os << ")";
  return os.str();
}

bool EchelonSpace::insert(Vec v) {
  if (static_cast<int>(v.size()) != ambient_)
    throw Error("echelon insert: wrong length");
  v = reduce(std::move(v));
  int p = -1;
  for (int j = 0; j < ambient_; ++j)
    if (!v[j].is_zero()) {
      p = j;
      break;
    }
  if (p < 0) return false;
  Cyclo inv = v[p].inverse();
  for (auto& x : v) x *= inv;
  // Back-substitute into existing rows to keep the form reduced.
  for (size_t r = 0; r < rows_.size(); ++r) {
    const Cyclo c = rows_[r][p];
    if (c.is_zero()) continue;
    for (int j = 0; j < ambient_; ++j) rows_[r][j] -= c * v[j];
  }
  // Insert keeping pivots sorted.
  size_t pos = 0;
  while (pos < pivot_.size() && pivot_[pos] < p) ++pos;
  rows_.insert(rows_.begin() + pos, std::move(v));
  pivot_.insert(pivot_.begin() + pos, p);
  return true;
}

Vec EchelonSpace::reduce(Vec v) const {
  for (size_t r = 0; r < rows_.size(); ++r) {
    const Cyclo c = v[pivot_[r]];
    if (c.is_zero()) continue;
    for (int j = 0; j < ambient_; ++j) v[j] -= c * rows_[r][j];
  }
  return v;
}

bool EchelonSpace::contains(Vec v) const { return vec_is_zero(reduce(std::move(v))); }

namespace {

// Dense Gauss-Jordan; returns pivot column per row and leaves m in RREF.
std::vector<int> rref(std::vector<Vec>& m, const CycloField* field) {
  std::vector<int> pivots;
  if (m.empty()) return pivots;
  const int rows = static_cast<int>(m.size());
  const int cols = static_cast<int>(m[0].size());
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int sel = -1;
    for (int i = r; i < rows; ++i)
      if (!m[i][c].is_zero()) {
        sel = i;
        break;
      }
    if (sel < 0) continue;
    std::swap(m[r], m[sel]);
    const Cyclo inv = m[r][c].inverse();
    for (int j = c; j < cols; ++j) m[r][j] *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      const Cyclo f = m[i][c];
      if (f.is_zero()) continue;
      for (int j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  (void)field;
  return pivots;
}

}  // namespace

std::vector<Vec> kernel_basis(const SpMat& a) {
  const CycloField* F = a.field();
  std::vector<Vec> m = a.dense();
  if (m.empty()) {
    // No constraints: kernel is all of F^cols.
    std::vector<Vec> out;
    for (int j = 0; j < a.cols(); ++j) out.push_back(vec_unit(F, a.cols(), j));
    return out;
  }
  std::vector<int> pivots = rref(m, F);
  std::vector<bool> is_pivot(a.cols(), false);
  for (int p : pivots) is_pivot[p] = true;
  std::vector<Vec> out;
  for (int j = 0; j < a.cols(); ++j) {
    if (is_pivot[j]) continue;
    Vec v = vec_zero(F, a.cols());
    v[j] = Cyclo(F, 1L);
    for (size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m[r][j];
    out.push_back(std::move(v));
  }
  return out;
}

std::optional<Vec> solve_linear(const SpMat& a, const Vec& b) {
  if (static_cast<int>(b.size()) != a.rows())
    throw Error("solve_linear: rhs length mismatch");
  const CycloField* F = a.field();
  std::vector<Vec> m = a.dense();
  for (int i = 0; i < a.rows(); ++i) m[i].push_back(b[i]);
  if (m.empty()) {
    if (vec_is_zero(b)) return vec_zero(F, a.cols());
    return std::nullopt;
  }
  std::vector<int> pivots = rref(m, F);
  // Inconsistent iff a pivot lands in the augmented column.
  for (size_t r = 0; r < pivots.size(); ++r)
    if (pivots[r] == a.cols()) return std::nullopt;
  Vec x = vec_zero(F, a.cols());
  for (size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = m[r][a.cols()];
  return x;
}

int rank_of(const SpMat& a) {
  std::vector<Vec> m = a.dense();
  if (m.empty()) return 0;
  return static_cast<int>(rref(m, a.field()).size());
}

}  // namespace affmod
