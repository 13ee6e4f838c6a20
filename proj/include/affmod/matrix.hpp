#ifndef AFFMOD_MATRIX_HPP
#define AFFMOD_MATRIX_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affmod/cyclo.hpp"

namespace affmod {

using Vec = std::vector<Cyclo>;

/// Sparse exact matrix: per-row lists of (column, value) sorted by column,
/// zero values never stored. All arithmetic is exact over the field.
class SpMat {
 public:
  SpMat() : field_(nullptr), rows_(0), cols_(0) {}
  SpMat(const CycloField* field, int rows, int cols)
      : field_(field), rows_(rows), cols_(cols), data_(rows) {}

  static SpMat identity(const CycloField* field, int n);
  static SpMat from_dense(const CycloField* field,
                          const std::vector<Vec>& rows);

  const CycloField* field() const { return field_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long nnz() const;
  bool is_zero() const;

  const std::vector<std::pair<int, Cyclo>>& row(int i) const { return data_[i]; }
  Cyclo get(int i, int j) const;
  /// Sets entry (i, j); removes it when v is zero.
  void set(int i, int j, const Cyclo& v);
  void add_at(int i, int j, const Cyclo& v) { set(i, j, get(i, j) + v); }

  SpMat operator+(const SpMat& o) const;
  SpMat operator-(const SpMat& o) const;
  SpMat operator*(const SpMat& o) const;
  SpMat scaled(const Cyclo& c) const;
  bool operator==(const SpMat& o) const;
  bool operator!=(const SpMat& o) const { return !(*this == o); }

  SpMat transpose() const;
  /// Kronecker product (this ⊗ o), block row-major.
  SpMat kron(const SpMat& o) const;
  /// Matrix-vector product, v dense of length cols().
  Vec apply(const Vec& v) const;

  std::vector<Vec> dense() const;
  std::string str() const;

 private:
  void check_shape_add(const SpMat& o) const;

  const CycloField* field_;
  int rows_, cols_;
  std::vector<std::vector<std::pair<int, Cyclo>>> data_;
};

Vec vec_zero(const CycloField* field, int n);
Vec vec_unit(const CycloField* field, int n, int i);
Vec vec_add(const Vec& a, const Vec& b);
Vec vec_sub(const Vec& a, const Vec& b);
Vec vec_scaled(const Vec& a, const Cyclo& c);
bool vec_is_zero(const Vec& a);
/// Kronecker product of dense vectors (a ⊗ b).
Vec vec_kron(const Vec& a, const Vec& b);
std::string vec_str(const Vec& v);

/// Incrementally maintained row space in reduced echelon form. Used for
/// spans, closures, and membership tests.
class EchelonSpace {
 public:
  EchelonSpace(const CycloField* field, int ambient_dim)
      : field_(field), ambient_(ambient_dim) {}

  /// Inserts v; returns true when the dimension grew.
  bool insert(Vec v);
  bool contains(Vec v) const;
  int dim() const { return static_cast<int>(rows_.size()); }
  int ambient_dim() const { return ambient_; }
  bool is_full() const { return dim() == ambient_; }
  /// Reduced-echelon basis rows (pivot columns strictly increasing).
  const std::vector<Vec>& basis() const { return rows_; }
  /// Residual of v after reduction by the current basis.
  Vec reduce(Vec v) const;

 private:
  const CycloField* field_;
  int ambient_;
  std::vector<Vec> rows_;
  std::vector<int> pivot_;
};

/// Basis of the right null space {v : A v = 0}, deterministic order.
std::vector<Vec> kernel_basis(const SpMat& a);
/// One solution of A x = b if consistent.
std::optional<Vec> solve_linear(const SpMat& a, const Vec& b);
int rank_of(const SpMat& a);

}  // namespace affmod

#endif
