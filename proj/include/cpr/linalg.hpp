#pragma once

// Dense symmetric-matrix arithmetic, eigendecomposition and the entrywise /
// spectral norms used by the solver and the certificate checks.

#include <cstddef>
#include <span>
#include <vector>

namespace cpr {

/// General dense row-major matrix. Used for eigenvector bases and for the
/// m x n array of sensing vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> column(std::size_t j) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transpose() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

/// Dense n x n real symmetric matrix. Both triangles are stored; every
/// constructor and mutator keeps entries(i, j) == entries(j, i) exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Zero matrix of order n (n >= 1).
  explicit SymMatrix(std::size_t n);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> d);
  /// x x^T
  static SymMatrix outer(std::span<const double> x);
  /// x w^T + w x^T
  static SymMatrix sym_outer(std::span<const double> x, std::span<const double> w);
  /// Symmetrizes (A + A^T) / 2 from a full row-major n x n array.
  static SymMatrix from_dense(std::size_t n, std::vector<double> entries);
  /// Mirrors the upper triangle of a full row-major array into the lower one.
  static SymMatrix from_upper(std::size_t n, std::vector<double> entries);
  /// Q diag(values) Q^T, restricted to the listed columns of Q.
  static SymMatrix from_eigenpairs(const Matrix& q, std::span<const double> values);

  std::size_t dim() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v);

  /// Row-major view of all n*n entries.
  std::span<const double> entries() const { return a_; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }

  /// Principal submatrix on the given (sorted or not) index list.
  SymMatrix principal_block(std::span<const std::size_t> idx) const;
  /// Embeds a |idx| x |idx| block into an n x n zero matrix.
  static SymMatrix embed_block(std::size_t n, std::span<const std::size_t> idx,
                               const SymMatrix& block);

  /// Elementwise map y_ij = f(x_ij). Symmetry is preserved because f is
  /// applied identically to mirrored entries.
  template <class F>
  SymMatrix map(F f) const {
    SymMatrix out(*this);
    for (double& v : out.a_) v = f(v);
    return out;
  }

  /// y = A x
  std::vector<double> multiply(std::span<const double> x) const;
  /// x^T A x
  double quadratic_form(std::span<const double> x) const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  /// this += s * o
  SymMatrix& axpy(double s, const SymMatrix& o);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  SymMatrix(std::size_t n, std::vector<double> a) : n_(n), a_(std::move(a)) {}
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
struct Spectrum {
  std::vector<double> values;
  Matrix vectors;  // column j pairs with values[j]
};

struct JacobiOptions {
  /// Stop once the off-diagonal Frobenius norm is below tol * ||X||_F.
  double tol = 1e-12;
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigendecomposition. Each eigenvector is normalized so its
/// largest-magnitude coordinate is positive. Throws NumericalFailure when the
/// sweep cap is hit.
Spectrum sym_eigen(const SymMatrix& x, const JacobiOptions& opts = {});

/// Same, started from an orthonormal basis that approximately diagonalizes x.
/// Converges in one or two sweeps when x changed little since `basis` was
/// computed.
Spectrum sym_eigen_warm(const SymMatrix& x, const Matrix& basis,
                        const JacobiOptions& opts = {});

/// Frobenius-nearest PSD matrix (negative eigenvalues clamped to zero).
SymMatrix psd_project(const SymMatrix& x);
SymMatrix psd_from_spectrum(const Spectrum& s);

/// Entrywise y = sign(x) max(|x| - tau, 0).
SymMatrix soft_threshold(const SymMatrix& x, double tau);

struct MatrixNorms {
  double fro = 0.0;
  double spectral = 0.0;
  double entrywise_l1 = 0.0;  // sum over both triangles
  double entrywise_linf = 0.0;
  double trace = 0.0;
};

MatrixNorms norms(const SymMatrix& x);

double frobenius_norm(const SymMatrix& x);
double spectral_norm(const SymMatrix& x);
double entrywise_l1(const SymMatrix& x);
double entrywise_linf(const SymMatrix& x);
double trace(const SymMatrix& x);
double min_eigenvalue(const SymMatrix& x);

/// <X, Y> = Tr(XY)
double inner(const SymMatrix& x, const SymMatrix& y);

// Small vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm1(std::span<const double> a);

/// Thin SVD of an m x t matrix by one-sided Jacobi.
/// u is m x t, singular values descending, v is t x t.
struct ThinSvd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
  /// Number of singular values above rel_tol * sigma_max.
  std::size_t rank(double rel_tol) const;
};

ThinSvd thin_svd(const Matrix& a);

/// Minimum-norm least-squares solution using singular values above
/// rel_tol * sigma_max.
std::vector<double> lstsq_min_norm(const ThinSvd& svd, std::span<const double> rhs,
                                   double rel_tol);

}  // namespace cpr
