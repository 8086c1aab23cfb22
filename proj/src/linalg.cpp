#include "cpr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cpr/error.hpp"

namespace cpr {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {
  if (n == 0) throw InvalidArgument("SymMatrix dimension must be >= 1");
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
  return m;
}

SymMatrix SymMatrix::outer(std::span<const double> x) {
  const std::size_t n = x.size();
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m.a_[i * n + j] = x[i] * x[j];
  return m;
}

SymMatrix SymMatrix::sym_outer(std::span<const double> x, std::span<const double> w) {
  if (x.size() != w.size()) throw DimensionMismatch("sym_outer");
  const std::size_t n = x.size();
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, x[i] * w[j] + w[i] * x[j]);
  return m;
}

SymMatrix SymMatrix::from_dense(std::size_t n, std::vector<double> entries) {
  if (n == 0) throw InvalidArgument("SymMatrix dimension must be >= 1");
  if (entries.size() != n * n) throw DimensionMismatch("from_dense expects n*n entries");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (entries[i * n + j] + entries[j * n + i]);
      entries[i * n + j] = v;
      entries[j * n + i] = v;
    }
  return SymMatrix(n, std::move(entries));
}

SymMatrix SymMatrix::from_upper(std::size_t n, std::vector<double> entries) {
  if (n == 0) throw InvalidArgument("SymMatrix dimension must be >= 1");
  if (entries.size() != n * n) throw DimensionMismatch("from_upper expects n*n entries");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) entries[j * n + i] = entries[i * n + j];
  return SymMatrix(n, std::move(entries));
}

SymMatrix SymMatrix::from_eigenpairs(const Matrix& q, std::span<const double> values) {
  const std::size_t n = q.rows();
  if (values.size() > q.cols()) throw DimensionMismatch("from_eigenpairs");
  std::vector<double> a(n * n, 0.0);
  for (std::size_t c = 0; c < values.size(); ++c) {
    const double lam = values[c];
    if (lam == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double qi = lam * q(i, c);
      if (qi == 0.0) continue;
      double* ai = a.data() + i * n;
      for (std::size_t j = i; j < n; ++j) ai[j] += qi * q(j, c);
    }
  }
  return from_upper(n, std::move(a));
}

void SymMatrix::add(std::size_t i, std::size_t j, double v) {
  a_[i * n_ + j] += v;
  if (i != j) a_[j * n_ + i] += v;
}

SymMatrix SymMatrix::principal_block(std::span<const std::size_t> idx) const {
  const std::size_t k = idx.size();
  SymMatrix b(k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) b.a_[r * k + c] = (*this)(idx[r], idx[c]);
  return b;
}

SymMatrix SymMatrix::embed_block(std::size_t n, std::span<const std::size_t> idx,
                                 const SymMatrix& block) {
  if (block.dim() != idx.size()) throw DimensionMismatch("embed_block");
  SymMatrix m(n);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) m.a_[idx[r] * n + idx[c]] = block(r, c);
  return m;
}

std::vector<double> SymMatrix::multiply(std::span<const double> x) const {
  if (x.size() != n_) throw DimensionMismatch("SymMatrix::multiply");
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const double* ai = a_.data() + i * n_;
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

double SymMatrix::quadratic_form(std::span<const double> x) const {
  if (x.size() != n_) throw DimensionMismatch("SymMatrix::quadratic_form");
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* ai = a_.data() + i * n_;
    double r = 0.0;
    for (std::size_t j = 0; j < n_; ++j) r += ai[j] * x[j];
    s += x[i] * r;
  }
  return s;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.n_ != n_) throw DimensionMismatch("SymMatrix +=");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.n_ != n_) throw DimensionMismatch("SymMatrix -=");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : a_) v *= s;
  return *this;
}

SymMatrix& SymMatrix::axpy(double s, const SymMatrix& o) {
  if (o.n_ != n_) throw DimensionMismatch("SymMatrix axpy");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += s * o.a_[i];
  return *this;
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver

namespace {

// `a` is a full symmetric n x n array, `vt` holds the current basis as rows
// (row p is the p-th basis vector). On return a is diagonal to tolerance and
// vt rows are the eigenvectors.
Spectrum jacobi_core(std::size_t n, std::vector<double> a, std::vector<double> vt,
                     double fro, const JacobiOptions& opts) {
  const double target = opts.tol * fro;
  // Rotations on entries this small cannot move the off-diagonal norm across
  // the target, so they are skipped.
  const double skip = target / static_cast<double>(n);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(2.0 * s);
  };

  double off = off_norm();
  int sweep = 0;
  while (off > target) {
    if (sweep == opts.max_sweeps) {
      throw NumericalFailure(
          "Jacobi eigensolver did not converge in " + std::to_string(opts.max_sweeps) +
              " sweeps (off-diagonal norm " + std::to_string(off) + ")",
          off);
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) <= skip) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Rotate rows p and q (contiguous), then mirror them into the columns.
        double* rp = a.data() + p * n;
        double* rq = a.data() + q * n;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = rp[k];
          const double y = rq[k];
          rp[k] = c * x - s * y;
          rq[k] = s * x + c * y;
        }
        for (std::size_t k = 0; k < n; ++k) {
          a[k * n + p] = rp[k];
          a[k * n + q] = rq[k];
        }
        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        double* vp = vt.data() + p * n;
        double* vq = vt.data() + q * n;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
    off = off_norm();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i * n + i] > a[j * n + j];
  });

  Spectrum out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a[src * n + src];
    const double* v = vt.data() + src * n;
    std::size_t imax = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v[k]) > std::abs(v[imax])) imax = k;
    const double sign = v[imax] < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v[k];
  }
  return out;
}

}  // namespace

Spectrum sym_eigen(const SymMatrix& x, const JacobiOptions& opts) {
  const std::size_t n = x.dim();
  std::vector<double> a(x.entries().begin(), x.entries().end());
  std::vector<double> vt(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = 1.0;
  return jacobi_core(n, std::move(a), std::move(vt), frobenius_norm(x), opts);
}

Spectrum sym_eigen_warm(const SymMatrix& x, const Matrix& basis, const JacobiOptions& opts) {
  const std::size_t n = x.dim();
  if (basis.rows() != n || basis.cols() != n) throw DimensionMismatch("sym_eigen_warm basis");
  // B = Q^T X Q, computed as rows of Q^T times X, then times Q.
  const Matrix qt = basis.transpose();
  std::vector<double> tmp(n * n, 0.0);  // tmp = Q^T X (row p = q_p^T X)
  for (std::size_t p = 0; p < n; ++p) {
    double* tp = tmp.data() + p * n;
    auto qp = qt.row(p);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = qp[k];
      if (w == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < n; ++j) tp[j] += w * xk[j];
    }
  }
  std::vector<double> b(n * n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const double* tp = tmp.data() + p * n;
    for (std::size_t q = p; q < n; ++q) {
      auto qq = qt.row(q);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += tp[j] * qq[j];
      b[p * n + q] = s;
      b[q * n + p] = s;
    }
  }
  std::vector<double> vt(qt.data().begin(), qt.data().end());
  return jacobi_core(n, std::move(b), std::move(vt), frobenius_norm(x), opts);
}

SymMatrix psd_from_spectrum(const Spectrum& s) {
  std::vector<double> pos(s.values.size());
  std::transform(s.values.begin(), s.values.end(), pos.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });
  // Values are sorted descending, so the positive ones form a prefix.
  const auto r = static_cast<std::size_t>(
      std::find_if(pos.begin(), pos.end(), [](double v) { return v <= 0.0; }) - pos.begin());
  const std::size_t n = s.vectors.rows();
  if (r == 0) return SymMatrix(n);
  return SymMatrix::from_eigenpairs(s.vectors, std::span<const double>(pos.data(), r));
}

SymMatrix psd_project(const SymMatrix& x) { return psd_from_spectrum(sym_eigen(x)); }

SymMatrix soft_threshold(const SymMatrix& x, double tau) {
  if (tau < 0.0) throw InvalidArgument("soft_threshold: tau must be nonnegative");
  return x.map([tau](double v) {
    const double m = std::abs(v) - tau;
    return m > 0.0 ? std::copysign(m, v) : 0.0;
  });
}

double frobenius_norm(const SymMatrix& x) {
  double s = 0.0;
  for (double v : x.entries()) s += v * v;
  return std::sqrt(s);
}

double entrywise_l1(const SymMatrix& x) {
  double s = 0.0;
  for (double v : x.entries()) s += std::abs(v);
  return s;
}

double entrywise_linf(const SymMatrix& x) {
  double s = 0.0;
  for (double v : x.entries()) s = std::max(s, std::abs(v));
  return s;
}

double trace(const SymMatrix& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) s += x(i, i);
  return s;
}

double spectral_norm(const SymMatrix& x) {
  const auto s = sym_eigen(x);
  return std::max(std::abs(s.values.front()), std::abs(s.values.back()));
}

double min_eigenvalue(const SymMatrix& x) { return sym_eigen(x).values.back(); }

MatrixNorms norms(const SymMatrix& x) {
  return {frobenius_norm(x), spectral_norm(x), entrywise_l1(x), entrywise_linf(x), trace(x)};
}

double inner(const SymMatrix& x, const SymMatrix& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("inner");
  const auto a = x.entries();
  const auto b = y.entries();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD

std::size_t ThinSvd::rank(double rel_tol) const {
  if (sigma.empty() || sigma.front() <= 0.0) return 0;
  const double cut = rel_tol * sigma.front();
  return static_cast<std::size_t>(
      std::count_if(sigma.begin(), sigma.end(), [cut](double s) { return s > cut; }));
}

ThinSvd thin_svd(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t t = a.cols();
  // Work on columns stored contiguously.
  Matrix ut = a.transpose();  // t x m
  Matrix vt = Matrix::identity(t);
  constexpr double eps = 1e-15;
  constexpr int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < t; ++p) {
      for (std::size_t q = p + 1; q < t; ++q) {
        auto up = ut.row(p);
        auto uq = ut.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += up[i] * up[i];
          beta += uq[i] * uq[i];
          gamma += up[i] * uq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double tt = (zeta >= 0.0 ? 1.0 : -1.0) /
                          (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + tt * tt);
        const double s = c * tt;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = up[i];
          const double y = uq[i];
          up[i] = c * x - s * y;
          uq[i] = s * x + c * y;
        }
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t i = 0; i < t; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sig(t);
  for (std::size_t j = 0; j < t; ++j) sig[j] = norm2(ut.row(j));
  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sig[i] > sig[j]; });

  ThinSvd out;
  out.u = Matrix(m, t);
  out.v = Matrix(t, t);
  out.sigma.resize(t);
  for (std::size_t c = 0; c < t; ++c) {
    const std::size_t src = order[c];
    const double s = sig[src];
    out.sigma[c] = s;
    auto col = ut.row(src);
    for (std::size_t i = 0; i < m; ++i) out.u(i, c) = s > 0.0 ? col[i] / s : 0.0;
    auto vcol = vt.row(src);
    for (std::size_t i = 0; i < t; ++i) out.v(i, c) = vcol[i];
  }
  return out;
}

std::vector<double> lstsq_min_norm(const ThinSvd& svd, std::span<const double> rhs,
                                   double rel_tol) {
  if (rhs.size() != svd.u.rows()) throw DimensionMismatch("lstsq_min_norm rhs");
  const std::size_t t = svd.v.rows();
  const std::size_t r = svd.rank(rel_tol);
  std::vector<double> y(t, 0.0);
  for (std::size_t c = 0; c < r; ++c) {
    double proj = 0.0;
    for (std::size_t i = 0; i < rhs.size(); ++i) proj += svd.u(i, c) * rhs[i];
    proj /= svd.sigma[c];
    for (std::size_t i = 0; i < t; ++i) y[i] += proj * svd.v(i, c);
  }
  return y;
}

}  // namespace cpr
