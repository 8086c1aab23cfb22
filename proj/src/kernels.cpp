#include "cpr/kernels.hpp"

#include <omp.h>

#include "cpr/error.hpp"

namespace cpr {

namespace {

void check_forms(VectorsView z, const SymMatrix& x, std::span<double> out) {
  if (x.dim() != z.dim) throw DimensionMismatch("quadratic_forms: matrix vs vector dim");
  if (out.size() != z.count) throw DimensionMismatch("quadratic_forms: output length");
}

// z^T X z using the upper triangle: sum_i z_i (X_ii z_i + 2 sum_{j>i} X_ij z_j).
inline double quad_upper(std::span<const double> zj, const SymMatrix& x) {
  const std::size_t n = zj.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    double r = 0.0;
    for (std::size_t l = i + 1; l < n; ++l) r += xi[l] * zj[l];
    s += zj[i] * (xi[i] * zj[i] + 2.0 * r);
  }
  return s;
}

}  // namespace

namespace kernels {

namespace serial {

void quadratic_forms(VectorsView z, const SymMatrix& x, std::span<double> out) {
  check_forms(z, x, out);
  for (std::size_t j = 0; j < z.count; ++j) out[j] = quad_upper(z.row(j), x);
}

SymMatrix weighted_outer_sum(VectorsView z, std::span<const double> w) {
  if (w.size() != z.count) throw DimensionMismatch("weighted_outer_sum: weights length");
  const std::size_t n = z.dim;
  std::vector<double> a(n * n, 0.0);
  // Rank-one updates, one measurement vector at a time.
  for (std::size_t j = 0; j < z.count; ++j) {
    if (w[j] == 0.0) continue;
    auto zj = z.row(j);
    for (std::size_t i = 0; i < n; ++i) {
      const double ci = w[j] * zj[i];
      double* ai = a.data() + i * n;
      for (std::size_t l = i; l < n; ++l) ai[l] += ci * zj[l];
    }
  }
  return SymMatrix::from_upper(n, std::move(a));
}

std::vector<double> squared_gram(VectorsView z) {
  const std::size_t m = z.count;
  std::vector<double> g(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const double d = dot(z.row(i), z.row(j));
      g[i * m + j] = d * d;
      g[j * m + i] = d * d;
    }
  return g;
}

}  // namespace serial

namespace parallel {

void quadratic_forms(VectorsView z, const SymMatrix& x, std::span<double> out) {
  check_forms(z, x, out);
  const auto m = static_cast<std::ptrdiff_t>(z.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < m; ++j) out[j] = quad_upper(z.row(j), x);
}

SymMatrix weighted_outer_sum(VectorsView z, std::span<const double> w) {
  if (w.size() != z.count) throw DimensionMismatch("weighted_outer_sum: weights length");
  const std::size_t n = z.dim;
  std::vector<double> a(n * n, 0.0);
  // Each thread owns whole output rows, so no reduction is needed and the
  // result does not depend on the thread count.
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ai = a.data() + i * n;
    for (std::size_t j = 0; j < z.count; ++j) {
      if (w[j] == 0.0) continue;
      auto zj = z.row(j);
      const double ci = w[j] * zj[i];
      for (std::size_t l = i; l < n; ++l) ai[l] += ci * zj[l];
    }
  }
  return SymMatrix::from_upper(n, std::move(a));
}

std::vector<double> squared_gram(VectorsView z) {
  const std::size_t m = z.count;
  std::vector<double> g(m * m);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = i; j < m; ++j) {
      const double d = dot(z.row(i), z.row(j));
      g[i * m + j] = d * d;
      g[j * m + i] = d * d;
    }
  }
  return g;
}

}  // namespace parallel

}  // namespace kernels

int set_thread_count(int threads) {
  if (threads >= 1) omp_set_num_threads(threads);
  return omp_get_max_threads();
}

}  // namespace cpr
