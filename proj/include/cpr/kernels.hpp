#pragma once

// Measurement-operator kernels. Each kernel has a serial reference version
// and an OpenMP version; the two are kept numerically equivalent (to rounding)
// and are cross-checked by tests and compared by bench/.

#include <cstddef>
#include <span>
#include <vector>

#include "cpr/linalg.hpp"

namespace cpr {

/// Non-owning view of `count` contiguous row vectors of length `dim`.
struct VectorsView {
  std::span<const double> data;
  std::size_t count = 0;
  std::size_t dim = 0;

  std::span<const double> row(std::size_t j) const { return data.subspan(j * dim, dim); }
  VectorsView rows(std::size_t begin, std::size_t end) const {
    return {data.subspan(begin * dim, (end - begin) * dim), end - begin, dim};
  }
};

inline VectorsView view_of(const Matrix& m) { return {m.data(), m.rows(), m.cols()}; }

enum class ExecPolicy { kSerial, kParallel };

namespace kernels {

namespace serial {
/// out[j] = z_j^T X z_j
void quadratic_forms(VectorsView z, const SymMatrix& x, std::span<double> out);
/// sum_j w_j z_j z_j^T
SymMatrix weighted_outer_sum(VectorsView z, std::span<const double> w);
/// G_ij = <z_i, z_j>^2, row-major m x m
std::vector<double> squared_gram(VectorsView z);
}  // namespace serial

namespace parallel {
void quadratic_forms(VectorsView z, const SymMatrix& x, std::span<double> out);
SymMatrix weighted_outer_sum(VectorsView z, std::span<const double> w);
std::vector<double> squared_gram(VectorsView z);
}  // namespace parallel

inline void quadratic_forms(ExecPolicy p, VectorsView z, const SymMatrix& x,
                            std::span<double> out) {
  p == ExecPolicy::kParallel ? parallel::quadratic_forms(z, x, out)
                             : serial::quadratic_forms(z, x, out);
}

inline SymMatrix weighted_outer_sum(ExecPolicy p, VectorsView z, std::span<const double> w) {
  return p == ExecPolicy::kParallel ? parallel::weighted_outer_sum(z, w)
                                    : serial::weighted_outer_sum(z, w);
}

inline std::vector<double> squared_gram(ExecPolicy p, VectorsView z) {
  return p == ExecPolicy::kParallel ? parallel::squared_gram(z) : serial::squared_gram(z);
}

}  // namespace kernels

/// Sets the OpenMP thread count used by the parallel kernels and trial loops
/// (values < 1 leave the runtime default). Returns the effective count.
int set_thread_count(int threads);

}  // namespace cpr
