#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cpr/linalg.hpp"
#include "cpr/random.hpp"

namespace cpr::test {

inline SymMatrix random_sym(NormalSampler& rng, std::size_t n) {
  std::vector<double> a(n * n);
  rng.fill_normal(a);
  return SymMatrix::from_dense(n, std::move(a));
}

inline std::vector<double> random_vec(NormalSampler& rng, std::size_t n) {
  std::vector<double> v(n);
  rng.fill_normal(v);
  return v;
}

inline double max_abs_diff(const SymMatrix& a, const SymMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    double t = a.entries()[i] - b.entries()[i];
    d = t < 0 ? (-t > d ? -t : d) : (t > d ? t : d);
  }
  return d;
}

inline double fro_diff(const SymMatrix& a, const SymMatrix& b) {
  return frobenius_norm(a - b);
}

}  // namespace cpr::test
