// Serial reference kernels against their OpenMP counterparts.
//
//   ./cpr_bench --benchmark_filter=squared_gram

#include <benchmark/benchmark.h>

#include <vector>

#include "cpr/kernels.hpp"
#include "cpr/measurement.hpp"
#include "cpr/random.hpp"
#include "cpr/solver.hpp"

namespace {

using cpr::ExecPolicy;

cpr::SymMatrix random_matrix(std::size_t n) {
  cpr::NormalSampler rng(7);
  std::vector<double> a(n * n);
  rng.fill_normal(a);
  return cpr::SymMatrix::from_dense(n, std::move(a));
}

template <ExecPolicy P>
void quadratic_forms(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), m = static_cast<std::size_t>(st.range(1));
  cpr::SensingEnsemble e(n, m, 1);
  const cpr::SymMatrix x = random_matrix(n);
  std::vector<double> out(m);
  for (auto _ : st) {
    cpr::kernels::quadratic_forms(P, e.view(), x, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * m));
}

template <ExecPolicy P>
void weighted_outer_sum(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), m = static_cast<std::size_t>(st.range(1));
  cpr::SensingEnsemble e(n, m, 2);
  std::vector<double> w(m, 0.5);
  for (auto _ : st) {
    auto y = cpr::kernels::weighted_outer_sum(P, e.view(), w);
    benchmark::DoNotOptimize(y);
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * m));
}

template <ExecPolicy P>
void squared_gram(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), m = static_cast<std::size_t>(st.range(1));
  cpr::SensingEnsemble e(n, m, 3);
  for (auto _ : st) {
    auto g = cpr::kernels::squared_gram(P, e.view());
    benchmark::DoNotOptimize(g.data());
  }
}

template <ExecPolicy P>
void affine_project(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), m = static_cast<std::size_t>(st.range(1));
  cpr::SensingEnsemble e(n, m, 4);
  e.factorize_gram(P);
  const cpr::SymMatrix x = random_matrix(n);
  std::vector<double> b(m, 1.0);
  for (auto _ : st) {
    auto p = cpr::affine_project(e, x, b, P);
    benchmark::DoNotOptimize(p);
  }
}

void sizes(benchmark::internal::Benchmark* b) {
  b->Args({64, 150})->Args({128, 400})->Args({64, 660})->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(quadratic_forms<ExecPolicy::kSerial>)->Apply(sizes);
BENCHMARK(quadratic_forms<ExecPolicy::kParallel>)->Apply(sizes);
BENCHMARK(weighted_outer_sum<ExecPolicy::kSerial>)->Apply(sizes);
BENCHMARK(weighted_outer_sum<ExecPolicy::kParallel>)->Apply(sizes);
BENCHMARK(squared_gram<ExecPolicy::kSerial>)->Apply(sizes);
BENCHMARK(squared_gram<ExecPolicy::kParallel>)->Apply(sizes);
BENCHMARK(affine_project<ExecPolicy::kSerial>)->Apply(sizes);
BENCHMARK(affine_project<ExecPolicy::kParallel>)->Apply(sizes);

BENCHMARK_MAIN();
