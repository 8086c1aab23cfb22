#include "cpr/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "cpr/error.hpp"
#include "cpr/random.hpp"

namespace cpr {

// ---------------------------------------------------------------------------
// SparseSignal

SparseSignal::SparseSignal(std::size_t dim, std::vector<std::size_t> support,
                           std::vector<double> values)
    : dim_(dim) {
  if (dim == 0) throw InvalidArgument("signal dimension must be >= 1");
  if (support.empty()) throw InvalidArgument("signal support must be nonempty");
  if (support.size() != values.size())
    throw DimensionMismatch("signal support and values differ in length");
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
  support_.reserve(support.size());
  values_.reserve(values.size());
  for (std::size_t idx : order) {
    if (support[idx] >= dim) throw InvalidArgument("signal support index out of range");
    if (!support_.empty() && support_.back() == support[idx])
      throw InvalidArgument("signal support has duplicate indices");
    if (values[idx] == 0.0 || !std::isfinite(values[idx]))
      throw InvalidArgument("signal values on the support must be finite and nonzero");
    support_.push_back(support[idx]);
    values_.push_back(values[idx]);
  }
}

SparseSignal SparseSignal::from_dense(std::span<const double> x) {
  std::vector<std::size_t> s;
  std::vector<double> v;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) {
      s.push_back(i);
      v.push_back(x[i]);
    }
  return SparseSignal(x.size(), std::move(s), std::move(v));
}

std::vector<double> SparseSignal::dense() const {
  std::vector<double> x(dim_, 0.0);
  for (std::size_t i = 0; i < support_.size(); ++i) x[support_[i]] = values_[i];
  return x;
}

double SparseSignal::l1_norm() const { return norm1(values_); }
double SparseSignal::l2_norm() const { return norm2(values_); }

bool SparseSignal::is_unit_norm(double tol) const { return std::abs(l2_norm() - 1.0) <= tol; }

SparseSignal SparseSignal::normalized() const {
  const double s = l2_norm();
  std::vector<double> v(values_);
  for (double& x : v) x /= s;
  return SparseSignal(dim_, support_, std::move(v));
}

SparseSignal SparseSignal::negated() const {
  std::vector<double> v(values_);
  for (double& x : v) x = -x;
  return SparseSignal(dim_, support_, std::move(v));
}

SignalKind parse_signal_kind(const std::string& s) {
  if (s == "flat") return SignalKind::kFlat;
  if (s == "gaussian" || s == "gaussian-normalized") return SignalKind::kGaussianNormalized;
  throw InvalidArgument("unknown signal kind '" + s + "' (expected flat | gaussian-normalized)");
}

std::string to_string(SignalKind kind) {
  return kind == SignalKind::kFlat ? "flat" : "gaussian-normalized";
}

SparseSignal make_signal(std::size_t n, std::size_t k, SignalKind kind, std::uint64_t seed) {
  if (k < 1 || k > n) throw InvalidArgument("signal sparsity must satisfy 1 <= k <= n");
  NormalSampler rng(seed);
  auto support = random_subset(rng, n, k);
  std::vector<double> values(k);
  if (kind == SignalKind::kFlat) {
    const double a = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& v : values) v = (rng.bits() >> 63) ? -a : a;
    return SparseSignal(n, std::move(support), std::move(values));
  }
  for (double& v : values) {
    do {
      v = rng.normal();
    } while (v == 0.0);
  }
  const double s = norm2(values);
  for (double& v : values) v /= s;
  return SparseSignal(n, std::move(support), std::move(values));
}

// ---------------------------------------------------------------------------
// SensingEnsemble

SensingEnsemble::SensingEnsemble(std::size_t n, std::size_t m, std::uint64_t seed)
    : vectors_(m, n), seed_(seed) {
  if (n == 0 || m == 0) throw InvalidArgument("ensemble requires n >= 1 and m >= 1");
  NormalSampler rng(seed);
  for (double& v : vectors_.data()) v = rng.normal();
}

SensingEnsemble::SensingEnsemble(Matrix vectors) : vectors_(std::move(vectors)) {
  if (vectors_.rows() == 0 || vectors_.cols() == 0)
    throw InvalidArgument("ensemble requires n >= 1 and m >= 1");
}

namespace {

bool cholesky_lower(std::vector<double>& a, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) {
    double d = a[j * m + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * m + k] * a[j * m + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * m + j] = ljj;
    for (std::size_t i = j + 1; i < m; ++i) {
      double s = a[i * m + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * m + k] * a[j * m + k];
      a[i * m + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) a[i * m + j] = 0.0;
  return true;
}

}  // namespace

void SensingEnsemble::factorize_gram(ExecPolicy policy) {
  const std::size_t m = size();
  const auto g = kernels::squared_gram(policy, view());
  GramFactor f;
  f.m = m;
  f.lower = g;
  if (!cholesky_lower(f.lower, m)) {
    double mean_diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean_diag += g[i * m + i];
    mean_diag /= static_cast<double>(m);
    f.ridge = 1e-10 * mean_diag;
    f.lower = g;
    for (std::size_t i = 0; i < m; ++i) f.lower[i * m + i] += f.ridge;
    if (!cholesky_lower(f.lower, m))
      throw NumericalFailure("squared Gram matrix is singular even after ridge", f.ridge);
  }
  gram_ = std::move(f);
}

const GramFactor& SensingEnsemble::gram_factor() const {
  if (!gram_) throw InvalidArgument("ensemble has no Gram factorization");
  return *gram_;
}

void GramFactor::solve_in_place(std::span<double> r) const {
  if (r.size() != m) throw DimensionMismatch("GramFactor::solve_in_place");
  // L y = r
  for (std::size_t i = 0; i < m; ++i) {
    double s = r[i];
    const double* li = lower.data() + i * m;
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * r[k];
    r[i] = s / li[i];
  }
  // L^T x = y
  for (std::size_t ii = m; ii-- > 0;) {
    double s = r[ii];
    for (std::size_t k = ii + 1; k < m; ++k) s -= lower[k * m + ii] * r[k];
    r[ii] = s / lower[ii * m + ii];
  }
}

// ---------------------------------------------------------------------------
// Operators

std::vector<double> measure_dense(const SensingEnsemble& e, std::span<const double> x) {
  if (x.size() != e.dim()) throw DimensionMismatch("measure: signal vs ensemble dim");
  std::vector<double> b(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double d = dot(e.vector(j), x);
    b[j] = d * d;
  }
  return b;
}

std::vector<double> measure(const SensingEnsemble& e, const SparseSignal& x) {
  if (x.dim() != e.dim()) throw DimensionMismatch("measure: signal vs ensemble dim");
  std::vector<double> b(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    auto z = e.vector(j);
    double d = 0.0;
    for (std::size_t i = 0; i < x.sparsity(); ++i) d += z[x.support()[i]] * x.values()[i];
    b[j] = d * d;
  }
  return b;
}

std::vector<double> apply_A(const SensingEnsemble& e, const SymMatrix& x, ExecPolicy policy) {
  std::vector<double> out(e.size());
  kernels::quadratic_forms(policy, e.view(), x, out);
  return out;
}

SymMatrix apply_A_adjoint(const SensingEnsemble& e, std::span<const double> v,
                          ExecPolicy policy) {
  if (v.size() != e.size()) throw DimensionMismatch("apply_A_adjoint: weights length");
  return kernels::weighted_outer_sum(policy, e.view(), v);
}

// ---------------------------------------------------------------------------
// Subspaces

SubspaceContext::SubspaceContext(const SparseSignal& x)
    : support_(x.support()), x_(x.dense()), mask_(x.dim(), false) {
  if (!x.is_unit_norm(1e-12)) throw InvalidArgument("SubspaceContext requires ||x||_2 = 1");
  for (std::size_t i : support_) mask_[i] = true;
}

double SubspaceContext::l1_norm() const { return norm1(x_); }

std::vector<double> SubspaceContext::sign_vector() const {
  std::vector<double> s(x_.size(), 0.0);
  for (std::size_t i : support_) s[i] = x_[i] > 0.0 ? 1.0 : -1.0;
  return s;
}

namespace {

void check_dim(const SubspaceContext& ctx, const SymMatrix& x, const char* what) {
  if (ctx.dim() != x.dim()) throw DimensionMismatch(what);
}

}  // namespace

SymMatrix project_Omega(const SubspaceContext& ctx, const SymMatrix& x) {
  check_dim(ctx, x, "project_Omega");
  SymMatrix out(x.dim());
  for (std::size_t a : ctx.support())
    for (std::size_t b : ctx.support()) out.set(a, b, x(a, b));
  return out;
}

SymMatrix project_Gamma(const SubspaceContext& ctx, const SymMatrix& x) {
  check_dim(ctx, x, "project_Gamma");
  const std::size_t n = x.dim();
  SymMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ctx.in_support(i)) continue;
    for (std::size_t j = i; j < n; ++j)
      if (!ctx.in_support(j)) out.set(i, j, x(i, j));
  }
  return out;
}

SymMatrix project_Omega_perp(const SubspaceContext& ctx, const SymMatrix& x) {
  check_dim(ctx, x, "project_Omega_perp");
  SymMatrix out(x);
  for (std::size_t a : ctx.support())
    for (std::size_t b : ctx.support()) out.set(a, b, 0.0);
  return out;
}

SymMatrix project_T(const SubspaceContext& ctx, const SymMatrix& x) {
  check_dim(ctx, x, "project_T");
  const auto u = ctx.x();
  // P_T(X) = u w^T + w u^T - (u^T X u) u u^T with w = X u, rewritten as
  // u w'^T + w' u^T with w' = w - (alpha/2) u.
  auto w = x.multiply(u);
  const double alpha = dot(u, w);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= 0.5 * alpha * u[i];
  return SymMatrix::sym_outer(u, w);
}

SymMatrix project_T_cap_Omega(const SubspaceContext& ctx, const SymMatrix& x) {
  check_dim(ctx, x, "project_T_cap_Omega");
  const auto u = ctx.x();
  const auto& g = ctx.support();
  // w = X_Omega u is supported on G.
  std::vector<double> w(x.dim(), 0.0);
  for (std::size_t a : g) {
    double s = 0.0;
    for (std::size_t b : g) s += x(a, b) * u[b];
    w[a] = s;
  }
  const double alpha = dot(u, w);
  SymMatrix out(x.dim());
  for (std::size_t a : g)
    for (std::size_t b : g) {
      if (b < a) continue;
      out.set(a, b, u[a] * w[b] + w[a] * u[b] - alpha * u[a] * u[b]);
    }
  return out;
}

SymMatrix build_X0(const SubspaceContext& ctx, double lambda) {
  const auto u = ctx.x();
  const auto sgn = ctx.sign_vector();
  const double l1 = ctx.l1_norm();
  SymMatrix out(ctx.dim());
  const auto& g = ctx.support();
  for (std::size_t a : g)
    for (std::size_t b : g) {
      if (b < a) continue;
      const double v = lambda * u[a] * u[b] + l1 * (u[a] * sgn[b] + sgn[a] * u[b]) -
                       l1 * l1 * u[a] * u[b];
      out.set(a, b, v);
    }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json ensemble_to_json(const SensingEnsemble& e) {
  return {{"n", e.dim()}, {"m", e.size()}, {"seed", e.seed()}};
}

SensingEnsemble ensemble_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::int64_t>();
    const auto m = j.at("m").get<std::int64_t>();
    if (n < 1) throw InvalidArgument("ensemble n must be >= 1");
    if (m < 1) throw InvalidArgument("ensemble m must be >= 1");
    return SensingEnsemble(static_cast<std::size_t>(n), static_cast<std::size_t>(m),
                           j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("malformed ensemble JSON: ") + ex.what());
  }
}

nlohmann::json signal_to_json(const SparseSignal& x) {
  return {{"n", x.dim()}, {"support", x.support()}, {"values", x.values()}};
}

SparseSignal signal_from_json(const nlohmann::json& j) {
  try {
    return SparseSignal(j.at("n").get<std::size_t>(),
                        j.at("support").get<std::vector<std::size_t>>(),
                        j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("malformed signal JSON: ") + ex.what());
  }
}

nlohmann::json measurements_to_json(std::span<const double> b) {
  return nlohmann::json(std::vector<double>(b.begin(), b.end()));
}

std::vector<double> measurements_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidArgument("measurements JSON must be a flat array");
  std::vector<double> b;
  b.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidArgument("measurements must be numbers");
    const double x = v.get<double>();
    if (!(x >= 0.0)) throw InvalidArgument("measurements must be nonnegative");
    b.push_back(x);
  }
  return b;
}

}  // namespace cpr
