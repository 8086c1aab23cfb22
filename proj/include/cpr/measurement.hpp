#pragma once

// Gaussian sensing ensembles, the quadratic measurement operator and its
// adjoint, and the subspace projections (Omega, Gamma, T) around a sparse
// rank-one target x x^T.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpr/kernels.hpp"
#include "cpr/linalg.hpp"

namespace cpr {

/// k-sparse signal stored by support and values.
class SparseSignal {
 public:
  /// Validates: support entries distinct and < dim, |support| >= 1, values nonzero.
  SparseSignal(std::size_t dim, std::vector<std::size_t> support, std::vector<double> values);

  static SparseSignal from_dense(std::span<const double> x);

  std::size_t dim() const { return dim_; }
  std::size_t sparsity() const { return support_.size(); }
  const std::vector<std::size_t>& support() const { return support_; }
  const std::vector<double>& values() const { return values_; }

  std::vector<double> dense() const;
  double l1_norm() const;
  double l2_norm() const;
  bool is_unit_norm(double tol = 1e-12) const;
  SparseSignal normalized() const;
  SparseSignal negated() const;

 private:
  std::size_t dim_;
  std::vector<std::size_t> support_;  // sorted ascending
  std::vector<double> values_;
};

enum class SignalKind {
  kFlat,                // +-1/sqrt(k) on a uniformly random support
  kGaussianNormalized,  // N(0,1) on a random support, scaled to unit norm
};

SignalKind parse_signal_kind(const std::string& s);
std::string to_string(SignalKind kind);

SparseSignal make_signal(std::size_t n, std::size_t k, SignalKind kind, std::uint64_t seed);

/// Cholesky factor (lower, row-major m x m) of the squared Gram matrix
/// G_ij = <z_i, z_j>^2, with the ridge that was needed to factor it.
struct GramFactor {
  std::size_t m = 0;
  std::vector<double> lower;
  double ridge = 0.0;

  /// Solves G y = r in place.
  void solve_in_place(std::span<double> r) const;
};

/// m i.i.d. standard normal vectors in R^n, regenerable from (n, m, seed).
class SensingEnsemble {
 public:
  SensingEnsemble(std::size_t n, std::size_t m, std::uint64_t seed);
  /// Wraps explicit vectors (rows). Seed is recorded as 0.
  explicit SensingEnsemble(Matrix vectors);

  std::size_t dim() const { return vectors_.cols(); }
  std::size_t size() const { return vectors_.rows(); }
  std::uint64_t seed() const { return seed_; }
  const Matrix& vectors() const { return vectors_; }
  VectorsView view() const { return view_of(vectors_); }
  std::span<const double> vector(std::size_t j) const { return vectors_.row(j); }

  /// Factors the squared Gram matrix. Adds ridge 1e-10 * mean(diag) if plain
  /// Cholesky fails; throws NumericalFailure if that fails too.
  void factorize_gram(ExecPolicy policy = ExecPolicy::kSerial);
  bool has_gram_factor() const { return gram_.has_value(); }
  const GramFactor& gram_factor() const;

 private:
  Matrix vectors_;
  std::uint64_t seed_ = 0;
  std::optional<GramFactor> gram_;
};

/// b_j = <z_j, x>^2
std::vector<double> measure(const SensingEnsemble& e, const SparseSignal& x);
std::vector<double> measure_dense(const SensingEnsemble& e, std::span<const double> x);

/// A(X)_j = <z_j z_j^T, X>
std::vector<double> apply_A(const SensingEnsemble& e, const SymMatrix& x,
                            ExecPolicy policy = ExecPolicy::kSerial);
/// A*(v) = sum_j v_j z_j z_j^T
SymMatrix apply_A_adjoint(const SensingEnsemble& e, std::span<const double> v,
                          ExecPolicy policy = ExecPolicy::kSerial);

/// Analysis-side view of the target: support G and unit-norm x on G.
class SubspaceContext {
 public:
  /// Requires a unit-norm signal (1e-12).
  explicit SubspaceContext(const SparseSignal& x);

  std::size_t dim() const { return x_.size(); }
  const std::vector<std::size_t>& support() const { return support_; }
  std::span<const double> x() const { return x_; }
  bool in_support(std::size_t i) const { return mask_[i]; }
  double l1_norm() const;
  /// sgn(x) as a dense vector.
  std::vector<double> sign_vector() const;

 private:
  std::vector<std::size_t> support_;
  std::vector<double> x_;
  std::vector<bool> mask_;
};

/// Keeps the G x G block.
SymMatrix project_Omega(const SubspaceContext& ctx, const SymMatrix& x);
/// Keeps entries with both indices outside G.
SymMatrix project_Gamma(const SubspaceContext& ctx, const SymMatrix& x);
/// X - P_Omega(X)
SymMatrix project_Omega_perp(const SubspaceContext& ctx, const SymMatrix& x);
/// x x^T X + X x x^T - (x^T X x) x x^T
SymMatrix project_T(const SubspaceContext& ctx, const SymMatrix& x);
/// P_T(P_Omega(X)); range is {x w^T + w x^T : supp(w) in G}.
SymMatrix project_T_cap_Omega(const SubspaceContext& ctx, const SymMatrix& x);

/// X0 = lambda x x^T + P_T(sgn(x) sgn(x)^T)
///    = lambda x x^T + ||x||_1 (x sgn^T + sgn x^T) - ||x||_1^2 x x^T
SymMatrix build_X0(const SubspaceContext& ctx, double lambda);

// JSON forms:
//   ensemble     {"n": .., "m": .., "seed": ..}
//   signal       {"n": .., "support": [...], "values": [...]}
//   measurements [b_1, ..., b_m]
nlohmann::json ensemble_to_json(const SensingEnsemble& e);
SensingEnsemble ensemble_from_json(const nlohmann::json& j);
nlohmann::json signal_to_json(const SparseSignal& x);
SparseSignal signal_from_json(const nlohmann::json& j);
nlohmann::json measurements_to_json(std::span<const double> b);
std::vector<double> measurements_from_json(const nlohmann::json& j);

}  // namespace cpr
