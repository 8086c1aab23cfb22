#include "cpr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "cpr/error.hpp"

namespace cpr {

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("solver: lambda must be a nonnegative real");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("solver: rho must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0))
    throw InvalidArgument("solver: tolerances must be positive");
  if (max_iter < 1) throw InvalidArgument("solver: max_iter must be >= 1");
  if (!(over_relaxation >= 1.0 && over_relaxation <= 1.9))
    throw InvalidArgument("solver: over_relaxation must lie in [1, 1.9]");
}

double objective(const SymMatrix& x, double lambda) {
  return entrywise_l1(x) + lambda * trace(x);
}

SymMatrix affine_project(const SensingEnsemble& e, const SymMatrix& x,
                         std::span<const double> b, ExecPolicy policy) {
  if (b.size() != e.size()) throw DimensionMismatch("affine_project: measurements length");
  if (x.dim() != e.dim()) throw DimensionMismatch("affine_project: matrix dim");
  auto r = apply_A(e, x, policy);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] -= b[j];
  e.gram_factor().solve_in_place(r);
  SymMatrix out(x);
  out -= apply_A_adjoint(e, r, policy);
  return out;
}

SymMatrix prox_l1_trace(const SymMatrix& v, double lambda, double rho) {
  const double tau = 1.0 / rho;
  const double shift = lambda / rho;
  SymMatrix out = soft_threshold(v, tau);
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double d = v(i, i) - shift;
    const double m = std::abs(d) - tau;
    out.set(i, i, m > 0.0 ? std::copysign(m, d) : 0.0);
  }
  return out;
}

namespace {

// PSD projection that reuses the previous eigenbasis as a Jacobi warm start.
class PsdProjector {
 public:
  SymMatrix operator()(const SymMatrix& v) {
    Spectrum s = basis_ ? sym_eigen_warm(v, *basis_) : sym_eigen(v);
    SymMatrix out = psd_from_spectrum(s);
    basis_ = std::move(s.vectors);
    return out;
  }

 private:
  std::optional<Matrix> basis_;
};

bool log_point(int it) {
  // 1, 2, 5, 10, 20, 50, ...
  int t = it;
  while (t % 10 == 0) t /= 10;
  return t == 1 || t == 2 || t == 5;
}

double fro_diff_sq(const SymMatrix& a, const SymMatrix& b) {
  const auto x = a.entries();
  const auto y = b.entries();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

SolveResult solve_trace_l1(const SensingEnsemble& e, std::span<const double> b,
                           const SolverConfig& cfg) {
  cfg.validate();
  if (b.size() != e.size()) throw DimensionMismatch("solve_trace_l1: measurements length");
  if (!e.has_gram_factor())
    throw InvalidArgument("solve_trace_l1: ensemble needs a Gram factorization");

  const std::size_t n = e.dim();
  const double scale = std::max(1.0, norm2(b));
  const double alpha = cfg.over_relaxation;
  const double rho = cfg.rho;

  SymMatrix z(n);
  SymMatrix u1(n), u2(n), u3(n);
  PsdProjector psd;

  SolveResult res;
  res.x_hat = SymMatrix(n);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    SymMatrix x1 = prox_l1_trace(z - u1, cfg.lambda, rho);
    SymMatrix x2 = psd(z - u2);
    SymMatrix x3 = affine_project(e, z - u3, b, cfg.policy);

    const SymMatrix z_old = z;
    // Over-relaxed copies x_i <- alpha x_i + (1 - alpha) z_old.
    auto relax = [&](const SymMatrix& xi) {
      if (alpha == 1.0) return xi;
      SymMatrix r = xi * alpha;
      r.axpy(1.0 - alpha, z_old);
      return r;
    };
    const SymMatrix h1 = relax(x1), h2 = relax(x2), h3 = relax(x3);

    z = h1 + u1;
    z += h2;
    z += u2;
    z += h3;
    z += u3;
    z *= 1.0 / 3.0;
    u1 += h1;
    u1 -= z;
    u2 += h2;
    u2 -= z;
    u3 += h3;
    u3 -= z;

    const double rp =
        std::sqrt(fro_diff_sq(x1, z) + fro_diff_sq(x2, z) + fro_diff_sq(x3, z)) / scale;
    const double rd = rho * std::sqrt(3.0 * fro_diff_sq(z, z_old)) / scale;

    res.iterations = it;
    res.primal_residual = rp;
    res.dual_residual = rd;
    res.x_hat = std::move(x2);
    if (log_point(it)) res.history.push_back({it, rp, rd});

    if (rp <= cfg.tol_primal && rd <= cfg.tol_dual) {
      // The PSD copy is returned; accept only once it is also feasible.
      auto r = apply_A(e, res.x_hat, cfg.policy);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] -= b[j];
      if (norm2(r) <= cfg.tol_primal * scale) {
        res.converged = true;
        break;
      }
    }
  }
  if (res.history.empty() || res.history.back().iteration != res.iterations)
    res.history.push_back({res.iterations, res.primal_residual, res.dual_residual});
  res.objective = objective(res.x_hat, cfg.lambda);
  return res;
}

RecoveredSignal extract_signal(const SymMatrix& x_hat) {
  const Spectrum s = sym_eigen(x_hat);
  if (s.values.back() < -1e-6)
    throw InvalidArgument("extract_signal: matrix is not approximately PSD");
  const double s1 = s.values.front();
  if (!(s1 > 0.0)) throw NumericalFailure("extract_signal: degenerate solution (sigma_1 <= 0)", s1);
  const double s2 = s.values.size() > 1 ? s.values[1] : 0.0;
  RecoveredSignal out;
  out.top_eigenvalue = s1;
  out.rank_gap = s1 / std::max(s2, 1e-12);
  out.x_hat = s.vectors.column(0);  // already sign-normalized by the eigensolver
  const double r = std::sqrt(s1);
  for (double& v : out.x_hat) v *= r;
  return out;
}

SuccessCheck check_success(std::span<const double> x_hat, std::span<const double> x_true,
                           double tol) {
  if (x_hat.size() != x_true.size()) throw DimensionMismatch("check_success");
  double dm = 0.0, dp = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < x_true.size(); ++i) {
    dm += (x_hat[i] - x_true[i]) * (x_hat[i] - x_true[i]);
    dp += (x_hat[i] + x_true[i]) * (x_hat[i] + x_true[i]);
    nt += x_true[i] * x_true[i];
  }
  if (nt == 0.0) throw InvalidArgument("check_success: x_true must be nonzero");
  SuccessCheck c;
  c.rel_error = std::sqrt(std::min(dm, dp)) / std::sqrt(nt);
  c.success = c.rel_error <= tol;
  return c;
}

}  // namespace cpr
