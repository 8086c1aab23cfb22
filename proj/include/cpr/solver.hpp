#pragma once

// Solver for
//     minimize ||X||_1 + lambda Tr(X)  s.t.  z_j^T X z_j = b_j,  X PSD
// by consensus operator splitting over three proximable pieces, plus
// extraction of the rank-one signal from the solution.

#include <span>
#include <vector>

#include "cpr/kernels.hpp"
#include "cpr/linalg.hpp"
#include "cpr/measurement.hpp"

namespace cpr {

struct SolverConfig {
  double lambda = 1.0;           // trace weight
  double rho = 1.0;              // splitting penalty
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;
  int max_iter = 20000;
  double over_relaxation = 1.0;  // in [1, 1.9]
  ExecPolicy policy = ExecPolicy::kSerial;

  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

struct ResidualSample {
  int iteration = 0;
  double primal = 0.0;
  double dual = 0.0;
};

struct SolveResult {
  SymMatrix x_hat;  // the PSD copy of the consensus iterate
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  bool converged = false;
  /// Residuals at iterations 1, 2, 5, 10, 20, 50, ... and the final one.
  std::vector<ResidualSample> history;
};

/// ||X||_1 + lambda Tr(X)
double objective(const SymMatrix& x, double lambda);

/// Frobenius-nearest symmetric matrix with A(X) = b. Needs the Gram factor.
SymMatrix affine_project(const SensingEnsemble& e, const SymMatrix& x,
                         std::span<const double> b, ExecPolicy policy = ExecPolicy::kSerial);

/// Prox of (||.||_1 + lambda Tr) / rho: off-diagonal entries soft-thresholded
/// by 1/rho, diagonal shifted by -lambda/rho then soft-thresholded by 1/rho.
SymMatrix prox_l1_trace(const SymMatrix& v, double lambda, double rho);

/// Runs the splitting until both residuals (normalized by max(1, ||b||_2))
/// are below tolerance and the returned X is feasible to tol_primal, or until
/// max_iter. Requires e.has_gram_factor().
SolveResult solve_trace_l1(const SensingEnsemble& e, std::span<const double> b,
                           const SolverConfig& cfg);

struct RecoveredSignal {
  std::vector<double> x_hat;  // sqrt(sigma_1) u_1, largest-magnitude entry positive
  double top_eigenvalue = 0.0;
  double rank_gap = 0.0;      // sigma_1 / max(sigma_2, 1e-12)
};

/// Leading eigenpair of an (approximately) PSD solution.
RecoveredSignal extract_signal(const SymMatrix& x_hat);

struct SuccessCheck {
  bool success = false;
  double rel_error = 0.0;
};

/// err = min(||x_hat - x||, ||x_hat + x||) / ||x||; success iff err <= tol.
SuccessCheck check_success(std::span<const double> x_hat, std::span<const double> x_true,
                           double tol);

}  // namespace cpr
