#pragma once

// Approximate dual certificate for the trace + l1 program, built by the
// golfing scheme over disjoint groups of measurement vectors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cpr/kernels.hpp"
#include "cpr/linalg.hpp"
#include "cpr/measurement.hpp"

namespace cpr {

struct TruncatedMoments {
  double beta2 = 0.0;  // E[z^2 1{|z| <= t}]
  double beta4 = 0.0;  // E[z^4 1{|z| <= t}]
  double threshold = 3.0;
};

/// Closed forms for z ~ N(0,1):
///   E[z^2 1{|z|<=t}] = erf(t/sqrt2) - 2 t phi(t)
///   E[z^4 1{|z|<=t}] = 3 erf(t/sqrt2) - 2 phi(t) (t^3 + 3t)
TruncatedMoments truncated_moments(double threshold = 3.0);

/// Number of golfing groups: floor(2 ln n) + 3.
std::size_t golfing_group_count(std::size_t n);

/// Contiguous partition of [0, m) into l blocks [begin, end); the first
/// (m mod l) blocks get one extra element. Throws Infeasible if m < l.
std::vector<std::pair<std::size_t, std::size_t>> partition_groups(std::size_t m, std::size_t l);

/// Coefficients c_j such that f = sum_j c_j z_j z_j^T, with
///   c_j = [lam1 (s1_j^2 1{|s1_j|<=3} - b2) + lam2 (s2_j^2 1{|s2_j|<=3} - b2)] / (m_i (b4 - b2))
/// and s_j = <z_j restricted to G, u>. u1, u2 are dense length-n vectors
/// supported on G and orthonormal to 1e-8; u2 may be empty when lam2 == 0.
std::vector<double> f_weights(VectorsView group, const SubspaceContext& ctx, double lam1,
                              double lam2, std::span<const double> u1,
                              std::span<const double> u2, const TruncatedMoments& tm);

SymMatrix f_operator(VectorsView group, const SubspaceContext& ctx, double lam1, double lam2,
                     std::span<const double> u1, std::span<const double> u2,
                     const TruncatedMoments& tm, ExecPolicy policy = ExecPolicy::kSerial);

struct Certificate {
  std::vector<double> weights;  // Y = sum_j weights[j] z_j z_j^T
  SymMatrix y;
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::vector<double> residual_norms;  // ||X_i||_F for i = 0..l
  double lambda = 0.0;
};

/// Runs X_i = X_{i-1} - P_{T cap Omega}(Y_i), i = 1..l, where Y_i is f applied
/// to group i with the (at most two) eigenpairs of X_{i-1}.
Certificate golfing_construct(const SensingEnsemble& e, const SubspaceContext& ctx, double lambda,
                              ExecPolicy policy = ExecPolicy::kSerial);

struct CertificateReport {
  std::size_t n = 0, k = 0, m = 0, groups = 0;
  std::size_t min_group_size = 0;
  double lambda = 0.0;
  double c = 2.0;
  double c1 = 20.0;
  bool group_size_below_c1k = false;
  double x0_fro = 0.0;
  double norm_TcapOmega_gap = 0.0;  // ||Y_{T cap Omega} - X0||_F
  double norm_Tperp_Omega = 0.0;    // ||Y_{T^perp cap Omega}||
  double norm_Omega_perp_inf = 0.0; // ||Y_{Omega^perp}||_inf
  double thresholds[3] = {0.0, 0.0, 0.0};
  bool passed[3] = {false, false, false};
  double final_residual = 0.0;      // ||X_l||_F
  double first_contraction = 0.0;   // ||X_1||_F / ||X_0||_F
  std::vector<double> residual_norms;
  std::uint64_t ensemble_seed = 0;

  bool all_passed() const { return passed[0] && passed[1] && passed[2]; }
};

/// Measures the three certificate bounds:
///   ||Y_{T cap Omega} - X0||_F <= ||X0||_F / (6 n^2)
///   ||Y_{T^perp cap Omega}||   <= ||X0||_F / 5
///   ||Y_{Omega^perp}||_inf     <= C sqrt(ln n) / sqrt(m) ||X0||_F
CertificateReport verify_certificate(const Certificate& cert, const SubspaceContext& ctx,
                                     std::size_t m, double c, double c1 = 20.0);

nlohmann::json report_to_json(const CertificateReport& r);
CertificateReport report_from_json(const nlohmann::json& j);

struct LambdaWindow {
  double lambda_min = 0.0;  // sqrt(k) ||x||_1 + 1
  double lambda_max = 0.0;  // n^2 / 4
  double c0 = 0.0;
  double log_n = 0.0;
  double m = 0.0;
  double lambda_max_for_m = 0.0;  // sqrt(m / (C0 ln n)), largest lambda with m > m_min
  bool empty = false;             // lambda_min >= lambda_max

  /// Measurement requirement C0 lambda^2 ln n.
  double m_min(double lambda) const { return c0 * lambda * lambda * log_n; }
  bool admits(double lambda) const {
    return lambda > lambda_min && lambda < lambda_max && m > m_min(lambda);
  }
};

LambdaWindow lambda_window(const SubspaceContext& ctx, std::size_t n, double m, double c0);

/// sqrt(m / (4 C0 ln n))
double balanced_lambda(double m, std::size_t n, double c0);

}  // namespace cpr
