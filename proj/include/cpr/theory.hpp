#pragma once

// Monte Carlo checks of the concentration lemmas behind the recovery and
// converse theorems, the converse bound itself, a gap-based non-optimality
// test for x x^T, and a brute-force injectivity oracle.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpr/linalg.hpp"
#include "cpr/measurement.hpp"
#include "cpr/random.hpp"
#include "cpr/solver.hpp"

namespace cpr {

enum class LemmaId {
  kL1TraceSandwich,  // (7/8) Tr X <= m^-1 ||A(X)||_1 <= (9/8) Tr X, X PSD on G
  kLowrankLower,     // m^-1 ||A(X)||_1 >= 0.94 (7/8) ||X||, X rank 2 on G
  kL1Upper,          // m^-1 ||A(X)||_1 <= (9/8) ||X||_1
  kTruncatedMoment,  // operator-norm deviation of the truncated fourth-moment sum
  kChi2Tail,         // P(chi2(d) <= d/2) <= exp(-0.09 d)
  kE0Event,          // max_j <x, z_jG>^2 <= 10 ln n
};

std::string to_string(LemmaId id);
LemmaId parse_lemma_id(const std::string& s);

struct LemmaParams {
  std::size_t n = 0, k = 0, m = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;  // truncated-moment tolerance
  std::size_t df = 0;    // chi-square degrees of freedom N - m1
};

/// `worst_ratio` is the per-trial ratio statistic of the most extreme trial
/// (for two-sided checks, the one farthest from 1). min_stat / max_stat are
/// the extremes of the same statistic. For the chi-square check the trial
/// unit is one sample and worst_ratio is empirical frequency / bound.
struct LemmaCheckResult {
  LemmaId lemma_id = LemmaId::kL1TraceSandwich;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  double min_stat = 0.0;
  double max_stat = 0.0;
  LemmaParams params;
  std::map<std::string, double> extras;

  double violation_fraction() const {
    return trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(trials);
  }
};

/// Random PSD matrix supported on G: G-block A A^T / Tr(A A^T), A k x r
/// Gaussian with r uniform in {1..k}.
SymMatrix random_psd_on_support(NormalSampler& rng, std::size_t n,
                                std::span<const std::size_t> support);
/// a u1 u1^T - b u2 u2^T on G with orthonormal Gaussian-derived u1, u2 and
/// a, b uniform in (0.1, 1]. Requires |G| >= 2.
SymMatrix random_rank2_on_support(NormalSampler& rng, std::size_t n,
                                  std::span<const std::size_t> support);

LemmaCheckResult check_l1_trace_sandwich(std::size_t n, std::size_t k, std::size_t m,
                                         std::size_t trials, std::uint64_t seed);
LemmaCheckResult check_lowrank_lower(std::size_t n, std::size_t k, std::size_t m,
                                     std::size_t trials, std::uint64_t seed);
LemmaCheckResult check_l1_upper(std::size_t n, std::size_t m, std::size_t trials,
                                std::uint64_t seed);
/// u is uniform on the sphere per trial unless `fixed_u` is given.
LemmaCheckResult check_truncated_moment(std::size_t n, std::size_t m, std::size_t trials,
                                        std::uint64_t seed, double epsilon,
                                        std::optional<std::vector<double>> fixed_u = {});
/// `trials` chi2(N - m1) samples, each a sum of N - m1 squared normals.
/// Violations count samples at or below (N - m1)/2. extras also carry the
/// upper-tail frequency, the bound, its binomial standard error and the
/// sample mean.
LemmaCheckResult check_chi2_tail(std::size_t N, std::size_t m1, std::size_t trials,
                                 std::uint64_t seed);
/// Each trial draws m Gaussian vectors on G and a random unit x on G; a
/// violation is a trial where E0 fails. extras carry the chi2(1) moments of
/// <x, z_jG>^2 and the bound 1 - m / n^5.
LemmaCheckResult check_E0_event(std::size_t n, std::size_t k, std::size_t m, std::size_t trials,
                                std::uint64_t seed);

nlohmann::json lemma_to_json(const LemmaCheckResult& r);

constexpr int kLemmaCsvSchemaVersion = 1;
std::string lemma_csv_header();
/// The timestamp column is the only field that varies between identical runs.
std::string lemma_csv_row(const LemmaCheckResult& r, const std::string& timestamp);

struct ConverseBound {
  double term_spectral = 0.0;  // (k/4 - 1)^2
  double term_l1 = 0.0;        // max(||x||_1^2 - k/2, 0)^2 / (500 ln^2 n)
  double m_lower = 0.0;
};

ConverseBound converse_bound(const SparseSignal& x, std::size_t n);
nlohmann::json converse_to_json(const ConverseBound& b);

struct NonOptimalityEntry {
  double lambda = 0.0;
  double objective_xx = 0.0;   // objective of x x^T
  double objective_hat = 0.0;  // objective of the solver output
  double gap = 0.0;            // objective_xx - objective_hat
  bool non_optimal = false;    // gap > 1e-5 objective_xx
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double rel_error = 0.0;      // recovery error of the extracted signal
};

struct NonOptimalityReport {
  std::vector<NonOptimalityEntry> entries;
  bool non_optimal_everywhere() const;
};

/// Solves the program at each lambda (cfg.lambda is overridden) and compares
/// objectives against x x^T. Never claims optimality of x x^T.
NonOptimalityReport empirical_nonoptimality(const SensingEnsemble& e, const SparseSignal& x,
                                            std::span<const double> lambdas,
                                            const SolverConfig& cfg);

enum class OracleMode {
  kAuto,        // exhaustive when within budget, reduced otherwise
  kExhaustive,  // every support and every sign pattern over all m rows
  kReduced,     // signs only over a maximal independent row subset per support
};

struct OracleOptions {
  std::size_t k_max = 1;
  double tol = 1e-6;
  OracleMode mode = OracleMode::kAuto;
  double budget = 1e8;
};

struct OracleResult {
  bool unique = false;
  /// A consistent y with |supp(y)| <= k_max and y != +-x, if any.
  std::optional<std::vector<double>> counterexample;
  /// The consistent solutions found (one representative per +- pair).
  std::vector<std::vector<double>> solutions;
  OracleMode mode_used = OracleMode::kExhaustive;
  std::uint64_t systems_solved = 0;
};

/// Enumerates supports of size <= k_max and sign patterns s, solving
/// <z_j|_T, y_T> = s_j sqrt(b_j) in the least-squares sense (rank tolerance
/// 1e-10 sigma_max). A system is consistent when its residual and the
/// measurement mismatch are both within tol (relative to max(1, scale)).
/// Throws Infeasible when the enumeration exceeds the budget.
OracleResult injectivity_oracle(const Matrix& vectors, const SparseSignal& x,
                                const OracleOptions& opts);

/// m C(n, k) 2^m summed over sizes 1..k_max.
double oracle_exhaustive_cost(std::size_t n, std::size_t m, std::size_t k_max);

}  // namespace cpr
