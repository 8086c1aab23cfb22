#pragma once

// Experiment plumbing shared by the command-line driver and the acceptance
// suite: seeded instances, recovery records, lambda rules, phase diagrams
// and the lemma suite.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpr/measurement.hpp"
#include "cpr/solver.hpp"
#include "cpr/theory.hpp"

namespace cpr {

struct Instance {
  SparseSignal x;
  SensingEnsemble e;
  std::vector<double> b;
};

/// Signal from derive_seed(seed, 0), ensemble from derive_seed(seed, 1).
Instance make_instance(std::size_t n, std::size_t k, std::size_t m, SignalKind kind,
                       std::uint64_t seed);

struct ExperimentRecord {
  std::size_t n = 0, k = 0, m = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool success = false;
  double rel_error = 0.0;
  int iterations = 0;
  double objective = 0.0;
  std::int64_t wall_time_ms = 0;
  bool converged = false;
  double rank_gap = 0.0;
};

/// Removes repeated values (first occurrence kept). Rejects empty lists and
/// negative or non-finite entries. `duplicates` receives the dropped values.
std::vector<double> dedupe_lambdas(const std::vector<double>& lambdas,
                                   std::vector<double>* duplicates = nullptr);

/// {1, 2, 4, 8, sqrt(m / ln n)}
std::vector<double> default_lambda_sweep(std::size_t n, std::size_t m);

/// One solve per lambda. The ensemble must carry its Gram factor.
std::vector<ExperimentRecord> run_recovery(const Instance& inst, const std::vector<double>& lambdas,
                                           const SolverConfig& cfg, double success_tol,
                                           std::uint64_t seed = 0);

/// "remark1" | "remark1:<C0>" | "fixed:<v>" | "list:<v1,v2,...>"
struct LambdaRule {
  enum class Kind { kRemark1, kFixed, kList };
  Kind kind = Kind::kRemark1;
  double c0 = 1.0;
  std::vector<double> values;

  std::vector<double> lambdas(std::size_t n, std::size_t m) const;
  std::string to_string() const;
};

LambdaRule parse_lambda_rule(const std::string& s);

struct PhaseDiagramConfig {
  std::size_t n = 0;
  std::vector<std::size_t> k_grid;
  std::vector<std::size_t> m_grid;
  std::size_t trials = 0;
  LambdaRule rule;
  std::uint64_t seed = 0;
  SignalKind kind = SignalKind::kFlat;
  SolverConfig solver;
  double success_tol = 1e-3;
  /// Upper bound on cells x trials x |lambdas| x max_iter.
  double budget = 5e8;
};

struct PhaseDiagram {
  std::vector<std::size_t> k_grid;
  std::vector<std::size_t> m_grid;
  std::size_t trials_per_cell = 0;
  std::vector<std::vector<double>> success_rate;  // [k index][m index]
};

/// Seed of trial t in cell (k, m); independent of the grid layout.
std::uint64_t cell_trial_seed(std::uint64_t seed, std::size_t k, std::size_t m, std::size_t t);

/// A trial succeeds when any lambda of the rule recovers x. Throws
/// InvalidArgument on empty grids, trials == 0 or k > n, and Infeasible when
/// the work estimate exceeds the budget.
PhaseDiagram run_phase_diagram(const PhaseDiagramConfig& cfg);

constexpr int kCsvSchemaVersion = 1;

/// Header: schema_version,k,m=<m1>,m=<m2>,...
std::string phase_diagram_csv(const PhaseDiagram& pd);
nlohmann::json phase_diagram_json(const PhaseDiagram& pd);

std::string records_csv(const std::vector<ExperimentRecord>& records);
nlohmann::json records_json(const std::vector<ExperimentRecord>& records);

struct LemmaSuiteConfig {
  std::uint64_t seed = 1;
  std::size_t sandwich_n = 40, sandwich_k = 4, sandwich_m = 600, sandwich_trials = 200;
  std::size_t lowrank_n = 40, lowrank_k = 4, lowrank_m = 600, lowrank_trials = 200;
  std::size_t l1_n = 50, l1_m = 500, l1_trials = 200;
  std::size_t moment_n = 30, moment_m = 3000, moment_trials = 50;
  double moment_epsilon = 0.15;
  std::size_t chi2_N = 100, chi2_m1 = 0, chi2_samples = 1000000;
  std::size_t e0_n = 50, e0_k = 4, e0_m = 20, e0_trials = 100000;
};

/// Missing keys keep their defaults; unknown keys are rejected.
LemmaSuiteConfig lemma_suite_from_json(const nlohmann::json& j);

/// One result per lemma id, in enum order. Each check gets its own derived seed.
std::vector<LemmaCheckResult> run_lemma_suite(const LemmaSuiteConfig& cfg);

std::string lemma_suite_csv(const std::vector<LemmaCheckResult>& results,
                            const std::string& timestamp);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace cpr
