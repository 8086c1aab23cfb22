// Acceptance suite: one PASS/FAIL line per criterion.
//
//   cpr_acceptance            run all twelve
//   cpr_acceptance 4 5        run the listed criteria
//
// Exit status is 0 only when every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "cpr/certificate.hpp"
#include "cpr/experiment.hpp"
#include "cpr/linalg.hpp"
#include "cpr/measurement.hpp"
#include "cpr/solver.hpp"
#include "cpr/theory.hpp"

using namespace cpr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome recovery_regime() {
  const std::vector<double> lambdas = {2.0, 3.0, 4.0, 6.0};
  SolverConfig cfg;
  int successes = 0;
  double worst_solve = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    Instance inst = make_instance(64, 2, 150, SignalKind::kFlat, derive_seed(101, t));
    inst.e.factorize_gram();
    double best = 1.0;
    for (double lam : lambdas) {
      auto t0 = Clock::now();
      auto rec = run_recovery(inst, {lam}, cfg, 1e-3, t);
      worst_solve = std::max(worst_solve, seconds_since(t0));
      best = std::min(best, rec[0].rel_error);
    }
    successes += best <= 1e-3;
  }
  return {successes >= 18 && worst_solve <= 120.0,
          fmt("%d/20 trials recovered at the best lambda (need >= 18); slowest solve %.1f s "
              "(limit 120 s)",
              successes, worst_solve)};
}

Outcome below_frontier() {
  const std::size_t n = 128, k = 8, m = 20;
  const auto lambdas = default_lambda_sweep(n, m);
  SolverConfig cfg;
  cfg.rho = 10.0;
  cfg.max_iter = 200;
  int successes = 0, everywhere = 0;
  double worst_residual = 0.0, min_rel_gap = 1e300;
  for (std::uint64_t t = 0; t < 20; ++t) {
    Instance inst = make_instance(n, k, m, SignalKind::kFlat, derive_seed(202, t));
    inst.e.factorize_gram();
    NonOptimalityReport rep = empirical_nonoptimality(inst.e, inst.x, lambdas, cfg);
    bool recovered = false;
    for (const auto& en : rep.entries) {
      recovered = recovered || en.rel_error <= 1e-3;
      worst_residual = std::max(worst_residual, en.primal_residual);
      min_rel_gap = std::min(min_rel_gap, en.gap / en.objective_xx);
    }
    successes += recovered;
    everywhere += rep.non_optimal_everywhere();
  }
  return {successes <= 2 && everywhere >= 18,
          fmt("%d/20 recovered (need <= 2); x x^T beaten at every lambda in %d/20 (need >= 18); "
              "smallest relative gap %.3f, largest primal residual %.1e",
              successes, everywhere, min_rel_gap, worst_residual)};
}

Outcome oracle_equivalence() {
  int agree = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    Instance inst = make_instance(8, 1, 30, SignalKind::kFlat, derive_seed(303, t));
    OracleResult o = injectivity_oracle(inst.e.vectors(), inst.x, {});
    inst.e.factorize_gram();
    SolverConfig cfg;
    cfg.lambda = 3.0;
    SolveResult r = solve_trace_l1(inst.e, inst.b, cfg);
    RecoveredSignal s = extract_signal(r.x_hat);
    if (!o.unique || o.solutions.size() != 1) continue;
    double err = check_success(s.x_hat, o.solutions[0], 1e-3).rel_error;
    worst = std::max(worst, err);
    agree += err <= 1e-3;
  }
  return {agree == 10,
          fmt("%d/10 instances: oracle unique and solver within 1e-3 of it (worst %.1e)", agree,
              worst)};
}

struct CertStats {
  int all_three = 0, telescoping = 0, contraction = 0;
  int passed[3] = {0, 0, 0};
  double worst_telescoping = 0.0;
  std::vector<double> contractions;
};

const CertStats& certificate_runs() {
  static CertStats s = [] {
    CertStats st;
    for (std::uint64_t t = 0; t < 100; ++t) {
      SparseSignal x = make_signal(64, 3, SignalKind::kFlat, derive_seed(404, 2 * t));
      SensingEnsemble e(64, 660, derive_seed(404, 2 * t + 1));
      SubspaceContext ctx(x);
      Certificate c = golfing_construct(e, ctx, 3.0);
      CertificateReport r = verify_certificate(c, ctx, 660, 2.0, 20.0);
      st.all_three += r.all_passed();
      for (int i = 0; i < 3; ++i) st.passed[i] += r.passed[i];
      double tel = std::abs(r.norm_TcapOmega_gap - r.final_residual);
      st.worst_telescoping = std::max(st.worst_telescoping, tel);
      st.telescoping += tel <= 1e-9;
      st.contraction += r.first_contraction <= 0.2;
      st.contractions.push_back(r.first_contraction);
    }
    std::sort(st.contractions.begin(), st.contractions.end());
    return st;
  }();
  return s;
}

Outcome certificate_pipeline() {
  const CertStats& s = certificate_runs();
  return {s.all_three >= 80 && s.telescoping == 100,
          fmt("all three bounds in %d/100 (need >= 80; per bound %d, %d, %d); telescoping to "
              "1e-9 in %d/100 (worst %.1e)",
              s.all_three, s.passed[0], s.passed[1], s.passed[2], s.telescoping,
              s.worst_telescoping)};
}

Outcome golfing_contraction() {
  const CertStats& s = certificate_runs();
  return {s.contraction >= 90,
          fmt("||X1|| <= ||X0||/5 in %d/100 (need >= 90); median ratio %.3f", s.contraction,
              s.contractions[50])};
}

Outcome sandwich() {
  LemmaCheckResult r = check_l1_trace_sandwich(40, 4, 600, 200, 606);
  LemmaCheckResult low = check_lowrank_lower(40, 4, 600, 200, 607);
  return {r.violation_fraction() <= 0.02 && r.max_stat <= 1.2,
          fmt("violations %zu/200 (need <= 2%%); ratio range [%.3f, %.3f] (upper limit 1.2); "
              "rank-two lower bound violations %zu/200",
              r.violations, r.min_stat, r.max_stat, low.violations)};
}

Outcome l1_upper() {
  LemmaCheckResult r = check_l1_upper(50, 500, 200, 707);
  return {r.violation_fraction() <= 0.02,
          fmt("violations %zu/200 (need <= 2%%); largest ratio %.3f", r.violations, r.max_stat)};
}

Outcome truncated_moment() {
  TruncatedMoments tm = truncated_moments();
  bool betas = std::abs(tm.beta2 - 0.9707) <= 5e-4 && std::abs(tm.beta4 - 2.6728) <= 5e-4;
  LemmaCheckResult r = check_truncated_moment(30, 3000, 50, 808, 0.15);
  std::size_t ok = r.trials - r.violations;
  return {betas && ok >= 48,
          fmt("beta2 %.6f, beta4 %.6f (%s); deviation <= 0.15 in %zu/50 (need >= 48); "
              "deviation range [%.3f, %.3f]",
              tm.beta2, tm.beta4, betas ? "ok" : "off", ok, r.min_stat * 0.15,
              r.max_stat * 0.15)};
}

Outcome chi2_tail() {
  auto t0 = Clock::now();
  LemmaCheckResult r = check_chi2_tail(100, 0, 1000000, 909);
  double secs = seconds_since(t0);
  double freq = r.extras.at("freq_lower"), bound = r.extras.at("bound");
  double se = r.extras.at("binomial_se");
  return {freq <= bound + 3.0 * se && secs <= 30.0,
          fmt("P(chi2(100) <= 50) = %.2e vs e^-9 + 3 SE = %.2e; P(chi2(100) >= 50) = %.4f; "
              "%.1f s (limit 30 s)",
              freq, bound + 3.0 * se, r.extras.at("freq_upper"), secs)};
}

Outcome injectivity() {
  int unique = 0, counter = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    NormalSampler rng(derive_seed(1010, t));
    SparseSignal x(6, {rng.index(6)}, {rng.uniform() < 0.5 ? -1.0 : 1.0});
    SensingEnsemble e3(6, 3, derive_seed(1011, t));
    unique += injectivity_oracle(e3.vectors(), x, {}).unique;
    SensingEnsemble e1(6, 1, derive_seed(1012, t));
    OracleResult o1 = injectivity_oracle(e1.vectors(), x, {});
    counter += o1.counterexample.has_value();
  }
  return {unique >= 95 && counter == 100,
          fmt("m=3 unique in %d/100 (need >= 95); m=1 counterexample in %d/100 (need 100)",
              unique, counter)};
}

Outcome phase_monotone() {
  PhaseDiagramConfig cfg;
  cfg.n = 48;
  cfg.k_grid = {2};
  cfg.m_grid = {40, 80, 120, 160};
  cfg.trials = 20;
  cfg.rule = parse_lambda_rule("remark1");
  cfg.seed = 1111;
  cfg.solver.max_iter = 3000;
  PhaseDiagram pd = run_phase_diagram(cfg);
  const auto& row = pd.success_rate[0];
  const double slack = 2.0 / std::sqrt(20.0);
  bool mono = true;
  for (std::size_t i = 0; i < row.size(); ++i)
    for (std::size_t j = i + 1; j < row.size(); ++j) mono = mono && row[j] >= row[i] - slack;
  return {mono, fmt("success rates %.2f, %.2f, %.2f, %.2f for m = 40, 80, 120, 160 "
                    "(nondecreasing within %.3f)",
                    row[0], row[1], row[2], row[3], slack)};
}

Outcome kernel_suite() {
  auto t0 = Clock::now();
  int adjoint = 0, idem = 0, sign_t = 0, eig = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    NormalSampler rng(derive_seed(1212, t));
    const std::size_t n = 4 + rng.index(13), k = 1 + rng.index(n);
    SensingEnsemble e(n, 3 * n, derive_seed(1213, t));
    SparseSignal x = make_signal(n, k, SignalKind::kGaussianNormalized, derive_seed(1214, t));
    SubspaceContext ctx(x);
    std::vector<double> a(n * n), v(3 * n);
    rng.fill_normal(a);
    rng.fill_normal(v);
    SymMatrix xm = SymMatrix::from_dense(n, a);

    double lhs = dot(apply_A(e, xm), v), rhs = inner(xm, apply_A_adjoint(e, v));
    adjoint += std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs));

    bool ok = true;
    for (auto proj : {project_Omega, project_Gamma, project_T, project_T_cap_Omega}) {
      SymMatrix p = proj(ctx, xm);
      ok = ok && frobenius_norm(proj(ctx, p) - p) <= 1e-12 * std::max(1.0, frobenius_norm(p));
      ok = ok && frobenius_norm(p) <= frobenius_norm(xm) * (1.0 + 1e-12);
    }
    idem += ok;

    double l1 = ctx.l1_norm();
    auto xd = x.dense();
    auto sg = ctx.sign_vector();
    SymMatrix closed = l1 * SymMatrix::sym_outer(xd, sg) - (l1 * l1) * SymMatrix::outer(xd);
    sign_t += frobenius_norm(project_T(ctx, SymMatrix::outer(sg)) - closed) <=
              1e-12 * std::max(1.0, frobenius_norm(closed));

    Spectrum s = sym_eigen(xm);
    double rec = frobenius_norm(SymMatrix::from_eigenpairs(s.vectors, s.values) - xm);
    Matrix qtq = s.vectors.transpose() * s.vectors;
    double orth = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        orth = std::max(orth, std::abs(qtq(i, j) - (i == j ? 1.0 : 0.0)));
    eig += rec <= 1e-9 * std::max(1.0, frobenius_norm(xm)) && orth <= 1e-10 &&
           std::is_sorted(s.values.rbegin(), s.values.rend());
  }
  double secs = seconds_since(t0);
  return {adjoint == 100 && idem == 100 && sign_t == 100 && eig == 100 && secs <= 10.0,
          fmt("adjoint %d/100, projections %d/100, sign-pattern identity %d/100, eigen "
              "reconstruction %d/100; %.2f s (limit 10 s)",
              adjoint, idem, sign_t, eig, secs)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"end-to-end recovery", recovery_regime},
      {"failure below the frontier", below_frontier},
      {"oracle equivalence", oracle_equivalence},
      {"certificate pipeline", certificate_pipeline},
      {"golfing contraction", golfing_contraction},
      {"l1/trace sandwich", sandwich},
      {"l1 upper bound", l1_upper},
      {"truncated moments", truncated_moment},
      {"chi-square tail", chi2_tail},
      {"injectivity threshold", injectivity},
      {"phase-diagram monotonicity", phase_monotone},
      {"numerical kernel suite", kernel_suite},
  };
  std::vector<std::size_t> pick;
  for (int i = 1; i < argc; ++i) {
    int c = std::atoi(argv[i]);
    if (c < 1 || c > static_cast<int>(all.size())) {
      std::fprintf(stderr, "unknown criterion '%s' (1..%zu)\n", argv[i], all.size());
      return 2;
    }
    pick.push_back(static_cast<std::size_t>(c - 1));
  }
  if (pick.empty())
    for (std::size_t i = 0; i < all.size(); ++i) pick.push_back(i);

  int failed = 0;
  for (std::size_t i : pick) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %02zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
