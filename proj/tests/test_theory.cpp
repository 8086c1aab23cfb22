#include <cmath>
#include <vector>

#include "doctest.h"

#include "cpr/certificate.hpp"
#include "cpr/error.hpp"
#include "cpr/theory.hpp"
#include "support.hpp"

using namespace cpr;

namespace {

SparseSignal flat(std::size_t n, std::size_t k) {
  std::vector<std::size_t> g(k);
  for (std::size_t i = 0; i < k; ++i) g[i] = i;
  return SparseSignal(n, g, std::vector<double>(k, 1.0 / std::sqrt(double(k))));
}

bool same(const LemmaCheckResult& a, const LemmaCheckResult& b) {
  return a.violations == b.violations && a.worst_ratio == b.worst_ratio &&
         a.min_stat == b.min_stat && a.max_stat == b.max_stat && a.extras == b.extras;
}

}  // namespace

TEST_CASE("lemma id names round trip") {
  for (LemmaId id : {LemmaId::kL1TraceSandwich, LemmaId::kLowrankLower, LemmaId::kL1Upper,
                     LemmaId::kTruncatedMoment, LemmaId::kChi2Tail, LemmaId::kE0Event})
    CHECK(parse_lemma_id(to_string(id)) == id);
  CHECK(to_string(LemmaId::kChi2Tail) == "CHI2_TAIL");
  CHECK_THROWS_AS(parse_lemma_id("nope"), InvalidArgument);
}

TEST_CASE("random test matrices have the advertised structure") {
  NormalSampler rng(5);
  std::vector<std::size_t> g = {1, 4, 6};
  for (int t = 0; t < 20; ++t) {
    SymMatrix p = random_psd_on_support(rng, 8, g);
    CHECK(trace(p) == doctest::Approx(1.0));
    CHECK(min_eigenvalue(p) >= -1e-12);
    CHECK(p(0, 0) == 0.0);
    SymMatrix r = random_rank2_on_support(rng, 8, g);
    Spectrum s = sym_eigen(r);
    CHECK(s.values.front() > 0.09);
    CHECK(s.values.back() < -0.09);
    CHECK(std::abs(s.values[1]) <= 1e-12);
  }
}

TEST_CASE("sandwich and lower bound checks at the documented scale") {
  LemmaCheckResult a = check_l1_trace_sandwich(40, 4, 600, 50, 7);
  CHECK(a.trials == 50);
  CHECK(a.violation_fraction() <= 0.04);
  CHECK(a.min_stat <= 1.0);
  CHECK(a.max_stat >= 1.0);
  CHECK(a.worst_ratio >= a.min_stat);
  CHECK(a.worst_ratio <= a.max_stat);
  CHECK(same(a, check_l1_trace_sandwich(40, 4, 600, 50, 7)));

  LemmaCheckResult b = check_lowrank_lower(40, 4, 600, 50, 7);
  CHECK(b.violations <= 1);
  CHECK(b.worst_ratio == b.min_stat);

  // Rank one lies inside the rank-two class, so k = 1 gives the sandwich's
  // lower bound with a weaker constant.
  LemmaCheckResult c = check_lowrank_lower(20, 2, 400, 20, 3);
  CHECK(c.min_stat > 0.0);
}

TEST_CASE("l1 upper bound check") {
  LemmaCheckResult r = check_l1_upper(50, 500, 40, 9);
  CHECK(r.violation_fraction() <= 0.05);
  CHECK(r.max_stat <= 1.125 * 1.05);
  CHECK(r.worst_ratio == r.max_stat);
}

TEST_CASE("single off-diagonal pair reduces to an average of |2 z_a z_b|") {
  SensingEnsemble e(5, 300, 2);
  SymMatrix x(5);
  x.set(1, 3, 1.0);
  auto ax = apply_A(e, x);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 0; j < 300; ++j) {
    lhs += std::abs(ax[j]);
    rhs += std::abs(2.0 * e.vectors()(j, 1) * e.vectors()(j, 3));
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
  CHECK(lhs / 300.0 <= 1.125 * entrywise_l1(x));
}

TEST_CASE("truncated moment check in one dimension reduces to beta4") {
  TruncatedMoments tm = truncated_moments();
  LemmaCheckResult r = check_truncated_moment(1, 400000, 2, 4, 0.02, std::vector<double>{1.0});
  CHECK(r.violations == 0);
  CHECK(r.extras.at("max_deviation") <= 0.02);
  (void)tm;
}

TEST_CASE("truncated moment deviation is rotation invariant in distribution") {
  const std::size_t n = 10, m = 2000, trials = 60;
  std::vector<double> u1(n, 0.0), u2(n, 1.0 / std::sqrt(double(n)));
  u1[0] = 1.0;
  const double eps = 0.25;
  LemmaCheckResult a = check_truncated_moment(n, m, trials, 1, eps, u1);
  LemmaCheckResult b = check_truncated_moment(n, m, trials, 2, eps, u2);
  double pa = a.violation_fraction(), pb = b.violation_fraction();
  double p = 0.5 * (pa + pb);
  double se = std::sqrt(std::max(p * (1 - p), 1.0 / trials) * 2.0 / trials);
  CHECK(std::abs(pa - pb) <= 3.0 * se);
}

TEST_CASE("chi-square tail check") {
  LemmaCheckResult r = check_chi2_tail(100, 0, 100000, 3);
  CHECK(r.trials == 100000);
  CHECK(r.extras.at("mean") == doctest::Approx(100.0).epsilon(0.01));
  CHECK(r.extras.at("bound") == doctest::Approx(std::exp(-9.0)));
  CHECK(r.extras.at("freq_lower") <= r.extras.at("bound") + 3.0 * r.extras.at("binomial_se"));
  CHECK(r.extras.at("freq_upper") > 0.5);
  CHECK(same(r, check_chi2_tail(100, 0, 100000, 3)));

  LemmaCheckResult one = check_chi2_tail(1, 0, 20000, 4);
  CHECK(one.extras.at("bound") == doctest::Approx(std::exp(-0.09)));
  CHECK(one.extras.at("freq_lower") <= one.extras.at("bound"));
  CHECK_THROWS_AS(check_chi2_tail(5, 5, 10, 1), InvalidArgument);
}

TEST_CASE("E0 event statistics") {
  LemmaCheckResult r = check_E0_event(50, 4, 20, 20000, 6);
  CHECK(r.extras.at("chi2_mean") == doctest::Approx(1.0).epsilon(0.02));
  CHECK(r.extras.at("chi2_var") == doctest::Approx(2.0).epsilon(0.02));
  CHECK(r.extras.at("p_E0_bound") == doctest::Approx(1.0 - 20.0 / std::pow(50.0, 5)));
  CHECK(r.extras.at("p_E0_empirical") >=
        r.extras.at("p_E0_bound") - 3.0 * r.extras.at("binomial_se"));
  CHECK(r.extras.at("p_E0_empirical") > 0.99);
}

TEST_CASE("lemma CSV rows are stable") {
  LemmaCheckResult r = check_l1_upper(10, 50, 5, 1);
  std::string row = lemma_csv_row(r, "T");
  CHECK(row == lemma_csv_row(check_l1_upper(10, 50, 5, 1), "T"));
  CHECK(row.rfind("1,T,L1_UPPER,10,", 0) == 0);
  std::size_t commas = 0;
  for (char ch : lemma_csv_header()) commas += ch == ',';
  std::size_t row_commas = 0;
  for (char ch : row) row_commas += ch == ',';
  CHECK(commas == row_commas);
  CHECK(lemma_to_json(r)["lemma_id"] == "L1_UPPER");
}

TEST_CASE("converse bound examples") {
  ConverseBound k4 = converse_bound(flat(64, 4), 64);
  CHECK(k4.term_spectral == 0.0);
  CHECK(k4.m_lower == 0.0);

  ConverseBound k8 = converse_bound(flat(1024, 8), 1024);
  CHECK(k8.term_spectral == doctest::Approx(1.0));
  double l2 = std::log(1024.0) * std::log(1024.0);
  CHECK(k8.term_l1 == doctest::Approx(16.0 / (500.0 * l2)));
  CHECK(k8.term_l1 == doctest::Approx(6.66e-4).epsilon(1e-3));
  CHECK(k8.m_lower == k8.term_l1);

  ConverseBound big = converse_bound(flat(1000000, 100), 1000000);
  CHECK(big.term_spectral == doctest::Approx(576.0));
  CHECK(big.term_l1 == doctest::Approx(0.0262).epsilon(2e-3));
  CHECK(big.m_lower == big.term_l1);

  // ||x||_1^2 <= k/2 clamps the l1 term.
  SparseSignal spike = SparseSignal(100, {0, 1, 2, 3}, {1.0, 1e-3, 1e-3, 1e-3}).normalized();
  CHECK(converse_bound(spike, 100).term_l1 == 0.0);
  CHECK_THROWS_AS(converse_bound(flat(1, 1), 1), InvalidArgument);
  auto j = converse_to_json(k8);
  CHECK(j["m_lower"].get<double>() == k8.m_lower);
}

TEST_CASE("converse bound is monotone in the l1 norm") {
  const std::size_t n = 500, k = 6;
  double prev = -1.0;
  for (int s = 0; s <= 20; ++s) {
    double a = 1.0 + 0.1 * s;  // spread mass from one entry towards flat
    std::vector<double> v(k, 1.0);
    v[0] = 5.0 / a;
    SparseSignal x = SparseSignal(n, {0, 1, 2, 3, 4, 5}, v).normalized();
    double t = converse_bound(x, n).term_l1;
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("non-optimality control with plenty of measurements") {
  SensingEnsemble e(32, 200, 17);
  e.factorize_gram();
  SparseSignal x = make_signal(32, 2, SignalKind::kFlat, 17);
  std::vector<double> lam = {4.0};
  SolverConfig cfg;
  NonOptimalityReport r = empirical_nonoptimality(e, x, lam, cfg);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].gap <= 1e-5 * r.entries[0].objective_xx);
  CHECK(!r.entries[0].non_optimal);
  CHECK(!r.non_optimal_everywhere());
  CHECK(r.entries[0].objective_xx == doctest::Approx(2.0 + 4.0));
  CHECK_THROWS_AS(empirical_nonoptimality(e, x, std::vector<double>{}, cfg), InvalidArgument);
}

TEST_CASE("oracle finds a counterexample from a single measurement") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    SensingEnsemble e(6, 1, derive_seed(1, s));
    SparseSignal x(6, {s % 6}, {1.0});
    OracleResult r = injectivity_oracle(e.vectors(), x, {});
    CHECK(!r.unique);
    REQUIRE(r.counterexample.has_value());
    auto y = *r.counterexample;
    double zy = dot(e.vector(0), y);
    CHECK(zy * zy == doctest::Approx(measure(e, x)[0]));
    CHECK(check_success(y, x.dense(), 1e-6).rel_error > 1e-3);
  }
}

TEST_CASE("oracle verdicts: generic unique case, sign invariance, mode agreement") {
  int unique = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SensingEnsemble e(6, 3, derive_seed(2, s));
    SparseSignal x(6, {s % 6}, {s % 2 ? -1.0 : 1.0});
    OracleOptions ex;
    ex.mode = OracleMode::kExhaustive;
    OracleResult a = injectivity_oracle(e.vectors(), x, ex);
    OracleResult b = injectivity_oracle(e.vectors(), x.negated(), ex);
    OracleOptions red;
    red.mode = OracleMode::kReduced;
    OracleResult c = injectivity_oracle(e.vectors(), x, red);
    CHECK(a.unique == b.unique);
    CHECK(a.unique == c.unique);
    CHECK(a.mode_used == OracleMode::kExhaustive);
    CHECK(c.mode_used == OracleMode::kReduced);
    if (a.unique) {
      ++unique;
      REQUIRE(a.solutions.size() == 1);
      CHECK(check_success(a.solutions[0], x.dense(), 1e-9).success);
    }
  }
  CHECK(unique >= 19);
}

TEST_CASE("oracle with two-sparse search and budget guard") {
  SensingEnsemble e(5, 8, 4);
  SparseSignal x = SparseSignal(5, {1, 3}, {0.6, -0.8});
  OracleOptions o;
  o.k_max = 2;
  OracleResult r = injectivity_oracle(e.vectors(), x, o);
  CHECK(r.unique);
  CHECK(r.systems_solved > 0);
  CHECK(oracle_exhaustive_cost(6, 3, 1) == 6.0 * 3.0 * 8.0);
  CHECK(oracle_exhaustive_cost(5, 8, 2) == 8.0 * 256.0 * (5.0 + 10.0));
  OracleOptions tight;
  tight.mode = OracleMode::kExhaustive;
  tight.budget = 10.0;
  CHECK_THROWS_AS(injectivity_oracle(e.vectors(), x, tight), Infeasible);
  OracleOptions auto_mode;
  auto_mode.budget = 1.0;
  CHECK_THROWS_AS(injectivity_oracle(e.vectors(), x, auto_mode), Infeasible);
}

TEST_CASE("oracle picks reduced mode when exhaustive enumeration is too large") {
  SensingEnsemble e(8, 30, 6);
  SparseSignal x(8, {0}, {1.0});
  OracleResult r = injectivity_oracle(e.vectors(), x, {});
  CHECK(r.mode_used == OracleMode::kReduced);
  CHECK(r.unique);
  REQUIRE(r.solutions.size() == 1);
  CHECK(check_success(r.solutions[0], x.dense(), 1e-9).success);
}
