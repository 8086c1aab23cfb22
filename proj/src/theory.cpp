#include "cpr/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "cpr/certificate.hpp"
#include "cpr/error.hpp"
#include "cpr/random.hpp"

namespace cpr {

namespace {

struct IdName {
  LemmaId id;
  const char* name;
};

constexpr IdName kLemmaNames[] = {
    {LemmaId::kL1TraceSandwich, "L1_TRACE_SANDWICH"},
    {LemmaId::kLowrankLower, "LOWRANK_LOWER"},
    {LemmaId::kL1Upper, "L1_UPPER"},
    {LemmaId::kTruncatedMoment, "TRUNCATED_MOMENT"},
    {LemmaId::kChi2Tail, "CHI2_TAIL"},
    {LemmaId::kE0Event, "E0_EVENT"},
};

}  // namespace

std::string to_string(LemmaId id) {
  for (const auto& e : kLemmaNames)
    if (e.id == id) return e.name;
  return "UNKNOWN";
}

LemmaId parse_lemma_id(const std::string& s) {
  for (const auto& e : kLemmaNames)
    if (s == e.name) return e.id;
  throw InvalidArgument("unknown lemma id: " + s);
}

namespace {

std::vector<double> unit_gaussian(NormalSampler& rng, std::size_t n) {
  std::vector<double> u(n);
  double s = 0.0;
  do {
    rng.fill_normal(u);
    s = norm2(u);
  } while (s == 0.0);
  for (double& v : u) v /= s;
  return u;
}

// Per-trial statistics are collected into a vector first so the reduction
// order does not depend on scheduling.
template <class TrialFn>
auto run_trials(std::size_t trials, std::uint64_t seed, TrialFn&& fn) {
  using R = decltype(fn(std::declval<NormalSampler&>()));
  std::vector<R> stats(trials);
  const long long nt = static_cast<long long>(trials);
#pragma omp parallel for schedule(dynamic)
  for (long long t = 0; t < nt; ++t) {
    NormalSampler rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    stats[static_cast<std::size_t>(t)] = fn(rng);
  }
  return stats;
}

enum class Side { kLower, kUpper, kBoth };

// Fills trials/violations/extremes for a ratio statistic with acceptance
// interval [lo, hi].
LemmaCheckResult summarize(LemmaId id, const LemmaParams& p, const std::vector<double>& stats,
                           double lo, double hi, Side side) {
  LemmaCheckResult r;
  r.lemma_id = id;
  r.params = p;
  r.trials = stats.size();
  if (stats.empty()) return r;
  r.min_stat = *std::min_element(stats.begin(), stats.end());
  r.max_stat = *std::max_element(stats.begin(), stats.end());
  for (double s : stats)
    if (s < lo || s > hi) ++r.violations;
  switch (side) {
    case Side::kLower: r.worst_ratio = r.min_stat; break;
    case Side::kUpper: r.worst_ratio = r.max_stat; break;
    case Side::kBoth:
      r.worst_ratio = std::abs(r.max_stat - 1.0) >= std::abs(r.min_stat - 1.0) ? r.max_stat
                                                                               : r.min_stat;
      break;
  }
  return r;
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

SymMatrix random_psd_on_support(NormalSampler& rng, std::size_t n,
                                std::span<const std::size_t> support) {
  const std::size_t k = support.size();
  require(k >= 1 && k <= n, "random_psd_on_support: bad support");
  const std::size_t r = 1 + rng.index(k);
  Matrix a(k, r);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = 0; c < r; ++c) a(i, c) = rng.normal();
  SymMatrix block(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < r; ++c) s += a(i, c) * a(j, c);
      block.set(i, j, s);
    }
  block *= 1.0 / trace(block);
  return SymMatrix::embed_block(n, support, block);
}

SymMatrix random_rank2_on_support(NormalSampler& rng, std::size_t n,
                                  std::span<const std::size_t> support) {
  const std::size_t k = support.size();
  require(k >= 2 && k <= n, "random_rank2_on_support: need |G| >= 2");
  std::vector<double> u1 = unit_gaussian(rng, k);
  std::vector<double> u2;
  double nrm = 0.0;
  do {
    u2 = unit_gaussian(rng, k);
    const double d = dot(u1, u2);
    for (std::size_t i = 0; i < k; ++i) u2[i] -= d * u1[i];
    nrm = norm2(u2);
  } while (nrm < 1e-6);
  for (double& v : u2) v /= nrm;
  const double a = 0.1 + 0.9 * rng.uniform();
  const double b = 0.1 + 0.9 * rng.uniform();
  SymMatrix block = SymMatrix::outer(u1) * a;
  block.axpy(-b, SymMatrix::outer(u2));
  return SymMatrix::embed_block(n, support, block);
}

LemmaCheckResult check_l1_trace_sandwich(std::size_t n, std::size_t k, std::size_t m,
                                         std::size_t trials, std::uint64_t seed) {
  require(n >= 1 && k >= 1 && k <= n && m >= 1, "check_l1_trace_sandwich: bad sizes");
  const auto stats = run_trials(trials, seed, [&](NormalSampler& rng) {
    const auto g = random_subset(rng, n, k);
    const SymMatrix x = random_psd_on_support(rng, n, g);
    const SensingEnsemble e(n, m, rng.bits());
    return norm1(apply_A(e, x)) / static_cast<double>(m) / trace(x);
  });
  return summarize(LemmaId::kL1TraceSandwich, {n, k, m, trials, seed, 0.0, 0}, stats,
                   1.0 - 1.0 / 8.0, 1.0 + 1.0 / 8.0, Side::kBoth);
}

LemmaCheckResult check_lowrank_lower(std::size_t n, std::size_t k, std::size_t m,
                                     std::size_t trials, std::uint64_t seed) {
  require(n >= 2 && k >= 2 && k <= n && m >= 1, "check_lowrank_lower: bad sizes");
  const auto stats = run_trials(trials, seed, [&](NormalSampler& rng) {
    const auto g = random_subset(rng, n, k);
    const SymMatrix x = random_rank2_on_support(rng, n, g);
    const SensingEnsemble e(n, m, rng.bits());
    return norm1(apply_A(e, x)) / static_cast<double>(m) / spectral_norm(x);
  });
  return summarize(LemmaId::kLowrankLower, {n, k, m, trials, seed, 0.0, 0}, stats,
                   0.94 * (1.0 - 1.0 / 8.0), std::numeric_limits<double>::infinity(),
                   Side::kLower);
}

LemmaCheckResult check_l1_upper(std::size_t n, std::size_t m, std::size_t trials,
                                std::uint64_t seed) {
  require(n >= 1 && m >= 1, "check_l1_upper: bad sizes");
  const auto stats = run_trials(trials, seed, [&](NormalSampler& rng) {
    std::vector<double> a(n * n);
    rng.fill_normal(a);
    const SymMatrix x = SymMatrix::from_dense(n, std::move(a));
    const SensingEnsemble e(n, m, rng.bits());
    return norm1(apply_A(e, x)) / static_cast<double>(m) / entrywise_l1(x);
  });
  return summarize(LemmaId::kL1Upper, {n, 0, m, trials, seed, 0.0, 0}, stats,
                   -std::numeric_limits<double>::infinity(), 9.0 / 8.0, Side::kUpper);
}

LemmaCheckResult check_truncated_moment(std::size_t n, std::size_t m, std::size_t trials,
                                        std::uint64_t seed, double epsilon,
                                        std::optional<std::vector<double>> fixed_u) {
  require(n >= 1 && m >= 1, "check_truncated_moment: bad sizes");
  require(epsilon > 0.0, "check_truncated_moment: epsilon must be positive");
  if (fixed_u) {
    require(fixed_u->size() == n, "check_truncated_moment: fixed u has wrong length");
    require(std::abs(norm2(*fixed_u) - 1.0) <= 1e-8, "check_truncated_moment: u must be unit");
  }
  const TruncatedMoments tm = truncated_moments();
  const auto stats = run_trials(trials, seed, [&](NormalSampler& rng) {
    const std::vector<double> u = fixed_u ? *fixed_u : unit_gaussian(rng, n);
    const SensingEnsemble e(n, m, rng.bits());
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double s = dot(e.vector(j), u);
      w[j] = std::abs(s) <= tm.threshold ? s * s / static_cast<double>(m) : 0.0;
    }
    SymMatrix dev = kernels::serial::weighted_outer_sum(e.view(), w);
    dev.axpy(-(tm.beta4 - tm.beta2), SymMatrix::outer(u));
    for (std::size_t i = 0; i < n; ++i) dev.add(i, i, -tm.beta2);
    return spectral_norm(dev) / epsilon;
  });
  auto r = summarize(LemmaId::kTruncatedMoment, {n, 0, m, trials, seed, epsilon, 0}, stats,
                     -std::numeric_limits<double>::infinity(), 1.0, Side::kUpper);
  r.extras["max_deviation"] = r.max_stat * epsilon;
  return r;
}

LemmaCheckResult check_chi2_tail(std::size_t N, std::size_t m1, std::size_t trials,
                                 std::uint64_t seed) {
  require(m1 < N, "check_chi2_tail: need m1 < N");
  require(trials >= 1, "check_chi2_tail: need at least one sample");
  const std::size_t df = N - m1;
  const double half = static_cast<double>(df) / 2.0;
  constexpr std::size_t kChunk = 10000;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;

  struct Partial {
    std::size_t lower = 0, upper = 0;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
  };
  std::vector<Partial> parts(chunks);
  const long long nc = static_cast<long long>(chunks);
#pragma omp parallel for schedule(dynamic)
  for (long long c = 0; c < nc; ++c) {
    NormalSampler rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    Partial& p = parts[static_cast<std::size_t>(c)];
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(trials, begin + kChunk);
    for (std::size_t t = begin; t < end; ++t) {
      double x = 0.0;
      for (std::size_t i = 0; i < df; ++i) {
        const double g = rng.normal();
        x += g * g;
      }
      if (x <= half) ++p.lower;
      if (x >= half) ++p.upper;
      p.sum += x;
      p.lo = std::min(p.lo, x);
      p.hi = std::max(p.hi, x);
    }
  }
  Partial tot;
  for (const auto& p : parts) {
    tot.lower += p.lower;
    tot.upper += p.upper;
    tot.sum += p.sum;
    tot.lo = std::min(tot.lo, p.lo);
    tot.hi = std::max(tot.hi, p.hi);
  }

  const double nt = static_cast<double>(trials);
  const double bound = std::exp(-0.09 * static_cast<double>(df));
  LemmaCheckResult r;
  r.lemma_id = LemmaId::kChi2Tail;
  r.params = {N, 0, m1, trials, seed, 0.0, df};
  r.trials = trials;
  r.violations = tot.lower;
  r.min_stat = tot.lo / static_cast<double>(df);
  r.max_stat = tot.hi / static_cast<double>(df);
  r.worst_ratio = (static_cast<double>(tot.lower) / nt) / bound;
  r.extras["freq_lower"] = static_cast<double>(tot.lower) / nt;
  r.extras["freq_upper"] = static_cast<double>(tot.upper) / nt;
  r.extras["bound"] = bound;
  r.extras["binomial_se"] = std::sqrt(bound * (1.0 - bound) / nt);
  r.extras["mean"] = tot.sum / nt;
  return r;
}

LemmaCheckResult check_E0_event(std::size_t n, std::size_t k, std::size_t m, std::size_t trials,
                                std::uint64_t seed) {
  require(n >= 2 && k >= 1 && k <= n && m >= 1, "check_E0_event: bad sizes");
  const double level = 10.0 * std::log(static_cast<double>(n));
  struct Trial {
    double worst = 0.0, s1 = 0.0, s2 = 0.0;
  };
  const auto per_trial = run_trials(trials, seed, [&](NormalSampler& rng) {
    // Only the G-coordinates of z_j enter <x, z_jG>.
    const std::vector<double> x = unit_gaussian(rng, k);
    std::vector<double> z(k);
    Trial tr;
    for (std::size_t j = 0; j < m; ++j) {
      rng.fill_normal(z);
      const double d = dot(x, z);
      const double v = d * d;
      tr.s1 += v;
      tr.s2 += v * v;
      tr.worst = std::max(tr.worst, v);
    }
    return tr;
  });
  std::vector<double> stats(trials);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    stats[t] = per_trial[t].worst / level;
    s1 += per_trial[t].s1;
    s2 += per_trial[t].s2;
  }
  auto r = summarize(LemmaId::kE0Event, {n, k, m, trials, seed, 0.0, 0}, stats,
                     -std::numeric_limits<double>::infinity(), 1.0, Side::kUpper);
  const double count = static_cast<double>(trials * m);
  const double mean = trials ? s1 / count : 0.0;
  const double nn = static_cast<double>(n);
  const double p_bound = 1.0 - static_cast<double>(m) / (nn * nn * nn * nn * nn);
  r.extras["chi2_mean"] = mean;
  r.extras["chi2_var"] = trials ? s2 / count - mean * mean : 0.0;
  r.extras["p_E0_empirical"] = trials ? 1.0 - r.violation_fraction() : 0.0;
  r.extras["p_E0_bound"] = p_bound;
  r.extras["binomial_se"] =
      trials ? std::sqrt(std::max(p_bound * (1.0 - p_bound), 0.0) / static_cast<double>(trials))
             : 0.0;
  r.extras["level"] = level;
  return r;
}

nlohmann::json lemma_to_json(const LemmaCheckResult& r) {
  nlohmann::json j;
  j["lemma_id"] = to_string(r.lemma_id);
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  j["violation_fraction"] = r.violation_fraction();
  j["worst_ratio"] = r.worst_ratio;
  j["min_stat"] = r.min_stat;
  j["max_stat"] = r.max_stat;
  j["params"] = {{"n", r.params.n},         {"k", r.params.k},
                 {"m", r.params.m},         {"trials", r.params.trials},
                 {"seed", r.params.seed},   {"epsilon", r.params.epsilon},
                 {"df", r.params.df}};
  j["extras"] = r.extras;
  return j;
}

std::string lemma_csv_header() {
  return "schema_version,timestamp,lemma_id,n,k,m,trials,seed,epsilon,df,violations,"
         "violation_fraction,worst_ratio,min_stat,max_stat,extras";
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string lemma_csv_row(const LemmaCheckResult& r, const std::string& timestamp) {
  std::ostringstream os;
  os << kLemmaCsvSchemaVersion << ',' << timestamp << ',' << to_string(r.lemma_id) << ','
     << r.params.n << ',' << r.params.k << ',' << r.params.m << ',' << r.params.trials << ','
     << r.params.seed << ',' << shortest(r.params.epsilon) << ',' << r.params.df << ','
     << r.violations << ',' << shortest(r.violation_fraction()) << ','
     << shortest(r.worst_ratio) << ',' << shortest(r.min_stat) << ',' << shortest(r.max_stat)
     << ',';
  bool first = true;
  for (const auto& [key, value] : r.extras) {
    if (!first) os << ';';
    os << key << '=' << shortest(value);
    first = false;
  }
  return os.str();
}

ConverseBound converse_bound(const SparseSignal& x, std::size_t n) {
  if (n < 2) throw InvalidArgument("converse_bound: n must be at least 2");
  if (x.dim() != n) throw DimensionMismatch("converse_bound: signal length differs from n");
  const double k = static_cast<double>(x.sparsity());
  const double l1sq = x.l1_norm() * x.l1_norm();
  const double ln = std::log(static_cast<double>(n));
  ConverseBound b;
  b.term_spectral = (k / 4.0 - 1.0) * (k / 4.0 - 1.0);
  const double excess = std::max(l1sq - k / 2.0, 0.0);
  b.term_l1 = excess * excess / (500.0 * ln * ln);
  b.m_lower = std::min(b.term_spectral, b.term_l1);
  return b;
}

nlohmann::json converse_to_json(const ConverseBound& b) {
  return {{"term_spectral", b.term_spectral}, {"term_l1", b.term_l1}, {"m_lower", b.m_lower}};
}

bool NonOptimalityReport::non_optimal_everywhere() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(),
                                         [](const auto& e) { return e.non_optimal; });
}

NonOptimalityReport empirical_nonoptimality(const SensingEnsemble& e, const SparseSignal& x,
                                            std::span<const double> lambdas,
                                            const SolverConfig& cfg) {
  if (x.dim() != e.dim()) throw DimensionMismatch("empirical_nonoptimality: signal length");
  if (lambdas.empty()) throw InvalidArgument("empirical_nonoptimality: empty lambda list");
  const auto b = measure(e, x);
  const auto xd = x.dense();
  const SymMatrix xx = SymMatrix::outer(xd);
  NonOptimalityReport rep;
  for (double lam : lambdas) {
    SolverConfig c = cfg;
    c.lambda = lam;
    const SolveResult res = solve_trace_l1(e, b, c);
    NonOptimalityEntry en;
    en.lambda = lam;
    en.objective_xx = objective(xx, lam);
    en.objective_hat = res.objective;
    en.gap = en.objective_xx - en.objective_hat;
    en.non_optimal = en.gap > 1e-5 * en.objective_xx;
    en.converged = res.converged;
    en.iterations = res.iterations;
    en.primal_residual = res.primal_residual;
    try {
      const auto rec = extract_signal(res.x_hat);
      en.rel_error = check_success(rec.x_hat, xd, 1e-3).rel_error;
    } catch (const Error&) {
      en.rel_error = 1.0;
    }
    rep.entries.push_back(en);
  }
  return rep;
}

double oracle_exhaustive_cost(std::size_t n, std::size_t m, std::size_t k_max) {
  double total = 0.0;
  double binom = 1.0;
  for (std::size_t t = 1; t <= std::min(k_max, n); ++t) {
    binom = binom * static_cast<double>(n - t + 1) / static_cast<double>(t);
    total += static_cast<double>(m) * binom * std::ldexp(1.0, static_cast<int>(m));
  }
  return total;
}

namespace {

// Visits every size-t subset of [0, n) in lexicographic order.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t t, Fn&& fn) {
  std::vector<std::size_t> idx(t);
  for (std::size_t i = 0; i < t; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    std::size_t i = t;
    while (i > 0 && idx[i - 1] == n - t + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < t; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Matrix select(const Matrix& a, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

// Greedy Gram-Schmidt selection of linearly independent rows.
std::vector<std::size_t> independent_rows(const Matrix& zt, double rel_tol) {
  const std::size_t m = zt.rows(), t = zt.cols();
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, norm2(zt.row(i)));
  std::vector<std::vector<double>> basis;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m && rows.size() < t; ++i) {
    std::vector<double> v(zt.row(i).begin(), zt.row(i).end());
    for (const auto& q : basis) {
      const double d = dot(v, q);
      for (std::size_t c = 0; c < t; ++c) v[c] -= d * q[c];
    }
    const double nv = norm2(v);
    if (nv > rel_tol * scale) {
      for (double& c : v) c /= nv;
      basis.push_back(std::move(v));
      rows.push_back(i);
    }
  }
  return rows;
}

// A unit null vector of Z_T, if Z_T has one.
std::optional<std::vector<double>> null_vector(const Matrix& zt, double rel_tol) {
  const std::size_t t = zt.cols();
  SymMatrix g(t);
  for (std::size_t a = 0; a < t; ++a)
    for (std::size_t b = a; b < t; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < zt.rows(); ++i) s += zt(i, a) * zt(i, b);
      g.set(a, b, s);
    }
  const Spectrum s = sym_eigen(g);
  const double top = std::max(s.values.front(), 0.0);
  if (s.values.back() > rel_tol * rel_tol * top && top > 0.0) return std::nullopt;
  return s.vectors.column(t - 1);
}

void canonical_sign(std::vector<double>& y) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (std::abs(y[i]) > std::abs(y[best])) best = i;
  if (y[best] < 0.0)
    for (double& v : y) v = -v;
}

double distance_mod_sign(std::span<const double> a, std::span<const double> b) {
  double dm = 0.0, dp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dm += (a[i] - b[i]) * (a[i] - b[i]);
    dp += (a[i] + b[i]) * (a[i] + b[i]);
  }
  return std::sqrt(std::min(dm, dp));
}

}  // namespace

OracleResult injectivity_oracle(const Matrix& vectors, const SparseSignal& x,
                                const OracleOptions& opts) {
  const std::size_t m = vectors.rows(), n = vectors.cols();
  if (x.dim() != n) throw DimensionMismatch("injectivity_oracle: signal length");
  if (opts.k_max < 1 || opts.k_max > n) throw InvalidArgument("injectivity_oracle: bad k_max");
  if (!(opts.tol > 0.0)) throw InvalidArgument("injectivity_oracle: tol must be positive");
  if (m == 0) throw InvalidArgument("injectivity_oracle: need at least one vector");
  constexpr double kRankTol = 1e-10;

  const auto xd = x.dense();
  std::vector<double> b(m), root(m);
  double bmax = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = dot(vectors.row(j), xd);
    b[j] = d * d;
    root[j] = std::abs(d);
    bmax = std::max(bmax, b[j]);
  }
  const double rhs_scale = std::max(1.0, norm2(root));
  const double b_scale = std::max(1.0, bmax);
  const double distinct = std::sqrt(opts.tol) * std::max(1.0, norm2(xd));

  const double exhaustive_cost = oracle_exhaustive_cost(n, m, opts.k_max);
  OracleResult res;
  res.mode_used = opts.mode;
  if (opts.mode == OracleMode::kAuto)
    res.mode_used =
        exhaustive_cost <= opts.budget ? OracleMode::kExhaustive : OracleMode::kReduced;
  if (res.mode_used == OracleMode::kExhaustive && exhaustive_cost > opts.budget)
    throw Infeasible("injectivity_oracle: exhaustive enumeration exceeds budget");
  if (res.mode_used == OracleMode::kReduced) {
    double cost = 0.0, binom = 1.0;
    for (std::size_t t = 1; t <= opts.k_max; ++t) {
      binom = binom * static_cast<double>(n - t + 1) / static_cast<double>(t);
      cost += static_cast<double>(m) * binom * std::ldexp(1.0, static_cast<int>(std::min(m, t)));
    }
    if (cost > opts.budget) throw Infeasible("injectivity_oracle: reduced enumeration exceeds budget");
  }

  std::vector<std::size_t> all_rows(m);
  for (std::size_t j = 0; j < m; ++j) all_rows[j] = j;

  auto record = [&](std::vector<double> y) {
    canonical_sign(y);
    bool seen = false;
    for (const auto& s : res.solutions)
      if (distance_mod_sign(s, y) <= distinct) seen = true;
    if (!seen) res.solutions.push_back(y);
    if (!res.counterexample && distance_mod_sign(y, xd) > distinct) res.counterexample = y;
  };

  for (std::size_t t = 1; t <= opts.k_max; ++t) {
    for_each_subset(n, t, [&](const std::vector<std::size_t>& cols) {
      const Matrix zt = select(vectors, all_rows, cols);
      const auto nullv = null_vector(zt, kRankTol);

      const std::vector<std::size_t> rows =
          res.mode_used == OracleMode::kExhaustive ? all_rows : independent_rows(zt, kRankTol);
      if (rows.empty()) return;  // Z_T = 0: only y = 0, which cannot match b != 0
      const Matrix zr = select(vectors, rows, cols);
      const ThinSvd svd = thin_svd(zr);
      const std::size_t r = rows.size();

      // Fix the sign of the first row with b > 0; flipping all signs maps y to -y.
      std::size_t pivot = r;
      for (std::size_t i = 0; i < r; ++i)
        if (root[rows[i]] > 0.0) {
          pivot = i;
          break;
        }
      const std::uint64_t patterns = std::uint64_t{1} << r;
      std::vector<double> rhs(r);
      for (std::uint64_t s = 0; s < patterns; ++s) {
        if (pivot < r && ((s >> pivot) & 1u)) continue;
        for (std::size_t i = 0; i < r; ++i)
          rhs[i] = ((s >> i) & 1u) ? -root[rows[i]] : root[rows[i]];
        ++res.systems_solved;
        const auto yt = lstsq_min_norm(svd, rhs, kRankTol);

        double resid = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
          const double d = dot(zr.row(i), yt) - rhs[i];
          resid += d * d;
        }
        if (std::sqrt(resid) > opts.tol * rhs_scale) continue;
        double mismatch = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double d = dot(zt.row(j), yt);
          mismatch = std::max(mismatch, std::abs(d * d - b[j]));
        }
        if (mismatch > opts.tol * b_scale) continue;

        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < t; ++i) y[cols[i]] = yt[i];
        record(y);
        if (nullv && !res.counterexample) {
          // A consistent affine family: shift along the null space.
          const double step = std::max(1.0, norm2(xd));
          std::vector<double> y2 = y;
          for (std::size_t i = 0; i < t; ++i) y2[cols[i]] += step * (*nullv)[i];
          if (distance_mod_sign(y2, xd) <= distinct)
            for (std::size_t i = 0; i < t; ++i) y2[cols[i]] += step * (*nullv)[i];
          canonical_sign(y2);
          res.counterexample = y2;
        }
      }
    });
  }
  res.unique = !res.counterexample.has_value();
  return res;
}

}  // namespace cpr
