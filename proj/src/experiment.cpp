#include "cpr/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include "cpr/certificate.hpp"
#include "cpr/error.hpp"
#include "cpr/random.hpp"

namespace cpr {

Instance make_instance(std::size_t n, std::size_t k, std::size_t m, SignalKind kind,
                       std::uint64_t seed) {
  Instance inst{make_signal(n, k, kind, derive_seed(seed, 0)),
                SensingEnsemble(n, m, derive_seed(seed, 1)), {}};
  inst.b = measure(inst.e, inst.x);
  return inst;
}

std::vector<double> dedupe_lambdas(const std::vector<double>& lambdas,
                                   std::vector<double>* duplicates) {
  if (lambdas.empty()) throw InvalidArgument("lambda list is empty");
  std::vector<double> out;
  for (double v : lambdas) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidArgument("lambda values must be finite and nonnegative");
    if (std::find(out.begin(), out.end(), v) != out.end()) {
      if (duplicates) duplicates->push_back(v);
      continue;
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> default_lambda_sweep(std::size_t n, std::size_t m) {
  if (n < 2) throw InvalidArgument("default lambda sweep needs n >= 2");
  return {1.0, 2.0, 4.0, 8.0,
          std::sqrt(static_cast<double>(m) / std::log(static_cast<double>(n)))};
}

std::vector<ExperimentRecord> run_recovery(const Instance& inst, const std::vector<double>& lambdas,
                                           const SolverConfig& cfg, double success_tol,
                                           std::uint64_t seed) {
  if (!(success_tol > 0.0)) throw InvalidArgument("success tolerance must be positive");
  const auto xd = inst.x.dense();
  std::vector<ExperimentRecord> out;
  for (double lam : lambdas) {
    SolverConfig c = cfg;
    c.lambda = lam;
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult res = solve_trace_l1(inst.e, inst.b, c);
    ExperimentRecord r;
    r.n = inst.e.dim();
    r.k = inst.x.sparsity();
    r.m = inst.e.size();
    r.lambda = lam;
    r.seed = seed;
    r.iterations = res.iterations;
    r.objective = res.objective;
    r.converged = res.converged;
    try {
      const RecoveredSignal rec = extract_signal(res.x_hat);
      const SuccessCheck chk = check_success(rec.x_hat, xd, success_tol);
      r.rel_error = chk.rel_error;
      r.success = chk.success;
      r.rank_gap = rec.rank_gap;
    } catch (const NumericalFailure&) {
      // X_hat = 0: nothing to extract, x_hat = 0 has error 1.
      r.rel_error = 1.0;
      r.success = 1.0 <= success_tol;
    }
    r.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    out.push_back(r);
  }
  return out;
}

namespace {

double parse_real(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

// Shortest representation that round-trips.
std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<double> LambdaRule::lambdas(std::size_t n, std::size_t m) const {
  switch (kind) {
    case Kind::kRemark1: return {balanced_lambda(static_cast<double>(m), n, c0)};
    case Kind::kFixed:
    case Kind::kList: return values;
  }
  return values;
}

std::string LambdaRule::to_string() const {
  switch (kind) {
    case Kind::kRemark1: return "remark1:" + format_real(c0);
    case Kind::kFixed: return "fixed:" + format_real(values.at(0));
    case Kind::kList: {
      std::string s = "list:";
      for (std::size_t i = 0; i < values.size(); ++i)
        s += (i ? "," : "") + format_real(values[i]);
      return s;
    }
  }
  return "";
}

LambdaRule parse_lambda_rule(const std::string& s) {
  LambdaRule r;
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "remark1") {
    r.kind = LambdaRule::Kind::kRemark1;
    if (!tail.empty()) r.c0 = parse_real(tail);
    if (!(r.c0 > 0.0)) throw InvalidArgument("remark1 rule needs C0 > 0");
    return r;
  }
  if (head == "fixed") {
    r.kind = LambdaRule::Kind::kFixed;
    r.values = {parse_real(tail)};
  } else if (head == "list") {
    r.kind = LambdaRule::Kind::kList;
    std::stringstream ss(tail);
    std::string item;
    std::vector<double> raw;
    while (std::getline(ss, item, ',')) raw.push_back(parse_real(item));
    r.values = raw;
  } else {
    throw InvalidArgument("unknown lambda rule '" + s + "' (remark1[:C0] | fixed:v | list:v1,v2)");
  }
  r.values = dedupe_lambdas(r.values);
  return r;
}

std::uint64_t cell_trial_seed(std::uint64_t seed, std::size_t k, std::size_t m, std::size_t t) {
  return derive_seed(derive_seed(derive_seed(seed, k), m), t);
}

PhaseDiagram run_phase_diagram(const PhaseDiagramConfig& cfg) {
  if (cfg.k_grid.empty() || cfg.m_grid.empty()) throw InvalidArgument("phase diagram: empty grid");
  if (cfg.trials == 0) throw InvalidArgument("phase diagram: trials must be positive");
  if (cfg.n < 2) throw InvalidArgument("phase diagram: n must be at least 2");
  for (std::size_t k : cfg.k_grid)
    if (k < 1 || k > cfg.n) throw InvalidArgument("phase diagram: k must satisfy 1 <= k <= n");
  for (std::size_t m : cfg.m_grid)
    if (m < 1) throw InvalidArgument("phase diagram: m must be positive");
  if (!(cfg.success_tol > 0.0)) throw InvalidArgument("phase diagram: success tol must be positive");
  cfg.solver.validate();

  double work = 0.0;
  for (std::size_t m : cfg.m_grid)
    work += static_cast<double>(cfg.rule.lambdas(cfg.n, m).size()) *
            static_cast<double>(cfg.k_grid.size() * cfg.trials) *
            static_cast<double>(cfg.solver.max_iter);
  if (work > cfg.budget)
    throw Infeasible("phase diagram: work estimate " + format_real(work) +
                     " iterations exceeds budget " + format_real(cfg.budget));

  const std::size_t nk = cfg.k_grid.size(), nm = cfg.m_grid.size(), nt = cfg.trials;
  std::vector<char> ok(nk * nm * nt, 0);
  const long long tasks = static_cast<long long>(ok.size());
  std::string failure_msg;
  ExitCode failure_code = ExitCode::kSuccess;
#pragma omp parallel for schedule(dynamic)
  for (long long task = 0; task < tasks; ++task) {
    const std::size_t id = static_cast<std::size_t>(task);
    const std::size_t ki = id / (nm * nt), mi = (id / nt) % nm, t = id % nt;
    const std::size_t k = cfg.k_grid[ki], m = cfg.m_grid[mi];
    try {
      Instance inst = make_instance(cfg.n, k, m, cfg.kind, cell_trial_seed(cfg.seed, k, m, t));
      inst.e.factorize_gram();
      const auto recs = run_recovery(inst, cfg.rule.lambdas(cfg.n, m), cfg.solver, cfg.success_tol);
      ok[id] = std::any_of(recs.begin(), recs.end(), [](const auto& r) { return r.success; });
    } catch (const Error& ex) {
#pragma omp critical(cpr_phase_failure)
      if (failure_code == ExitCode::kSuccess) {
        failure_code = ex.code();
        failure_msg = ex.what();
      }
    }
  }
  if (failure_code == ExitCode::kInfeasible) throw Infeasible(failure_msg);
  if (failure_code == ExitCode::kNumericalFailure) throw NumericalFailure(failure_msg);
  if (failure_code != ExitCode::kSuccess) throw InvalidArgument(failure_msg);

  PhaseDiagram pd;
  pd.k_grid = cfg.k_grid;
  pd.m_grid = cfg.m_grid;
  pd.trials_per_cell = nt;
  pd.success_rate.assign(nk, std::vector<double>(nm, 0.0));
  for (std::size_t ki = 0; ki < nk; ++ki)
    for (std::size_t mi = 0; mi < nm; ++mi) {
      std::size_t s = 0;
      for (std::size_t t = 0; t < nt; ++t) s += ok[(ki * nm + mi) * nt + t];
      pd.success_rate[ki][mi] = static_cast<double>(s) / static_cast<double>(nt);
    }
  return pd;
}

std::string phase_diagram_csv(const PhaseDiagram& pd) {
  std::ostringstream os;
  os << "schema_version,k";
  for (std::size_t m : pd.m_grid) os << ",m=" << m;
  os << '\n';
  for (std::size_t ki = 0; ki < pd.k_grid.size(); ++ki) {
    os << kCsvSchemaVersion << ',' << pd.k_grid[ki];
    for (double r : pd.success_rate[ki]) os << ',' << format_real(r);
    os << '\n';
  }
  return os.str();
}

nlohmann::json phase_diagram_json(const PhaseDiagram& pd) {
  return {{"schema_version", kCsvSchemaVersion},
          {"k_grid", pd.k_grid},
          {"m_grid", pd.m_grid},
          {"trials_per_cell", pd.trials_per_cell},
          {"success_rate", pd.success_rate}};
}

std::string records_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream os;
  os << "schema_version,n,k,m,lambda,seed,success,rel_error,iterations,objective,wall_time_ms,"
        "converged,rank_gap\n";
  for (const auto& r : records)
    os << kCsvSchemaVersion << ',' << r.n << ',' << r.k << ',' << r.m << ','
       << format_real(r.lambda) << ',' << r.seed << ',' << (r.success ? 1 : 0) << ','
       << format_real(r.rel_error) << ',' << r.iterations << ',' << format_real(r.objective)
       << ',' << r.wall_time_ms << ',' << (r.converged ? 1 : 0) << ',' << format_real(r.rank_gap)
       << '\n';
  return os.str();
}

nlohmann::json records_json(const std::vector<ExperimentRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records)
    arr.push_back({{"n", r.n},
                   {"k", r.k},
                   {"m", r.m},
                   {"lambda", r.lambda},
                   {"seed", r.seed},
                   {"success", r.success},
                   {"rel_error", r.rel_error},
                   {"iterations", r.iterations},
                   {"objective", r.objective},
                   {"wall_time_ms", r.wall_time_ms},
                   {"converged", r.converged},
                   {"rank_gap", r.rank_gap}});
  return arr;
}

LemmaSuiteConfig lemma_suite_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("lemma suite config must be a JSON object");
  LemmaSuiteConfig c;
  struct Field {
    const char* key;
    std::size_t* size;
  };
  const Field sizes[] = {
      {"sandwich_n", &c.sandwich_n}, {"sandwich_k", &c.sandwich_k},
      {"sandwich_m", &c.sandwich_m}, {"sandwich_trials", &c.sandwich_trials},
      {"lowrank_n", &c.lowrank_n},   {"lowrank_k", &c.lowrank_k},
      {"lowrank_m", &c.lowrank_m},   {"lowrank_trials", &c.lowrank_trials},
      {"l1_n", &c.l1_n},             {"l1_m", &c.l1_m},
      {"l1_trials", &c.l1_trials},   {"moment_n", &c.moment_n},
      {"moment_m", &c.moment_m},     {"moment_trials", &c.moment_trials},
      {"chi2_N", &c.chi2_N},         {"chi2_m1", &c.chi2_m1},
      {"chi2_samples", &c.chi2_samples}, {"e0_n", &c.e0_n},
      {"e0_k", &c.e0_k},             {"e0_m", &c.e0_m},
      {"e0_trials", &c.e0_trials},
  };
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "moment_epsilon") {
        c.moment_epsilon = value.get<double>();
      } else {
        const auto it = std::find_if(std::begin(sizes), std::end(sizes),
                                     [&](const Field& f) { return key == f.key; });
        if (it == std::end(sizes)) throw InvalidArgument("unknown lemma suite key '" + key + "'");
        *it->size = value.get<std::size_t>();
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("lemma suite config: ") + ex.what());
  }
  return c;
}

std::vector<LemmaCheckResult> run_lemma_suite(const LemmaSuiteConfig& c) {
  auto seed = [&](LemmaId id) { return derive_seed(c.seed, static_cast<std::uint64_t>(id)); };
  std::vector<LemmaCheckResult> out;
  out.push_back(check_l1_trace_sandwich(c.sandwich_n, c.sandwich_k, c.sandwich_m,
                                        c.sandwich_trials, seed(LemmaId::kL1TraceSandwich)));
  out.push_back(check_lowrank_lower(c.lowrank_n, c.lowrank_k, c.lowrank_m, c.lowrank_trials,
                                    seed(LemmaId::kLowrankLower)));
  out.push_back(check_l1_upper(c.l1_n, c.l1_m, c.l1_trials, seed(LemmaId::kL1Upper)));
  out.push_back(check_truncated_moment(c.moment_n, c.moment_m, c.moment_trials,
                                       seed(LemmaId::kTruncatedMoment), c.moment_epsilon));
  out.push_back(check_chi2_tail(c.chi2_N, c.chi2_m1, c.chi2_samples, seed(LemmaId::kChi2Tail)));
  out.push_back(check_E0_event(c.e0_n, c.e0_k, c.e0_m, c.e0_trials, seed(LemmaId::kE0Event)));
  return out;
}

std::string lemma_suite_csv(const std::vector<LemmaCheckResult>& results,
                            const std::string& timestamp) {
  std::string s = lemma_csv_header() + "\n";
  for (const auto& r : results) s += lemma_csv_row(r, timestamp) + "\n";
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cpr
