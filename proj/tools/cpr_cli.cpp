// Command-line driver: gen | recover | certify | verify-lemmas | phase-diagram | bound.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpr/certificate.hpp"
#include "cpr/error.hpp"
#include "cpr/experiment.hpp"
#include "cpr/kernels.hpp"
#include "cpr/measurement.hpp"
#include "cpr/solver.hpp"
#include "cpr/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string out = ".";
  int threads = 0;
  bool json_out = false;
  bool csv_out = false;
};

struct Inputs {
  std::string dir;
  std::string signal, ensemble, measurements;
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw cpr::InvalidArgument("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw cpr::InvalidArgument("malformed JSON in " + p.string() + ": " + ex.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw cpr::InvalidArgument("cannot write " + p.string());
  out << text;
  if (!out) throw cpr::InvalidArgument("write failed for " + p.string());
}

fs::path resolve(const Inputs& in, const std::string& explicit_path, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(in.dir.empty() ? "." : in.dir) / name;
}

cpr::SparseSignal load_signal(const Inputs& in) {
  return cpr::signal_from_json(read_json(resolve(in, in.signal, "signal.json")));
}

cpr::SensingEnsemble load_ensemble(const Inputs& in) {
  return cpr::ensemble_from_json(read_json(resolve(in, in.ensemble, "ensemble.json")));
}

std::vector<double> load_measurements(const Inputs& in) {
  return cpr::measurements_from_json(read_json(resolve(in, in.measurements, "measurements.json")));
}

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--input", in.dir, "Directory holding signal.json, ensemble.json, measurements.json");
  cmd->add_option("--signal", in.signal, "Signal JSON (overrides --input)");
  cmd->add_option("--ensemble", in.ensemble, "Ensemble JSON (overrides --input)");
  cmd->add_option("--measurements", in.measurements, "Measurements JSON (overrides --input)");
}

void add_solver_flags(CLI::App* cmd, cpr::SolverConfig& cfg) {
  cmd->add_option("--rho", cfg.rho, "Splitting penalty")->capture_default_str();
  cmd->add_option("--tol-primal", cfg.tol_primal, "Primal residual tolerance")->capture_default_str();
  cmd->add_option("--tol-dual", cfg.tol_dual, "Dual residual tolerance")->capture_default_str();
  cmd->add_option("--max-iter", cfg.max_iter, "Iteration cap")->capture_default_str();
  cmd->add_option("--over-relaxation", cfg.over_relaxation, "Relaxation factor in [1, 1.9]")
      ->capture_default_str();
}

void check_consistent(const cpr::SparseSignal& x, const cpr::SensingEnsemble& e,
                      const std::vector<double>& b) {
  if (x.dim() != e.dim())
    throw cpr::DimensionMismatch("signal has n=" + std::to_string(x.dim()) + " but ensemble n=" +
                                 std::to_string(e.dim()));
  if (b.size() != e.size())
    throw cpr::DimensionMismatch("measurements have length " + std::to_string(b.size()) +
                                 " but ensemble m=" + std::to_string(e.size()));
}

int cmd_gen(const Common& c, std::size_t n, std::size_t k, std::size_t m, const std::string& kind) {
  const auto inst = cpr::make_instance(n, k, m, cpr::parse_signal_kind(kind), c.seed);
  const fs::path out(c.out);
  write_text(out / "signal.json", cpr::signal_to_json(inst.x).dump(2) + "\n");
  write_text(out / "ensemble.json", cpr::ensemble_to_json(inst.e).dump(2) + "\n");
  write_text(out / "measurements.json", cpr::measurements_to_json(inst.b).dump(2) + "\n");
  std::cout << json{{"n", n},
                    {"k", k},
                    {"m", m},
                    {"signal_kind", cpr::to_string(cpr::parse_signal_kind(kind))},
                    {"seed", c.seed},
                    {"l1_norm", inst.x.l1_norm()},
                    {"l2_norm", inst.x.l2_norm()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_recover(const Common& c, const Inputs& in, std::vector<double> lambdas,
                cpr::SolverConfig cfg, double success_tol) {
  const auto x = load_signal(in);
  auto e = load_ensemble(in);
  const auto b = load_measurements(in);
  check_consistent(x, e, b);
  if (lambdas.empty()) lambdas = cpr::default_lambda_sweep(e.dim(), e.size());
  std::vector<double> dups;
  lambdas = cpr::dedupe_lambdas(lambdas, &dups);
  for (double d : dups) std::cerr << "warning: duplicate lambda " << d << " dropped\n";
  cfg.validate();
  e.factorize_gram(cfg.policy);

  const cpr::Instance inst{x, e, b};
  const auto recs = cpr::run_recovery(inst, lambdas, cfg, success_tol, e.seed());
  const fs::path out(c.out);
  if (c.json_out) {
    const std::string text = cpr::records_json(recs).dump(2) + "\n";
    write_text(out / "records.json", text);
    std::cout << text;
  } else {
    const std::string text = cpr::records_csv(recs);
    write_text(out / "records.csv", text);
    std::cout << text;
  }
  for (const auto& r : recs)
    if (!r.converged)
      std::cerr << "warning: lambda " << r.lambda << " stopped at the iteration cap ("
                << r.iterations << ")\n";
  return 0;
}

int cmd_certify(const Common& c, const Inputs& in, double cc, double c1,
                std::optional<double> lambda) {
  const auto x = load_signal(in);
  const auto e = load_ensemble(in);
  if (x.dim() != e.dim()) throw cpr::DimensionMismatch("signal and ensemble dimensions differ");
  const cpr::SubspaceContext ctx(x.is_unit_norm(1e-12) ? x : x.normalized());
  const double lam =
      lambda ? *lambda : cpr::lambda_window(ctx, e.dim(), static_cast<double>(e.size()), 1.0)
                                 .lambda_min +
                             1.0;
  const auto cert = cpr::golfing_construct(e, ctx, lam);
  auto report = cpr::verify_certificate(cert, ctx, e.size(), cc, c1);
  report.ensemble_seed = e.seed();
  if (report.group_size_below_c1k)
    std::cerr << "warning: smallest group has " << report.min_group_size
              << " vectors, below C1*k = " << c1 * static_cast<double>(report.k) << "\n";
  const std::string text = cpr::report_to_json(report).dump(2) + "\n";
  write_text(fs::path(c.out) / "certificate.json", text);
  std::cout << text;
  return 0;
}

int cmd_verify_lemmas(const Common& c, const std::string& config, const std::string& timestamp,
                      bool seed_given) {
  cpr::LemmaSuiteConfig cfg;
  if (!config.empty()) cfg = cpr::lemma_suite_from_json(read_json(config));
  if (seed_given) cfg.seed = c.seed;
  const auto results = cpr::run_lemma_suite(cfg);
  const fs::path out(c.out);
  const std::string ts = timestamp.empty() ? cpr::utc_timestamp() : timestamp;
  if (c.json_out) {
    auto arr = json::array();
    for (const auto& r : results) arr.push_back(cpr::lemma_to_json(r));
    const std::string text = arr.dump(2) + "\n";
    write_text(out / "lemmas.json", text);
    std::cout << text;
  } else {
    const std::string text = cpr::lemma_suite_csv(results, ts);
    write_text(out / "lemmas.csv", text);
    std::cout << text;
  }
  return 0;
}

int cmd_phase_diagram(const Common& c, cpr::PhaseDiagramConfig cfg, const std::string& rule,
                      const std::string& kind) {
  cfg.rule = cpr::parse_lambda_rule(rule);
  cfg.kind = cpr::parse_signal_kind(kind);
  cfg.seed = c.seed;
  const auto pd = cpr::run_phase_diagram(cfg);
  const fs::path out(c.out);
  if (c.json_out) {
    json j = cpr::phase_diagram_json(pd);
    j["n"] = cfg.n;
    j["lambda_rule"] = cfg.rule.to_string();
    j["seed"] = cfg.seed;
    const std::string text = j.dump(2) + "\n";
    write_text(out / "phase_diagram.json", text);
    std::cout << text;
  } else {
    const std::string text = cpr::phase_diagram_csv(pd);
    write_text(out / "phase_diagram.csv", text);
    std::cout << text;
  }
  return 0;
}

int cmd_bound(const Common& c, const std::string& signal_path, std::size_t n, std::size_t k,
              const std::string& kind, bool out_given) {
  std::optional<cpr::SparseSignal> x;
  if (!signal_path.empty()) {
    x = cpr::signal_from_json(read_json(signal_path));
    if (n == 0) n = x->dim();
  } else {
    if (k == 0 || n == 0) throw cpr::InvalidArgument("bound: give --signal or both --k and --n");
    x = cpr::make_signal(n, k, cpr::parse_signal_kind(kind), cpr::derive_seed(c.seed, 0));
  }
  const auto b = cpr::converse_bound(*x, n);
  json j = cpr::converse_to_json(b);
  j["n"] = n;
  j["k"] = x->sparsity();
  j["l1_norm"] = x->l1_norm();
  const std::string text = j.dump(2) + "\n";
  if (out_given) write_text(fs::path(c.out) / "bound.json", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse phase retrieval via trace + l1 minimization"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "Base seed")->capture_default_str();
  auto* out_opt = app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--threads", common.threads, "OpenMP threads (0 = runtime default)");
  auto* json_flag = app.add_flag("--json", common.json_out, "Emit JSON");
  auto* csv_flag = app.add_flag("--csv", common.csv_out, "Emit CSV (default for tables)");
  json_flag->excludes(csv_flag);
  app.fallthrough();

  auto* gen = app.add_subcommand("gen", "Generate a signal, ensemble and measurements");
  std::size_t gn = 0, gk = 0, gm = 0;
  std::string gkind = "flat";
  gen->add_option("--n", gn, "Signal length")->required();
  gen->add_option("--k", gk, "Sparsity")->required();
  gen->add_option("--m", gm, "Number of measurements")->required();
  gen->add_option("--signal-kind", gkind, "flat | gaussian-normalized")->capture_default_str();

  auto* rec = app.add_subcommand("recover", "Solve the program for each lambda and score recovery");
  Inputs rin;
  add_inputs(rec, rin);
  std::vector<double> rlambdas;
  cpr::SolverConfig rcfg;
  double rtol = 1e-3;
  rec->add_option("--lambdas", rlambdas, "Lambda list (default 1,2,4,8,sqrt(m/ln n))")
      ->delimiter(',');
  rec->add_option("--success-tol", rtol, "Relative error tolerance")->capture_default_str();
  add_solver_flags(rec, rcfg);

  auto* cer = app.add_subcommand("certify", "Build and check the golfing dual certificate");
  Inputs cin;
  add_inputs(cer, cin);
  double cc = 2.0, cc1 = 20.0;
  std::optional<double> clambda;
  cer->add_option("--C", cc, "Constant in the sup-norm bound")->capture_default_str();
  cer->add_option("--C1", cc1, "Group size per unit sparsity")->capture_default_str();
  cer->add_option("--lambda", clambda, "Trace weight (default sqrt(k)||x||_1 + 2)");

  auto* ver = app.add_subcommand("verify-lemmas", "Run the Monte Carlo lemma suite");
  std::string vconfig, vtimestamp;
  ver->add_option("--config", vconfig, "Suite configuration JSON");
  ver->add_option("--timestamp", vtimestamp, "Fixed timestamp for the CSV (default: now)");

  auto* pha = app.add_subcommand("phase-diagram", "Success rate over a (k, m) grid");
  cpr::PhaseDiagramConfig pcfg;
  std::string prule = "remark1", pkind = "flat";
  pha->add_option("--n", pcfg.n, "Signal length")->required();
  pha->add_option("--k-grid", pcfg.k_grid, "Sparsity values")->delimiter(',')->required();
  pha->add_option("--m-grid", pcfg.m_grid, "Measurement counts")->delimiter(',')->required();
  pha->add_option("--trials", pcfg.trials, "Trials per cell")->required();
  pha->add_option("--lambda-rule", prule, "remark1[:C0] | fixed:v | list:v1,v2,...")
      ->capture_default_str();
  pha->add_option("--signal-kind", pkind, "flat | gaussian-normalized")->capture_default_str();
  pha->add_option("--success-tol", pcfg.success_tol, "Relative error tolerance")
      ->capture_default_str();
  pha->add_option("--budget", pcfg.budget, "Cap on cells x trials x lambdas x max_iter")
      ->capture_default_str();
  add_solver_flags(pha, pcfg.solver);

  auto* bnd = app.add_subcommand("bound", "Evaluate the converse measurement bound");
  std::string bsignal, bkind = "flat";
  std::size_t bn = 0, bk = 0;
  bnd->add_option("--signal", bsignal, "Signal JSON");
  bnd->add_option("--n", bn, "Ambient dimension");
  bnd->add_option("--k", bk, "Sparsity (with --signal-kind, when no --signal)");
  bnd->add_option("--signal-kind", bkind, "flat | gaussian-normalized")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(cpr::ExitCode::kInvalidArgument);
  }

  try {
    cpr::set_thread_count(common.threads);
    const bool seed_given = app.count("--seed") > 0;
    if (*gen) return cmd_gen(common, gn, gk, gm, gkind);
    if (*rec) return cmd_recover(common, rin, rlambdas, rcfg, rtol);
    if (*cer) return cmd_certify(common, cin, cc, cc1, clambda);
    if (*ver) return cmd_verify_lemmas(common, vconfig, vtimestamp, seed_given);
    if (*pha) return cmd_phase_diagram(common, pcfg, prule, pkind);
    if (*bnd) return cmd_bound(common, bsignal, bn, bk, bkind, out_opt->count() > 0);
  } catch (const cpr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(cpr::ExitCode::kInvalidArgument);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(cpr::ExitCode::kNumericalFailure);
  }
  return 0;
}
