#include "cpr/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpr/error.hpp"

namespace cpr {

TruncatedMoments truncated_moments(double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("truncated_moments: threshold must be positive");
  const double t = threshold;
  const double p = std::erf(t / std::numbers::sqrt2);
  const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  TruncatedMoments tm;
  tm.threshold = t;
  tm.beta2 = p - 2.0 * t * phi;
  tm.beta4 = 3.0 * p - 2.0 * phi * (t * t * t + 3.0 * t);
  return tm;
}

std::size_t golfing_group_count(std::size_t n) {
  if (n == 0) throw InvalidArgument("golfing_group_count: n must be positive");
  return static_cast<std::size_t>(std::floor(2.0 * std::log(static_cast<double>(n)))) + 3;
}

std::vector<std::pair<std::size_t, std::size_t>> partition_groups(std::size_t m, std::size_t l) {
  if (l == 0) throw InvalidArgument("partition_groups: need at least one group");
  if (m < l)
    throw Infeasible("cannot split " + std::to_string(m) + " measurements into " +
                     std::to_string(l) + " nonempty groups");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(l);
  const std::size_t base = m / l, extra = m % l;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

namespace {

void check_direction(const SubspaceContext& ctx, std::span<const double> u, const char* name) {
  if (u.size() != ctx.dim()) throw DimensionMismatch(std::string("f_operator: ") + name);
  if (std::abs(norm2(u) - 1.0) > 1e-8)
    throw InvalidArgument(std::string("f_operator: ") + name + " must have unit norm");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] != 0.0 && !ctx.in_support(i))
      throw InvalidArgument(std::string("f_operator: ") + name + " must be supported on G");
}

double truncated_square(double s, double t) { return std::abs(s) <= t ? s * s : 0.0; }

}  // namespace

std::vector<double> f_weights(VectorsView group, const SubspaceContext& ctx, double lam1,
                              double lam2, std::span<const double> u1,
                              std::span<const double> u2, const TruncatedMoments& tm) {
  if (group.dim != ctx.dim()) throw DimensionMismatch("f_operator: group dim");
  if (group.count == 0) throw InvalidArgument("f_operator: empty group");
  check_direction(ctx, u1, "u1");
  const bool second = !u2.empty();
  if (second) {
    check_direction(ctx, u2, "u2");
    if (std::abs(dot(u1, u2)) > 1e-8) throw InvalidArgument("f_operator: u1, u2 not orthogonal");
  } else if (lam2 != 0.0) {
    throw InvalidArgument("f_operator: u2 required when lam2 != 0");
  }

  const auto& g = ctx.support();
  const double scale = 1.0 / (static_cast<double>(group.count) * (tm.beta4 - tm.beta2));
  std::vector<double> w(group.count);
  for (std::size_t j = 0; j < group.count; ++j) {
    const auto z = group.row(j);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i : g) {
      s1 += z[i] * u1[i];
      if (second) s2 += z[i] * u2[i];
    }
    double c = lam1 * (truncated_square(s1, tm.threshold) - tm.beta2);
    if (second) c += lam2 * (truncated_square(s2, tm.threshold) - tm.beta2);
    w[j] = c * scale;
  }
  return w;
}

SymMatrix f_operator(VectorsView group, const SubspaceContext& ctx, double lam1, double lam2,
                     std::span<const double> u1, std::span<const double> u2,
                     const TruncatedMoments& tm, ExecPolicy policy) {
  const auto w = f_weights(group, ctx, lam1, lam2, u1, u2, tm);
  return kernels::weighted_outer_sum(policy, group, w);
}

namespace {

struct RankTwo {
  double lam1 = 0.0, lam2 = 0.0;
  std::vector<double> u1, u2;  // u2 empty when the iterate is rank one
};

// Eigenpairs of an iterate in T cap Omega, computed on its G-block.
RankTwo rank_two_split(const SubspaceContext& ctx, const SymMatrix& x) {
  const auto& g = ctx.support();
  const Spectrum s = sym_eigen(x.principal_block(g));
  const std::size_t k = g.size();
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(s.values[a]) > std::abs(s.values[b]);
  });
  const double fro = frobenius_norm(x);
  for (std::size_t r = 2; r < k; ++r)
    if (std::abs(s.values[order[r]]) > 1e-8 * fro)
      throw NumericalFailure("golfing: iterate has rank above 2", s.values[order[r]]);

  auto embed = [&](std::size_t col) {
    std::vector<double> u(ctx.dim(), 0.0);
    for (std::size_t i = 0; i < k; ++i) u[g[i]] = s.vectors(i, col);
    return u;
  };
  RankTwo out;
  out.lam1 = s.values[order[0]];
  out.u1 = embed(order[0]);
  if (k >= 2) {
    out.lam2 = s.values[order[1]];
    out.u2 = embed(order[1]);
  }
  return out;
}

}  // namespace

Certificate golfing_construct(const SensingEnsemble& e, const SubspaceContext& ctx, double lambda,
                              ExecPolicy policy) {
  if (e.dim() != ctx.dim()) throw DimensionMismatch("golfing_construct: ensemble vs context");
  const std::size_t l = golfing_group_count(e.dim());
  Certificate cert;
  cert.lambda = lambda;
  cert.groups = partition_groups(e.size(), l);
  cert.weights.assign(e.size(), 0.0);

  const TruncatedMoments tm = truncated_moments();
  const VectorsView all = e.view();
  SymMatrix x = build_X0(ctx, lambda);
  cert.residual_norms.push_back(frobenius_norm(x));
  for (const auto& [begin, end] : cert.groups) {
    const VectorsView group = all.rows(begin, end);
    std::vector<double> w(end - begin, 0.0);
    if (cert.residual_norms.back() > 0.0) {
      const RankTwo r = rank_two_split(ctx, x);
      w = f_weights(group, ctx, r.lam1, r.lam2, r.u1, r.u2, tm);
      x -= project_T_cap_Omega(ctx, kernels::weighted_outer_sum(policy, group, w));
    }
    std::copy(w.begin(), w.end(), cert.weights.begin() + static_cast<std::ptrdiff_t>(begin));
    cert.residual_norms.push_back(frobenius_norm(x));
  }
  cert.y = apply_A_adjoint(e, cert.weights, policy);
  return cert;
}

CertificateReport verify_certificate(const Certificate& cert, const SubspaceContext& ctx,
                                     std::size_t m, double c, double c1) {
  if (cert.y.dim() != ctx.dim()) throw DimensionMismatch("verify_certificate: Y dim");
  if (m == 0) throw InvalidArgument("verify_certificate: m must be positive");
  if (!(c > 0.0) || !(c1 > 0.0)) throw InvalidArgument("verify_certificate: constants must be positive");

  const std::size_t n = ctx.dim();
  const auto& g = ctx.support();
  const SymMatrix x0 = build_X0(ctx, cert.lambda);

  CertificateReport r;
  r.n = n;
  r.k = g.size();
  r.m = m;
  r.groups = cert.groups.size();
  r.lambda = cert.lambda;
  r.c = c;
  r.c1 = c1;
  r.residual_norms = cert.residual_norms;
  r.min_group_size = m;
  for (const auto& [b, e] : cert.groups) r.min_group_size = std::min(r.min_group_size, e - b);
  r.group_size_below_c1k = static_cast<double>(r.min_group_size) < c1 * static_cast<double>(r.k);
  r.x0_fro = frobenius_norm(x0);
  if (!cert.residual_norms.empty()) {
    r.final_residual = cert.residual_norms.back();
    if (cert.residual_norms.size() > 1 && cert.residual_norms[0] > 0.0)
      r.first_contraction = cert.residual_norms[1] / cert.residual_norms[0];
  }

  const SymMatrix y_omega = project_Omega(ctx, cert.y);
  const SymMatrix y_t = project_T(ctx, y_omega);
  r.norm_TcapOmega_gap = frobenius_norm(y_t - x0);
  r.norm_Tperp_Omega = spectral_norm((y_omega - y_t).principal_block(g));
  r.norm_Omega_perp_inf = entrywise_linf(project_Omega_perp(ctx, cert.y));

  const double nn = static_cast<double>(n);
  r.thresholds[0] = r.x0_fro / (6.0 * nn * nn);
  r.thresholds[1] = r.x0_fro / 5.0;
  r.thresholds[2] = c * std::sqrt(std::log(nn)) / std::sqrt(static_cast<double>(m)) * r.x0_fro;
  r.passed[0] = r.norm_TcapOmega_gap <= r.thresholds[0];
  r.passed[1] = r.norm_Tperp_Omega <= r.thresholds[1];
  r.passed[2] = r.norm_Omega_perp_inf <= r.thresholds[2];
  return r;
}

nlohmann::json report_to_json(const CertificateReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["k"] = r.k;
  j["m"] = r.m;
  j["groups"] = r.groups;
  j["min_group_size"] = r.min_group_size;
  j["lambda"] = r.lambda;
  j["C"] = r.c;
  j["C1"] = r.c1;
  j["group_size_below_C1k"] = r.group_size_below_c1k;
  j["ensemble_seed"] = r.ensemble_seed;
  j["x0_fro"] = r.x0_fro;
  j["norm_TcapOmega_gap"] = r.norm_TcapOmega_gap;
  j["norm_Tperp_Omega"] = r.norm_Tperp_Omega;
  j["norm_Omega_perp_inf"] = r.norm_Omega_perp_inf;
  j["thresholds"] = {r.thresholds[0], r.thresholds[1], r.thresholds[2]};
  j["passed"] = {r.passed[0], r.passed[1], r.passed[2]};
  j["final_residual"] = r.final_residual;
  j["first_contraction"] = r.first_contraction;
  j["residual_norms"] = r.residual_norms;
  return j;
}

CertificateReport report_from_json(const nlohmann::json& j) {
  CertificateReport r;
  try {
    r.n = j.at("n").get<std::size_t>();
    r.k = j.at("k").get<std::size_t>();
    r.m = j.at("m").get<std::size_t>();
    r.groups = j.at("groups").get<std::size_t>();
    r.min_group_size = j.at("min_group_size").get<std::size_t>();
    r.lambda = j.at("lambda").get<double>();
    r.c = j.at("C").get<double>();
    r.c1 = j.at("C1").get<double>();
    r.group_size_below_c1k = j.at("group_size_below_C1k").get<bool>();
    r.ensemble_seed = j.at("ensemble_seed").get<std::uint64_t>();
    r.x0_fro = j.at("x0_fro").get<double>();
    r.norm_TcapOmega_gap = j.at("norm_TcapOmega_gap").get<double>();
    r.norm_Tperp_Omega = j.at("norm_Tperp_Omega").get<double>();
    r.norm_Omega_perp_inf = j.at("norm_Omega_perp_inf").get<double>();
    const auto& t = j.at("thresholds");
    const auto& p = j.at("passed");
    if (t.size() != 3 || p.size() != 3)
      throw InvalidArgument("certificate report: thresholds/passed must have 3 entries");
    for (int i = 0; i < 3; ++i) {
      r.thresholds[i] = t.at(i).get<double>();
      r.passed[i] = p.at(i).get<bool>();
    }
    r.final_residual = j.at("final_residual").get<double>();
    r.first_contraction = j.at("first_contraction").get<double>();
    r.residual_norms = j.at("residual_norms").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("certificate report: ") + ex.what());
  }
  return r;
}

LambdaWindow lambda_window(const SubspaceContext& ctx, std::size_t n, double m, double c0) {
  if (n < 2) throw InvalidArgument("lambda_window: n must be at least 2");
  if (!(c0 > 0.0)) throw InvalidArgument("lambda_window: C0 must be positive");
  if (!(m >= 0.0)) throw InvalidArgument("lambda_window: m must be nonnegative");
  LambdaWindow w;
  const double nn = static_cast<double>(n);
  w.lambda_min = std::sqrt(static_cast<double>(ctx.support().size())) * ctx.l1_norm() + 1.0;
  w.lambda_max = nn * nn / 4.0;
  w.c0 = c0;
  w.log_n = std::log(nn);
  w.m = m;
  w.lambda_max_for_m = std::sqrt(m / (c0 * w.log_n));
  w.empty = w.lambda_min >= w.lambda_max;
  return w;
}

double balanced_lambda(double m, std::size_t n, double c0) {
  if (n < 2 || !(c0 > 0.0) || !(m >= 0.0)) throw InvalidArgument("balanced_lambda: bad arguments");
  return std::sqrt(m / (4.0 * c0 * std::log(static_cast<double>(n))));
}

}  // namespace cpr
