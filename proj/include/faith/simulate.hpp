#pragma once

// Monte Carlo checks of the limit law and of the bootstrap procedures on
// small audit problems with a known population distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "faith/errors.hpp"
#include "faith/faith.hpp"
#include "faith/inference.hpp"
#include "faith/ingestion.hpp"
#include "faith/lp.hpp"
#include "faith/parallel.hpp"
#include "faith/pipeline.hpp"
#include "faith/random.hpp"
#include "faith/stats.hpp"
#include "json.hpp"

namespace faith::sim {

// Two points, l = (0, 1), unit symmetric cost: psi(f) = min(eps, f_1).
inline AuditProblem two_point(double epsilon) {
  AuditProblem p;
  p.loss = Eigen::Vector2d(0.0, 1.0);
  p.cost = Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}};
  p.forbidden = Eigen::Matrix2i::Zero();
  p.epsilon = epsilon;
  return p;
}

// Three points where moving z1 -> z2 costs 1 per unit and z3 -> z2 is free
// with gain 1/2: psi(f) = f_3 / 2 + min(eps, f_1). At f = (.3, .4, .3) and
// eps = .3 the budget binds exactly as z1 runs out, so the dual optimal face
// is a segment and the limit law is Z_3 / 2 + min(Z_1, 0).
inline AuditProblem kinked_three_point() {
  AuditProblem p;
  p.loss = Eigen::Vector3d(0.0, 1.0, 0.5);
  p.cost = Eigen::Matrix3d{{0.0, 1.0, 1.0}, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  p.forbidden = Eigen::Matrix3i::Zero();
  p.epsilon = 0.3;
  return p;
}

// Three points with a unique dual: z3 -> z2 is cheap (ratio 2.4) and is used
// up first, the rest of the budget goes to z1 -> z2 at ratio 1. Locally
// psi(f) = eps + 0.35 f_3, so psi(f*) = 0.34 at f* = (.3, .3, .4).
inline AuditProblem smooth_three_point() {
  AuditProblem p;
  p.loss = Eigen::Vector3d(0.0, 1.0, 0.4);
  p.cost = Eigen::Matrix3d{{0.0, 1.0, 4.0}, {1.0, 0.0, 0.25}, {4.0, 0.25, 0.0}};
  p.forbidden = Eigen::Matrix3i::Zero();
  p.epsilon = 0.2;
  return p;
}

struct Instance {
  std::string name;
  AuditProblem problem;
  std::vector<double> f_star;
};

/// Built-in instances: "two_point" (eps 0.5, f = (.5, .5)), "kinked" and
/// "smooth".
inline Instance named_instance(const std::string& name) {
  if (name == "two_point") return {name, two_point(0.5), {0.5, 0.5}};
  if (name == "kinked") return {name, kinked_three_point(), {0.3, 0.4, 0.3}};
  if (name == "smooth") return {name, smooth_three_point(), {0.3, 0.3, 0.4}};
  throw ConfigError("unknown instance '" + name + "' (expected two_point, kinked or smooth)");
}

struct Spec {
  Instance instance;
  long long n = 1000;
  long reps = 100;
  long asymptotic_reps = 10000;
  bool run_bootstrap = true;
  BootstrapConfig bootstrap;
  double alpha = 0.05;
  std::optional<double> delta;  // test boundary; psi(f*) when unset
  long bootstrap_ks_reps = 1;   // datasets whose bootstrap law is compared to the limit
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    instance.problem.validate();
    if (instance.f_star.size() != static_cast<std::size_t>(instance.problem.size())) {
      throw ConfigError("f_star does not match the instance size");
    }
    if (n < 2) throw ConfigError("n must be >= 2");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (asymptotic_reps < 1) throw ConfigError("asymptotic_reps must be >= 1");
    if (bootstrap_ks_reps < 0 || bootstrap_ks_reps > reps) throw ConfigError("bootstrap_ks_reps must be in [0, reps]");
    check_alpha(alpha);
    if (delta && !(std::isfinite(*delta) && *delta >= 0.0)) throw ConfigError("delta must be finite and >= 0");
    if (run_bootstrap) bootstrap.validate(n);
    if (threads < 0) throw ConfigError("threads must be >= 0");
  }
};

struct Summary {
  double psi_star = 0.0;
  bool dual_unique = false;
  double delta = 0.0;
  std::vector<double> sampling;    // sqrt(n) (psi(f_n) - psi(f*)), one per rep
  std::vector<double> asymptotic;  // directional derivative along N(0, Sigma(f*))
  double ks_sampling = 0.0;
  // Bootstrap results; empty when the bootstrap is off.
  std::optional<double> coverage;
  std::optional<double> rejection_rate;
  std::vector<double> bootstrap_ks;  // first `bootstrap_ks_reps` datasets
  std::vector<double> first_bootstrap;  // bootstrap draws of dataset 0
  long long rejections = 0;             // proposal rejections, numerical bootstrap
};

namespace detail {

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return rng::substream(seed ^ (stream * 0x9e3779b97f4a7c15ull), index)();
}

}  // namespace detail

/// Each rep draws counts ~ Multinomial(n, f*) on its own stream, so the
/// summary depends on the seed and not on the thread count.
inline Summary simulate(const Spec& spec) {
  spec.validate();
  const auto& p = spec.instance.problem;
  const auto& f_star = spec.instance.f_star;
  Summary out;
  out.psi_star = solve_audit_lp(p, f_star).value;
  out.dual_unique = is_dual_unique(p, f_star);
  out.delta = spec.delta.value_or(out.psi_star);
  out.asymptotic = sample_asymptotic(p, f_star, spec.asymptotic_reps, detail::derived_seed(spec.seed, 1, 0),
                                     spec.threads).values;

  const auto reps = static_cast<std::size_t>(spec.reps);
  const double root_n = std::sqrt(static_cast<double>(spec.n));
  out.sampling.assign(reps, 0.0);
  std::vector<char> covered(reps, 0), rejected(reps, 0);
  std::vector<long long> rejections(reps, 0);
  std::vector<std::vector<double>> kept(static_cast<std::size_t>(spec.bootstrap_ks_reps));
  parallel_for(reps, spec.threads, [&](std::size_t r) {
    auto gen = rng::substream(spec.seed, r);
    auto fn = EmpiricalDistribution::from_counts(rng::multinomial(gen, spec.n, f_star));
    const double psi_n = solve_audit_lp(p, fn.f).value;
    out.sampling[r] = root_n * faith::detail::value_change(psi_n, out.psi_star);
    if (!spec.run_bootstrap) return;
    BootstrapConfig cfg = spec.bootstrap;
    cfg.seed = detail::derived_seed(spec.seed, 2, r);
    cfg.threads = 1;
    auto dist = bootstrap(p, fn, cfg);
    auto ci = two_sided_ci(dist, spec.alpha);
    covered[r] = ci.lower <= out.psi_star && out.psi_star <= ci.upper;
    rejected[r] = delta_fairness_test(dist, out.delta, spec.alpha).reject;
    rejections[r] = dist.rejections;
    if (r < kept.size()) kept[r] = std::move(dist.S);
  });

  out.ks_sampling = stats::ks_distance(out.sampling, out.asymptotic);
  if (spec.run_bootstrap) {
    long long cov = 0, rej = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      cov += covered[r];
      rej += rejected[r];
      out.rejections += rejections[r];
    }
    out.coverage = static_cast<double>(cov) / static_cast<double>(reps);
    out.rejection_rate = static_cast<double>(rej) / static_cast<double>(reps);
    for (const auto& s : kept) out.bootstrap_ks.push_back(stats::ks_distance(s, out.asymptotic));
    if (!kept.empty()) out.first_bootstrap = kept.front();
  }
  return out;
}

/// Simulation spec document:
///   {"instance": "smooth" | {"loss", "cost", "forbidden"?, "epsilon", "f_star"},
///    "n", "reps", "asymptotic_reps", "bootstrap": {"method", "B", "m", "eps_n"} | false,
///    "alpha", "delta", "bootstrap_ks_reps", "seed", "threads"}
inline Spec parse_spec(const nlohmann::json& j) {
  using faith::detail::check_keys;
  using faith::detail::get_as;
  check_keys(j,
             {"instance", "n", "reps", "asymptotic_reps", "bootstrap", "alpha", "delta", "bootstrap_ks_reps", "seed",
              "threads"},
             "simulation spec");
  Spec s;
  if (!j.contains("instance")) throw ConfigError("simulation spec needs an instance");
  const auto& ji = j["instance"];
  if (ji.is_string()) {
    s.instance = named_instance(ji.get<std::string>());
  } else {
    check_keys(ji, {"name", "loss", "cost", "forbidden", "epsilon", "f_star"}, "instance");
    s.instance.name = ji.value("name", "custom");
    auto loss = get_as<std::vector<double>>(ji, "loss", "instance");
    auto cost = get_as<std::vector<std::vector<double>>>(ji, "cost", "instance");
    const auto K = static_cast<Eigen::Index>(loss.size());
    AuditProblem& p = s.instance.problem;
    p.loss = Eigen::Map<Eigen::VectorXd>(loss.data(), K);
    p.cost.resize(K, K);
    p.forbidden = Eigen::MatrixXi::Zero(K, K);
    if (static_cast<Eigen::Index>(cost.size()) != K) throw ConfigError("instance.cost must be K x K");
    for (Eigen::Index i = 0; i < K; ++i) {
      if (static_cast<Eigen::Index>(cost[i].size()) != K) throw ConfigError("instance.cost must be K x K");
      for (Eigen::Index k = 0; k < K; ++k) p.cost(i, k) = cost[i][k];
    }
    if (ji.contains("forbidden")) {
      auto d = get_as<std::vector<std::vector<int>>>(ji, "forbidden", "instance");
      if (static_cast<Eigen::Index>(d.size()) != K) throw ConfigError("instance.forbidden must be K x K");
      for (Eigen::Index i = 0; i < K; ++i) {
        if (static_cast<Eigen::Index>(d[i].size()) != K) throw ConfigError("instance.forbidden must be K x K");
        for (Eigen::Index k = 0; k < K; ++k) p.forbidden(i, k) = d[i][k];
      }
    }
    p.epsilon = get_as<double>(ji, "epsilon", "instance");
    s.instance.f_star = get_as<std::vector<double>>(ji, "f_star", "instance");
  }
  if (j.contains("n")) s.n = get_as<long long>(j, "n", "simulation spec");
  if (j.contains("reps")) s.reps = get_as<long>(j, "reps", "simulation spec");
  if (j.contains("asymptotic_reps")) s.asymptotic_reps = get_as<long>(j, "asymptotic_reps", "simulation spec");
  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    if (b.is_boolean()) {
      s.run_bootstrap = b.get<bool>();
    } else {
      check_keys(b, {"method", "B", "m", "eps_n"}, "bootstrap");
      if (b.contains("method")) s.bootstrap.method = faith::detail::parse_method(get_as<std::string>(b, "method", "bootstrap"));
      if (b.contains("B")) s.bootstrap.B = get_as<long>(b, "B", "bootstrap");
      if (b.contains("m")) s.bootstrap.m = get_as<long long>(b, "m", "bootstrap");
      if (b.contains("eps_n")) s.bootstrap.eps_n = get_as<double>(b, "eps_n", "bootstrap");
    }
  }
  if (j.contains("alpha")) s.alpha = get_as<double>(j, "alpha", "simulation spec");
  if (j.contains("delta")) s.delta = get_as<double>(j, "delta", "simulation spec");
  if (j.contains("bootstrap_ks_reps")) s.bootstrap_ks_reps = get_as<long>(j, "bootstrap_ks_reps", "simulation spec");
  if (j.contains("seed")) s.seed = get_as<std::uint64_t>(j, "seed", "simulation spec");
  if (j.contains("threads")) s.threads = get_as<int>(j, "threads", "simulation spec");
  if (!s.run_bootstrap) s.bootstrap_ks_reps = 0;
  return s;
}

inline nlohmann::ordered_json summary_json(const Summary& s, const Spec& spec) {
  using json = nlohmann::ordered_json;
  json j;
  j["spec_version"] = kReportVersion;
  j["instance"] = spec.instance.name;
  j["n"] = spec.n;
  j["reps"] = spec.reps;
  j["seed"] = spec.seed;
  j["psi_star"] = s.psi_star;
  j["dual_unique"] = s.dual_unique;
  j["ks_sampling_vs_asymptotic"] = s.ks_sampling;
  if (spec.run_bootstrap) {
    j["bootstrap"] = {{"method", method_name(spec.bootstrap.method)},
                      {"B", spec.bootstrap.B},
                      {"m", spec.bootstrap.method == BootstrapMethod::m_out_of_n
                                ? json(spec.bootstrap.resolved_m(spec.n))
                                : json(nullptr)},
                      {"eps_n", spec.bootstrap.method == BootstrapMethod::numerical_derivative
                                    ? json(spec.bootstrap.resolved_eps(spec.n))
                                    : json(nullptr)}};
    j["alpha"] = spec.alpha;
    j["delta"] = s.delta;
    j["coverage"] = *s.coverage;
    j["rejection_rate"] = *s.rejection_rate;
    j["bootstrap_ks"] = s.bootstrap_ks;
    j["proposal_rejections"] = s.rejections;
  } else {
    j["bootstrap"] = nullptr;
  }
  return j;
}

/// Raw draws for external plotting: one column per sample, blank where a
/// sample is shorter.
inline std::string samples_csv(const Summary& s) {
  std::ostringstream os;
  os.precision(17);
  os << "sampling,asymptotic,bootstrap\n";
  const std::size_t rows = std::max({s.sampling.size(), s.asymptotic.size(), s.first_bootstrap.size()});
  auto cell = [&os](const std::vector<double>& v, std::size_t i) {
    if (i < v.size()) os << v[i];
  };
  for (std::size_t i = 0; i < rows; ++i) {
    cell(s.sampling, i);
    os << ",";
    cell(s.asymptotic, i);
    os << ",";
    cell(s.first_bootstrap, i);
    os << "\n";
  }
  return os.str();
}

}  // namespace faith::sim
