#pragma once

// Bootstrap approximations of the law of sqrt(n) (psi(f_n) - psi(f*)),
// confidence intervals built from them and the delta-fairness test.
//
// Plain resampling of n from n is inconsistent when the dual optimal face
// is not a singleton; the two consistent schemes are resampling m << n
// points and perturbing f_n along a Gaussian direction with a shrinking
// step. Both produce draws on the sqrt(n) scale, so intervals are
// psi(f_n) - c / sqrt(n) for bootstrap quantiles c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "faith/errors.hpp"
#include "faith/faith.hpp"
#include "faith/lp.hpp"
#include "faith/parallel.hpp"
#include "faith/random.hpp"
#include "faith/sample_space.hpp"

namespace faith {

enum class BootstrapMethod { m_out_of_n, numerical_derivative };

inline const char* method_name(BootstrapMethod m) {
  return m == BootstrapMethod::m_out_of_n ? "m_out_of_n" : "numerical_derivative";
}

struct BootstrapConfig {
  BootstrapMethod method = BootstrapMethod::m_out_of_n;
  long B = 1000;
  long long m = 0;     // 0: ceil(2 sqrt(n)), capped at n - 1
  double eps_n = 0.0;  // 0: n^(-1/4)
  std::uint64_t seed = 0;
  int threads = 1;

  long long resolved_m(long long n) const {
    if (m > 0) return m;
    long long d = static_cast<long long>(std::ceil(2.0 * std::sqrt(static_cast<double>(n))));
    return std::min(d, n - 1);
  }

  double resolved_eps(long long n) const { return eps_n > 0.0 ? eps_n : std::pow(static_cast<double>(n), -0.25); }

  void validate(long long n) const {
    if (B < 1) throw ConfigError("bootstrap B must be >= 1");
    if (method == BootstrapMethod::m_out_of_n) {
      if (n < 2) throw ConfigError("m-out-of-n bootstrap needs n >= 2");
      long long mm = resolved_m(n);
      if (mm < 1 || mm >= n) throw ConfigError("bootstrap m must satisfy 1 <= m < n");
    } else if (!(std::isfinite(eps_n) && eps_n >= 0.0)) {
      throw ConfigError("bootstrap eps_n must be positive, or 0 for the default");
    }
  }
};

struct BootstrapDistribution {
  std::vector<double> S;
  double scale = 1.0;  // sqrt(n): a quantile c maps to psi(f_n) - c / scale
  BootstrapMethod method = BootstrapMethod::m_out_of_n;
  long long m = 0;
  double eps_n = 0.0;
  long long rejections = 0;
  double psi_n = 0.0;
  long long n = 0;
};

namespace detail {

// LP values agree only to rounding; a difference at that level is a tie.
inline double value_change(double value, double base) { return snap(value - base, std::max(value, base)); }

template <class Draw>
std::vector<double> run_iterations(long B, int threads, Draw&& draw) {
  std::vector<double> S(static_cast<std::size_t>(B), 0.0);
  parallel_for(S.size(), threads, [&](std::size_t b) {
    try {
      S[b] = draw(b);
    } catch (const SolverError& e) {
      throw SolverError("bootstrap iteration " + std::to_string(b) + ": " + e.what(), e.trace());
    }
  });
  return S;
}

inline BootstrapDistribution resample(const AuditProblem& problem, const EmpiricalDistribution& fn, long long m,
                                      long B, std::uint64_t seed, int threads) {
  BootstrapDistribution out;
  out.method = BootstrapMethod::m_out_of_n;
  out.m = m;
  out.n = fn.n;
  out.scale = std::sqrt(static_cast<double>(fn.n));
  out.psi_n = solve_audit_lp(problem, fn.f).value;
  const double root_m = std::sqrt(static_cast<double>(m));
  out.S = run_iterations(B, threads, [&](std::size_t b) {
    auto gen = rng::substream(seed, b);
    auto y = rng::multinomial(gen, m, fn.f);
    std::vector<double> fstar(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) fstar[k] = static_cast<double>(y[k]) / static_cast<double>(m);
    return root_m * value_change(solve_audit_lp(problem, fstar).value, out.psi_n);
  });
  return out;
}

}  // namespace detail

/// Draws Y* ~ Multinomial(m; f_n) B times and records
/// sqrt(m) (psi(Y*/m) - psi(f_n)).
inline BootstrapDistribution bootstrap_m_out_of_n(const AuditProblem& problem, const EmpiricalDistribution& fn,
                                                  const BootstrapConfig& cfg) {
  if (cfg.method != BootstrapMethod::m_out_of_n) throw ConfigError("config is not for the m-out-of-n bootstrap");
  cfg.validate(fn.n);
  return detail::resample(problem, fn, cfg.resolved_m(fn.n), cfg.B, cfg.seed, cfg.threads);
}

/// Perturbs f_n by eps_n Z with Z ~ N(0, Sigma(f_n)), redrawing until
/// f_n + eps_n Z is nonnegative, and records (psi(f_n + eps_n Z) - psi(f_n)) / eps_n.
/// Z sums to zero, so the perturbed vector stays on the simplex.
inline BootstrapDistribution bootstrap_numerical(const AuditProblem& problem, const EmpiricalDistribution& fn,
                                                 const BootstrapConfig& cfg) {
  if (cfg.method != BootstrapMethod::numerical_derivative) {
    throw ConfigError("config is not for the numerical-derivative bootstrap");
  }
  cfg.validate(fn.n);
  constexpr long kProbeWindow = 1000;

  BootstrapDistribution out;
  out.method = BootstrapMethod::numerical_derivative;
  out.eps_n = cfg.resolved_eps(fn.n);
  out.n = fn.n;
  out.scale = std::sqrt(static_cast<double>(fn.n));
  out.psi_n = solve_audit_lp(problem, fn.f).value;
  const rng::GaussianSampler gauss(multinomial_covariance(fn.f).sigma);
  const double eps = out.eps_n;
  const std::size_t K = fn.f.size();
  std::vector<long long> rejected(static_cast<std::size_t>(cfg.B), 0);

  out.S = detail::run_iterations(cfg.B, cfg.threads, [&](std::size_t b) {
    auto gen = rng::substream(cfg.seed, b);
    std::vector<double> moved(K);
    for (long attempt = 0;; ++attempt) {
      if (attempt == kProbeWindow) {
        throw ConfigError("numerical bootstrap acceptance below 1e-3; eps_n = " + std::to_string(eps) +
                          " is too large for this f_n");
      }
      Eigen::VectorXd z = gauss(gen);
      bool ok = true;
      for (std::size_t k = 0; k < K; ++k) {
        moved[k] = fn.f[k] > 0.0 ? fn.f[k] + eps * z[static_cast<Eigen::Index>(k)] : 0.0;
        if (moved[k] < 0.0) ok = false;
      }
      if (ok) break;
      ++rejected[b];
    }
    return detail::value_change(solve_audit_lp(problem, moved).value, out.psi_n) / eps;
  });
  for (long long r : rejected) out.rejections += r;
  return out;
}

/// Efron's n-out-of-n bootstrap. Inconsistent when the dual face is not a
/// singleton; kept only to demonstrate that failure. Never use for verdicts.
inline BootstrapDistribution bootstrap_efron_unsafe(const AuditProblem& problem, const EmpiricalDistribution& fn,
                                                    long B, std::uint64_t seed, int threads = 1) {
  if (B < 1) throw ConfigError("bootstrap B must be >= 1");
  return detail::resample(problem, fn, fn.n, B, seed, threads);
}

inline BootstrapDistribution bootstrap(const AuditProblem& problem, const EmpiricalDistribution& fn,
                                       const BootstrapConfig& cfg) {
  return cfg.method == BootstrapMethod::m_out_of_n ? bootstrap_m_out_of_n(problem, fn, cfg)
                                                   : bootstrap_numerical(problem, fn, cfg);
}

/// inf{c : P(S <= c) >= q} for the empirical law of S, i.e. the ceil(qB)-th
/// order statistic (the minimum for q = 0).
inline double quantile(const BootstrapDistribution& dist, double q) {
  if (dist.S.empty()) throw ConfigError("quantile of an empty bootstrap distribution");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::vector<double> s = dist.S;
  const auto B = static_cast<double>(s.size());
  auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * B - 1e-9)));
  rank = std::min(rank, s.size());
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(rank - 1), s.end());
  return s[rank - 1];
}

enum class Sided { one, two };

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double level = 0.95;
  Sided sided = Sided::two;
  bool lower_clamped = false;  // raw lower endpoint was negative and was set to 0
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

inline ConfidenceInterval two_sided_ci(const BootstrapDistribution& dist, double alpha) {
  check_alpha(alpha);
  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.sided = Sided::two;
  ci.lower = dist.psi_n - quantile(dist, 1.0 - alpha / 2.0) / dist.scale;
  ci.upper = dist.psi_n - quantile(dist, alpha / 2.0) / dist.scale;
  if (ci.lower < 0.0) {
    ci.lower = 0.0;
    ci.lower_clamped = true;
  }
  ci.upper = std::max(ci.upper, ci.lower);
  return ci;
}

inline ConfidenceInterval one_sided_ci(const BootstrapDistribution& dist, double alpha) {
  check_alpha(alpha);
  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.sided = Sided::one;
  ci.lower = dist.psi_n - quantile(dist, 1.0 - alpha) / dist.scale;
  if (ci.lower < 0.0) {
    ci.lower = 0.0;
    ci.lower_clamped = true;
  }
  return ci;
}

inline ConfidenceInterval two_sided_ci(const AuditProblem& problem, const EmpiricalDistribution& fn,
                                       const BootstrapConfig& cfg, double alpha) {
  check_alpha(alpha);
  return two_sided_ci(bootstrap(problem, fn, cfg), alpha);
}

/// H0: psi(f*) <= delta against H1: psi(f*) > delta.
struct FairnessVerdict {
  double delta = 0.0;
  double alpha = 0.05;
  bool reject = false;
  double ci_lower = 0.0;
  double faith = 0.0;
};

inline FairnessVerdict delta_fairness_test(const BootstrapDistribution& dist, double delta, double alpha) {
  if (!(std::isfinite(delta) && delta >= 0.0)) throw ConfigError("delta must be finite and >= 0");
  auto ci = one_sided_ci(dist, alpha);
  FairnessVerdict v;
  v.delta = delta;
  v.alpha = alpha;
  v.ci_lower = ci.lower;
  v.faith = dist.psi_n;
  v.reject = delta < ci.lower;
  return v;
}

inline FairnessVerdict delta_fairness_test(const AuditProblem& problem, const EmpiricalDistribution& fn,
                                           const BootstrapConfig& cfg, double delta, double alpha) {
  check_alpha(alpha);
  return delta_fairness_test(bootstrap(problem, fn, cfg), delta, alpha);
}

}  // namespace faith
