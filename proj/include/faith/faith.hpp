#pragma once

// The audit statistic, its limiting distribution and the cost-perturbation
// bound.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "faith/errors.hpp"
#include "faith/lp.hpp"
#include "faith/parallel.hpp"
#include "faith/random.hpp"
#include "faith/sample_space.hpp"

namespace faith {

inline double faith_statistic(const AuditProblem& problem, const EmpiricalDistribution& fn) {
  return solve_audit_lp(problem, fn.f).value;
}

/// Covariance of a single multinomial draw with cell probabilities p.
struct MultinomialCovariance {
  Eigen::MatrixXd sigma;
};

inline MultinomialCovariance multinomial_covariance(const std::vector<double>& p) {
  const auto K = static_cast<Eigen::Index>(p.size());
  Eigen::Map<const Eigen::VectorXd> v(p.data(), K);
  MultinomialCovariance out;
  out.sigma = -v * v.transpose();
  out.sigma.diagonal() += v;
  // Make rows sum to zero exactly; off-diagonal rounding otherwise leaks in.
  for (Eigen::Index i = 0; i < K; ++i) {
    out.sigma(i, i) = 0.0;
    out.sigma(i, i) = -out.sigma.row(i).sum();
  }
  return out;
}

struct AsymptoticSample {
  std::vector<double> values;
};

/// Draws Z ~ N(0, Sigma(f)) and evaluates the directional derivative of
/// psi at f along each draw.
inline AsymptoticSample sample_asymptotic(const AuditProblem& problem, const std::vector<double>& f, long reps,
                                          std::uint64_t seed, int threads = 1) {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  const auto at_f = solve_audit_lp(problem, f);
  const rng::GaussianSampler gauss(multinomial_covariance(f).sigma);
  AsymptoticSample out;
  out.values.assign(static_cast<std::size_t>(reps), 0.0);
  parallel_for(out.values.size(), threads, [&](std::size_t r) {
    auto gen = rng::substream(seed, r);
    Eigen::VectorXd z = gauss(gen);
    std::vector<double> h(z.data(), z.data() + z.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (f[k] <= 0.0) h[k] = 0.0;
    }
    out.values[r] = optimize_over_dual_face(problem, f, h, at_f.dual_optimum);
  });
  return out;
}

struct RobustnessCheck {
  double gap = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// |psi_A(f) - psi_B(f)| against L eta D^2 / sqrt(eps). The constants are
/// the caller's: Lipschitz constant of the loss, the relative metric
/// perturbation and the diameter of the feature space.
inline RobustnessCheck robustness_gap(const AuditProblem& a, const AuditProblem& b, const std::vector<double>& f,
                                      double lipschitz, double eta, double diameter) {
  if (!(a.epsilon > 0.0)) throw ConfigError("robustness bound needs epsilon > 0");
  if (a.epsilon != b.epsilon || a.loss != b.loss || a.forbidden != b.forbidden) {
    throw ConfigError("problems must share loss, indicator and epsilon");
  }
  if (lipschitz < 0.0 || eta < 0.0 || diameter < 0.0) throw ConfigError("bound constants must be >= 0");
  RobustnessCheck out;
  out.gap = std::abs(solve_audit_lp(a, f).value - solve_audit_lp(b, f).value);
  out.bound = lipschitz * eta * diameter * diameter / std::sqrt(a.epsilon);
  out.holds = out.gap <= out.bound;
  return out;
}

}  // namespace faith
