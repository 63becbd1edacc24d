#pragma once

// The auditor's LP over a finite sample space:
//
//   psi(f) = max_{Pi >= 0}  l^T (Pi^T 1 - f)
//            s.t.  <C, Pi> <= eps,  Pi_ij = 0 where D_ij = 1,  Pi 1 = f
//
// Forbidden entries are eliminated before solving. The dual certificate is
// returned in "price" form: nu, mu >= 0 and lambda with
//
//   lambda_i + nu C_ij + mu D_ij >= l_j           for all i, j
//   psi(f) = eps nu + f^T lambda - l^T f
//
// The max-form Lagrangian multipliers (nu C + mu D + lambda 1^T <= -1 l^T)
// are the negatives of these, see DualCertificate::max_form().

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "faith/errors.hpp"
#include "faith/sample_space.hpp"
#include "faith/simplex.hpp"

namespace faith {

struct AuditProblem {
  Eigen::VectorXd loss;
  Eigen::MatrixXd cost;
  Eigen::MatrixXi forbidden;
  double epsilon = 0.0;

  int size() const noexcept { return static_cast<int>(loss.size()); }

  static AuditProblem from(const std::vector<double>& loss, const CostStructure& cs, double epsilon) {
    AuditProblem p;
    p.loss = Eigen::Map<const Eigen::VectorXd>(loss.data(), static_cast<Eigen::Index>(loss.size()));
    p.cost = cs.cost;
    p.forbidden = cs.forbidden;
    p.epsilon = epsilon;
    p.validate();
    return p;
  }

  void validate() const {
    const auto K = loss.size();
    if (K < 1) throw ConfigError("audit problem has no points");
    if (cost.rows() != K || cost.cols() != K || forbidden.rows() != K || forbidden.cols() != K) {
      throw ConfigError("loss, cost and indicator dimensions disagree");
    }
    if (!std::isfinite(epsilon) || epsilon < 0.0) throw ConfigError("epsilon must be finite and >= 0");
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!std::isfinite(loss[k]) || loss[k] < 0.0) throw ConfigError("losses must be finite and >= 0");
    }
    for (Eigen::Index i = 0; i < K; ++i) {
      for (Eigen::Index j = 0; j < K; ++j) {
        if (!std::isfinite(cost(i, j)) || cost(i, j) < 0.0) {
          throw ConfigError("costs must be finite and >= 0");
        }
        if (forbidden(i, j) != 0 && forbidden(i, j) != 1) throw ConfigError("indicator must be 0/1");
      }
    }
  }
};

struct TransportPlan {
  Eigen::MatrixXd pi;
};

struct DualCertificate {
  double nu = 0.0;
  double mu = 0.0;
  Eigen::VectorXd lambda;

  double objective(double epsilon, const Eigen::VectorXd& f) const { return epsilon * nu + f.dot(lambda); }

  /// Multipliers of the max-form Lagrangian, which satisfy
  /// nu C + mu D + lambda 1^T <= -1 l^T entrywise.
  DualCertificate max_form() const { return {-nu, -mu, -lambda}; }
};

struct LpSolution {
  double value = 0.0;
  TransportPlan plan;
  DualCertificate dual;
  bool budget_active = false;
  double transport_cost = 0.0;
  long iterations = 0;

  /// eps nu + f^T lambda, i.e. psi(f) + l^T f.
  double dual_optimum = 0.0;
};

namespace detail {

inline Eigen::VectorXd checked_marginal(const AuditProblem& problem, const std::vector<double>& f) {
  const int K = problem.size();
  if (static_cast<int>(f.size()) != K) throw ConfigError("marginal has wrong dimension");
  Eigen::VectorXd out(K);
  double sum = 0.0;
  for (int k = 0; k < K; ++k) {
    if (!std::isfinite(f[k]) || f[k] < -1e-10) throw ConfigError("marginal has a negative entry");
    out[k] = std::max(0.0, f[k]);
    sum += f[k];
  }
  if (std::abs(sum - 1.0) > 1e-10) throw ConfigError("marginal does not sum to one");
  return out;
}

struct PairIndex {
  std::vector<int> row;
  std::vector<int> col;
};

// One column per allowed move (i, j), row-major; budget row is row K.
inline void add_transport_columns(const AuditProblem& p, lp::StandardForm& lp, PairIndex& pairs) {
  const int K = p.size();
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (p.forbidden(i, j) != 0) continue;
      lp::SparseColumn col;
      col.entries.emplace_back(i, 1.0);
      if (p.cost(i, j) != 0.0) col.entries.emplace_back(K, p.cost(i, j));
      lp.columns.push_back(std::move(col));
      lp.cost.push_back(-p.loss[j]);
      pairs.row.push_back(i);
      pairs.col.push_back(j);
    }
  }
}

inline double snap(double v, double scale) { return std::abs(v) <= 1e-10 * std::max(1.0, scale) ? 0.0 : v; }

}  // namespace detail

/// Solves the audit LP at marginal `f` and returns a vertex plan with its
/// dual certificate.
inline LpSolution solve_audit_lp(const AuditProblem& problem, const std::vector<double>& f_in) {
  const int K = problem.size();
  const Eigen::VectorXd f = detail::checked_marginal(problem, f_in);

  lp::StandardForm lp;
  lp.rows = K + 1;
  detail::PairIndex pairs;
  detail::add_transport_columns(problem, lp, pairs);
  const int slack = static_cast<int>(lp.columns.size());
  lp.columns.push_back({{{K, 1.0}}});
  lp.cost.push_back(0.0);
  lp.rhs.assign(f.data(), f.data() + K);
  lp.rhs.push_back(problem.epsilon);

  // Staying put is free and feasible: diagonal moves plus the budget slack.
  std::vector<int> start(K + 1, -1);
  for (int c = 0; c < slack; ++c) {
    if (pairs.row[c] == pairs.col[c] && problem.cost(pairs.row[c], pairs.col[c]) == 0.0) {
      start[pairs.row[c]] = c;
    }
  }
  start[K] = slack;
  if (std::find(start.begin(), start.end(), -1) != start.end()) start.clear();

  lp::RevisedSimplex engine;
  auto res = engine.solve(lp, start);
  if (res.status == lp::Status::infeasible) {
    throw SolverError("infeasible marginals: some row has no permitted move",
                      {engine.trace().begin(), engine.trace().end()});
  }
  if (res.status != lp::Status::optimal) {
    throw SolverError("audit LP did not reach optimality", {engine.trace().begin(), engine.trace().end()});
  }

  LpSolution sol;
  sol.iterations = res.iterations;
  sol.plan.pi = Eigen::MatrixXd::Zero(K, K);
  for (int c = 0; c < slack; ++c) sol.plan.pi(pairs.row[c], pairs.col[c]) = res.x[c];

  Eigen::VectorXd received = sol.plan.pi.colwise().sum().transpose();
  sol.value = std::max(0.0, problem.loss.dot(received - f));
  sol.transport_cost = (problem.cost.array() * sol.plan.pi.array()).sum();
  sol.budget_active = std::abs(problem.epsilon - sol.transport_cost) <= 1e-8 * std::max(1.0, problem.epsilon);

  sol.dual.lambda.resize(K);
  for (int i = 0; i < K; ++i) sol.dual.lambda[i] = -res.duals[i];
  sol.dual.nu = std::max(0.0, -res.duals[K]);
  double mu = 0.0;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (problem.forbidden(i, j) == 0) continue;
      mu = std::max(mu, problem.loss[j] - sol.dual.lambda[i] - sol.dual.nu * problem.cost(i, j));
    }
  }
  sol.dual.mu = mu;
  sol.dual_optimum = sol.dual.objective(problem.epsilon, f);
  return sol;
}

/// Minimizes (lambda - l)^T h over the dual optimal face
/// { dual feasible, eps nu + f^T lambda = dual_optimum }, which is the
/// directional derivative of psi at f along h. The face LP is solved through
/// its own dual, a transport LP with marginal h + t f and budget t eps.
inline double optimize_over_dual_face(const AuditProblem& problem, const std::vector<double>& f_in,
                                      const std::vector<double>& direction, double dual_optimum) {
  const int K = problem.size();
  const Eigen::VectorXd f = detail::checked_marginal(problem, f_in);
  if (static_cast<int>(direction.size()) != K) throw ConfigError("direction has wrong dimension");

  double hnorm = 0.0;
  for (double v : direction) {
    if (!std::isfinite(v)) throw ConfigError("direction has a non-finite entry");
    hnorm = std::max(hnorm, std::abs(v));
  }
  if (hnorm == 0.0) return 0.0;

  // The face level is tried exactly first; a rounding-level gap between
  // dual_optimum and the true optimum makes the dual LP unbounded, so the
  // level is relaxed a little at a time. The error is t * relaxation.
  lp::SimplexResult res;
  for (double relax : {0.0, 1e-12, 1e-9}) {
    const double face_level = dual_optimum + relax * std::max(1.0, std::abs(dual_optimum));

    lp::StandardForm lp;
    lp.rows = K + 1;
    detail::PairIndex pairs;
    detail::add_transport_columns(problem, lp, pairs);

    lp::SparseColumn scale_col;
    for (int i = 0; i < K; ++i) {
      if (f[i] != 0.0) scale_col.entries.emplace_back(i, -f[i]);
    }
    if (problem.epsilon != 0.0) scale_col.entries.emplace_back(K, -problem.epsilon);
    lp.columns.push_back(std::move(scale_col));
    lp.cost.push_back(face_level);
    lp.columns.push_back({{{K, 1.0}}});
    lp.cost.push_back(0.0);
    lp.rhs.assign(direction.begin(), direction.end());
    lp.rhs.push_back(0.0);

    lp::RevisedSimplex engine;
    res = engine.solve(lp);
    if (res.status == lp::Status::infeasible) {
      throw DegeneracyError("dual-face LP unbounded: direction leaves the simplex at a zero-mass point");
    }
    if (res.status == lp::Status::optimal) break;
  }
  if (res.status == lp::Status::unbounded) {
    throw DegeneracyError("dual-face LP infeasible: supplied dual optimum is not tight");
  }
  Eigen::Map<const Eigen::VectorXd> h(direction.data(), K);
  double value = -res.objective - problem.loss.dot(h);
  return detail::snap(value, hnorm);
}

inline double optimize_over_dual_face(const AuditProblem& problem, const std::vector<double>& f,
                                      const std::vector<double>& direction, const LpSolution& at_f) {
  return optimize_over_dual_face(problem, f, direction, at_f.dual_optimum);
}

/// True when every coordinate of lambda carried by the support of f is
/// pinned down on the dual optimal face. Coordinates with f_k = 0 are
/// skipped: the multinomial fluctuation vanishes there.
inline bool is_dual_unique(const AuditProblem& problem, const std::vector<double>& f) {
  const int K = problem.size();
  const auto sol = solve_audit_lp(problem, f);
  std::vector<double> h(K, 0.0);
  for (int k = 0; k < K; ++k) {
    if (f[k] <= 0.0) continue;
    h[k] = 1.0;
    double low = optimize_over_dual_face(problem, f, h, sol.dual_optimum);
    h[k] = -1.0;
    double high = -optimize_over_dual_face(problem, f, h, sol.dual_optimum);
    h[k] = 0.0;
    if (high - low > 1e-7) return false;
  }
  return true;
}

}  // namespace faith
