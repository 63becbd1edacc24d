#pragma once

// Dense revised simplex for small-row, many-column LPs in standard form.
//
//   minimize  c^T x   subject to  A x = b,  x >= 0
//
// Columns are sparse; the basis inverse is kept dense (rows x rows) and
// updated with elementary row operations, refactorized periodically.
// Pricing is Dantzig's rule (lowest index on ties); after a run of
// degenerate pivots the engine switches to Bland's rule until the objective
// moves again.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "faith/errors.hpp"

namespace faith::lp {

struct SparseColumn {
  std::vector<std::pair<int, double>> entries;
};

struct StandardForm {
  int rows = 0;
  std::vector<SparseColumn> columns;
  std::vector<double> cost;
  std::vector<double> rhs;
};

enum class Status { optimal, infeasible, unbounded };

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int stall_threshold = 30;
  int refactor_every = 64;
  long max_iterations = 0;  // 0: 100 * (rows + cols) + 1000
};

struct SimplexResult {
  Status status = Status::infeasible;
  std::vector<double> x;
  // Row multipliers y with c - A^T y >= 0 at an optimum.
  std::vector<double> duals;
  double objective = 0.0;
  std::vector<int> basis;
  long iterations = 0;
};

class RevisedSimplex {
 public:
  explicit RevisedSimplex(SimplexOptions options = {}) : opt_(options) {}

  // `initial_basis` may name `rows` columns forming a primal feasible basis;
  // otherwise (or if it turns out singular/infeasible) phase 1 runs.
  SimplexResult solve(const StandardForm& lp, std::span<const int> initial_basis = {}) {
    setup(lp);
    SimplexResult result;

    bool warm = !initial_basis.empty() && try_basis(initial_basis);
    if (!warm) {
      basis_.resize(m_);
      for (int r = 0; r < m_; ++r) basis_[r] = n_ + r;
      refresh_basic_flags();
      binv_.setIdentity(m_, m_);
      xb_ = b_;

      std::vector<double> phase1(n_ + m_, 0.0);
      for (int r = 0; r < m_; ++r) phase1[n_ + r] = 1.0;
      auto st = iterate(phase1, /*artificials_may_enter=*/true);
      if (st == Status::unbounded) {
        throw SolverError("phase 1 reported unbounded", trace_vector());
      }
      double infeas = 0.0;
      for (int r = 0; r < m_; ++r) {
        if (basis_[r] >= n_) infeas += xb_[r];
      }
      double scale = 1.0;
      for (double v : b_) scale = std::max(scale, std::abs(v));
      if (infeas > 1e-8 * scale) {
        result.status = Status::infeasible;
        result.iterations = iterations_;
        return result;
      }
      drive_out_artificials();
    }

    std::vector<double> phase2(n_ + m_, 0.0);
    std::copy(lp.cost.begin(), lp.cost.end(), phase2.begin());
    auto st = iterate(phase2, /*artificials_may_enter=*/false);
    result.iterations = iterations_;
    if (st == Status::unbounded) {
      result.status = Status::unbounded;
      return result;
    }

    refactor();
    result.status = Status::optimal;
    result.x.assign(n_, 0.0);
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) result.x[basis_[r]] = std::max(0.0, xb_[r]);
    }
    auto y = simplex_multipliers(phase2);
    result.duals.resize(m_);
    for (int r = 0; r < m_; ++r) result.duals[r] = y[r] * sign_[r];
    result.objective = 0.0;
    for (int j = 0; j < n_; ++j) result.objective += lp.cost[j] * result.x[j];
    result.basis = basis_;
    return result;
  }

  const std::deque<std::string>& trace() const noexcept { return trace_; }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  void setup(const StandardForm& lp) {
    if (static_cast<int>(lp.rhs.size()) != lp.rows || lp.cost.size() != lp.columns.size()) {
      throw SolverError("malformed LP: dimension mismatch", {});
    }
    lp_ = &lp;
    m_ = lp.rows;
    n_ = static_cast<int>(lp.columns.size());
    sign_.assign(m_, 1.0);
    b_.resize(m_);
    for (int r = 0; r < m_; ++r) {
      if (lp.rhs[r] < 0.0) sign_[r] = -1.0;
      b_[r] = sign_[r] * lp.rhs[r];
    }
    iterations_ = 0;
    trace_.clear();
    long cap = opt_.max_iterations > 0 ? opt_.max_iterations : 100L * (m_ + n_) + 1000;
    max_iterations_ = cap;
  }

  // Column j of the sign-normalized matrix, artificials appended after n_.
  template <class F>
  void for_column(int j, F&& f) const {
    if (j >= n_) {
      f(j - n_, 1.0);
      return;
    }
    for (const auto& [r, v] : lp_->columns[j].entries) f(r, sign_[r] * v);
  }

  bool try_basis(std::span<const int> cols) {
    if (static_cast<int>(cols.size()) != m_) return false;
    for (int c : cols) {
      if (c < 0 || c >= n_) return false;
    }
    basis_.assign(cols.begin(), cols.end());
    refresh_basic_flags();
    if (!refactor()) return false;
    for (int r = 0; r < m_; ++r) {
      if (xb_[r] < -opt_.feasibility_tol) return false;
    }
    return true;
  }

  void refresh_basic_flags() {
    basic_.assign(n_ + m_, false);
    for (int c : basis_) basic_[c] = true;
  }

  bool refactor() {
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(m_, m_);
    for (int r = 0; r < m_; ++r) {
      for_column(basis_[r], [&](int row, double v) { bmat(row, r) = v; });
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    if (!lu.isInvertible()) return false;
    binv_ = lu.inverse();
    Eigen::Map<const Eigen::VectorXd> bvec(b_.data(), m_);
    Eigen::VectorXd xb = binv_ * bvec;
    xb_.assign(xb.data(), xb.data() + m_);
    for (double& v : xb_) {
      if (v < 0.0 && v > -opt_.feasibility_tol) v = 0.0;
    }
    return true;
  }

  std::vector<double> simplex_multipliers(const std::vector<double>& cost) const {
    std::vector<double> y(m_, 0.0);
    for (int r = 0; r < m_; ++r) {
      double cb = cost[basis_[r]];
      if (cb == 0.0) continue;
      const double* row = binv_.data() + static_cast<std::ptrdiff_t>(r) * m_;
      for (int k = 0; k < m_; ++k) y[k] += cb * row[k];
    }
    return y;
  }

  void log(const std::string& line) {
    trace_.push_back(line);
    if (trace_.size() > 25) trace_.pop_front();
  }

  std::vector<std::string> trace_vector() const { return {trace_.begin(), trace_.end()}; }

  Status iterate(const std::vector<double>& cost, bool artificials_may_enter) {
    int stall = 0;
    bool bland = false;
    int since_refactor = 0;
    std::vector<double> alpha(m_);
    const int candidates = artificials_may_enter ? n_ + m_ : n_;

    while (true) {
      if (iterations_ >= max_iterations_) {
        throw SolverError("simplex iteration limit reached", trace_vector());
      }
      if (since_refactor >= opt_.refactor_every) {
        if (!refactor()) throw SolverError("basis became singular", trace_vector());
        since_refactor = 0;
      }

      auto y = simplex_multipliers(cost);

      int entering = -1;
      double best = -opt_.optimality_tol;
      for (int j = 0; j < candidates; ++j) {
        if (basic_[j]) continue;
        double d = cost[j];
        for_column(j, [&](int r, double v) { d -= y[r] * v; });
        if (d < best) {
          entering = j;
          if (bland) break;
          best = d;
        }
      }
      if (entering < 0) return Status::optimal;

      std::fill(alpha.begin(), alpha.end(), 0.0);
      for_column(entering, [&](int row, double v) {
        for (int r = 0; r < m_; ++r) alpha[r] += binv_(r, row) * v;
      });

      int leaving = -1;
      double theta = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m_; ++r) {
        double a = alpha[r];
        double ratio;
        if (!artificials_may_enter && basis_[r] >= n_) {
          // A redundant-row artificial is pinned at zero.
          if (std::abs(a) <= opt_.pivot_tol) continue;
          ratio = 0.0;
        } else {
          if (a <= opt_.pivot_tol) continue;
          ratio = std::max(0.0, xb_[r]) / a;
        }
        bool take = false;
        if (leaving < 0 || ratio < theta - 1e-12) {
          take = true;
        } else if (ratio <= theta + 1e-12) {
          take = bland ? basis_[r] < basis_[leaving] : std::abs(a) > std::abs(alpha[leaving]);
        }
        if (take) {
          leaving = r;
          theta = ratio;
        }
      }
      if (leaving < 0) return Status::unbounded;

      pivot(leaving, entering, alpha, theta);
      ++iterations_;
      ++since_refactor;

      if (theta <= 1e-12) {
        if (++stall > opt_.stall_threshold) bland = true;
      } else {
        stall = 0;
        bland = false;
      }

      std::ostringstream line;
      line << "iter " << iterations_ << ": enter " << entering << " leave row " << leaving
           << " theta " << theta << (bland ? " [bland]" : "");
      log(line.str());
    }
  }

  void pivot(int r, int entering, const std::vector<double>& alpha, double theta) {
    for (int i = 0; i < m_; ++i) xb_[i] -= theta * alpha[i];
    xb_[r] = theta;
    for (double& v : xb_) {
      if (v < 0.0 && v > -opt_.feasibility_tol) v = 0.0;
    }

    const double inv = 1.0 / alpha[r];
    binv_.row(r) *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == r || alpha[i] == 0.0) continue;
      binv_.row(i) -= alpha[i] * binv_.row(r);
    }
    basic_[basis_[r]] = false;
    basis_[r] = entering;
    basic_[entering] = true;
  }

  void drive_out_artificials() {
    std::vector<double> alpha(m_);
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      for (int j = 0; j < n_; ++j) {
        if (basic_[j]) continue;
        double a = 0.0;
        for_column(j, [&](int row, double v) { a += binv_(r, row) * v; });
        if (std::abs(a) <= 1e-9) continue;
        std::fill(alpha.begin(), alpha.end(), 0.0);
        for_column(j, [&](int row, double v) {
          for (int i = 0; i < m_; ++i) alpha[i] += binv_(i, row) * v;
        });
        pivot(r, j, alpha, std::max(0.0, xb_[r]) / alpha[r]);
        break;
      }
    }
    refactor();
  }

  SimplexOptions opt_;
  const StandardForm* lp_ = nullptr;
  int m_ = 0;
  int n_ = 0;
  std::vector<double> sign_;
  std::vector<double> b_;
  std::vector<int> basis_;
  std::vector<bool> basic_;
  std::vector<double> xb_;
  RowMatrix binv_;
  long iterations_ = 0;
  long max_iterations_ = 0;
  std::deque<std::string> trace_;
};

}  // namespace faith::lp
