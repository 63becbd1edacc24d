#pragma once

// Seeded random streams and the two samplers the inference code needs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "faith/errors.hpp"

namespace faith::rng {

/// Independent generator for work item `index` of a run seeded with `seed`.
/// Depends only on the pair, so results do not change with thread count.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

/// Multinomial(m; p) by sequential conditional binomials.
inline std::vector<long long> multinomial(std::mt19937_64& gen, long long m, const std::vector<double>& p) {
  std::vector<long long> out(p.size(), 0);
  long long left = m;
  double mass = 1.0;
  for (std::size_t k = 0; k + 1 < p.size() && left > 0; ++k) {
    if (p[k] <= 0.0) continue;
    double q = mass > 0.0 ? std::min(1.0, p[k] / mass) : 1.0;
    std::binomial_distribution<long long> bin(left, q);
    out[k] = bin(gen);
    left -= out[k];
    mass -= p[k];
  }
  if (!p.empty()) {
    // Whatever is left lands on the last point with positive mass.
    std::size_t last = p.size();
    while (last > 0 && p[last - 1] <= 0.0) --last;
    if (last == 0) throw ConfigError("multinomial probabilities are all zero");
    out[last - 1] += left;
  }
  return out;
}

/// Draws from N(0, Sigma) for a symmetric positive semidefinite Sigma using
/// the eigendecomposition square root; eigenvalues below zero are clipped.
/// Near-zero eigenvalues are treated as exact zeros.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw NumericError("covariance is not square");
    if (!sigma.allFinite()) throw NumericError("covariance has non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of covariance failed");
    // Rounding noise on the null space would otherwise survive the square
    // root at the 1e-8 level.
    const double floor = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::VectorXd root = es.eigenvalues().unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
    root_ = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  }

  Eigen::VectorXd operator()(std::mt19937_64& gen) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(root_.cols());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(gen);
    return root_ * z;
  }

  const Eigen::MatrixXd& root() const noexcept { return root_; }

 private:
  Eigen::MatrixXd root_;
};

}  // namespace faith::rng
