#pragma once

#include <random>

#include "delayfilt/types.hpp"

namespace delayfilt {

/// Draws from N(0, cov). Handles singular (including all-zero) covariances by
/// factoring through the eigendecomposition.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  explicit GaussianSampler(const Matrix& cov);

  Vector draw(Rng& rng);
  const Matrix& factor() const { return factor_; }
  bool degenerate() const { return zero_; }

 private:
  Matrix factor_;
  bool zero_ = true;
  std::normal_distribution<double> normal_;
};

/// Log-density of N(r; 0, cov) for residual r. cov must be positive definite.
class GaussianLikelihood {
 public:
  GaussianLikelihood() = default;
  explicit GaussianLikelihood(const Matrix& cov);

  double log_density(const Vector& residual) const;

 private:
  Matrix inv_factor_;
  double log_norm_ = 0.0;
};

/// log(sum(exp(values))) with max subtraction; -inf for empty or all -inf input.
double log_sum_exp(const double* values, std::size_t n);

}  // namespace delayfilt
