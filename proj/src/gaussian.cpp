#include "delayfilt/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace delayfilt {

GaussianSampler::GaussianSampler(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("GaussianSampler: covariance must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("GaussianSampler: eigendecomposition failed");
  const Vector sd = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = eig.eigenvectors() * sd.asDiagonal();
  zero_ = sd.maxCoeff() == 0.0;
}

Vector GaussianSampler::draw(Rng& rng) {
  const auto n = factor_.rows();
  if (zero_) return Vector::Zero(n);
  Vector xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = normal_(rng);
  return factor_ * xi;
}

GaussianLikelihood::GaussianLikelihood(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("GaussianLikelihood: covariance is not positive definite");
  const Matrix lower = llt.matrixL();
  inv_factor_ = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(cov.rows(), cov.cols()));
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) log_det += 2.0 * std::log(lower(i, i));
  log_norm_ = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + log_det);
}

double GaussianLikelihood::log_density(const Vector& residual) const {
  const Vector w = inv_factor_.triangularView<Eigen::Lower>() * residual;
  return log_norm_ - 0.5 * w.squaredNorm();
}

double log_sum_exp(const double* values, std::size_t n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, values[i]);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(values[i] - hi);
  return hi + std::log(acc);
}

}  // namespace delayfilt
