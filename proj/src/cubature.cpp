#include "delayfilt/cubature.hpp"

#include <cmath>

namespace delayfilt {

CubatureRule CubatureRule::third_degree(int n) {
  if (n <= 0) throw std::invalid_argument("cubature dimension must be positive");
  CubatureRule rule;
  rule.unit_points = Matrix::Zero(n, 2 * n);
  const double r = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    rule.unit_points(i, i) = r;
    rule.unit_points(i, n + i) = -r;
  }
  rule.weight = 1.0 / (2.0 * n);
  return rule;
}

Matrix jittered_cholesky(const Matrix& cov) {
  const auto n = cov.rows();
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = sym.trace() / static_cast<double>(n);
  if (scale == 0.0 && sym.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(n, n);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw NumericalError("covariance has nonpositive trace");
  for (double eps = 1e-12 * scale; eps <= 1e-6 * scale * (1.0 + 1e-12); eps *= 2.0) {
    llt.compute(sym + eps * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericalError("Cholesky factorization failed after maximum jitter");
}

MomentEstimate cubature_transform(const Vector& mean, const Matrix& cov,
                                  const std::function<Vector(const Vector&)>& g) {
  const auto n = static_cast<int>(mean.size());
  const auto rule = CubatureRule::third_degree(n);
  const Matrix L = jittered_cholesky(cov);
  const Matrix offsets = L * rule.unit_points;

  std::vector<Vector> images;
  images.reserve(rule.size());
  for (int p = 0; p < rule.size(); ++p) images.push_back(g(mean + offsets.col(p)));
  const auto m = images.front().size();

  MomentEstimate out;
  out.mean = Vector::Zero(m);
  for (const auto& y : images) out.mean += y;
  out.mean *= rule.weight;

  Matrix dev(m, rule.size());
  for (int p = 0; p < rule.size(); ++p) dev.col(p) = images[p] - out.mean;
  out.cov = rule.weight * dev * dev.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.cross = rule.weight * offsets * dev.transpose();
  return out;
}

}  // namespace delayfilt
