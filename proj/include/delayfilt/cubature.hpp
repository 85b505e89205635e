#pragma once

#include <functional>

#include "delayfilt/types.hpp"

namespace delayfilt {

/// Third-degree spherical-radial cubature: 2n points at +-sqrt(n) e_i, equal weights.
struct CubatureRule {
  Matrix unit_points;  // n x 2n
  double weight = 0.0;

  static CubatureRule third_degree(int n);
  int size() const { return static_cast<int>(unit_points.cols()); }
};

/// Lower Cholesky factor of cov. On failure adds eps*I with eps doubling from
/// 1e-12 to 1e-6 times trace(cov)/n; throws NumericalError past that.
Matrix jittered_cholesky(const Matrix& cov);

struct MomentEstimate {
  Vector mean;
  Matrix cov;
  Matrix cross;  // E[(x - m)(g(x) - E g)^T]
};

/// Gaussian moments of g(x) for x ~ N(mean, cov) via the third-degree rule.
MomentEstimate cubature_transform(const Vector& mean, const Matrix& cov,
                                  const std::function<Vector(const Vector&)>& g);

}  // namespace delayfilt
