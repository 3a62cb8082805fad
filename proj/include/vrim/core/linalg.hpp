#ifndef VRIM_CORE_LINALG_HPP
#define VRIM_CORE_LINALG_HPP

#include <Eigen/Dense>

#include "vrim/core/errors.hpp"

namespace vrim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower-triangular factor L with strictly positive diagonal; L L^T is the
// covariance it represents.  The upper triangle is kept exactly zero.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(Matrix L);
  static CholeskyFactor identity(int d);

  const Matrix& matrix() const { return L_; }
  int dim() const { return static_cast<int>(L_.rows()); }

  double log_det() const;        // log det L = sum of log diagonal
  Matrix reconstruct() const { return L_ * L_.transpose(); }

  Vector solve_lower(const Vector& b) const;    // L z = b
  Vector solve_upper_t(const Vector& b) const;  // L^T z = b

 private:
  Matrix L_;
};

// Factor a symmetric positive definite matrix; throws NotPositiveDefinite
// when a pivot fails, which signals an invalid covariance.
CholeskyFactor chol_decompose(const Matrix& A);

}  // namespace vrim

#endif
