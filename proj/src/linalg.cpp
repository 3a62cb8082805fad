#include "vrim/core/linalg.hpp"

#include <cmath>
#include <string>

namespace vrim {

CholeskyFactor::CholeskyFactor(Matrix L) : L_(std::move(L)) {
  if (L_.rows() != L_.cols() || L_.rows() == 0)
    throw DimensionMismatch("CholeskyFactor: matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < L_.rows(); ++i) {
    if (!(L_(i, i) > 0.0))
      throw NotPositiveDefinite("CholeskyFactor: diagonal entry " +
                                std::to_string(i) + " is not positive");
    for (Eigen::Index j = i + 1; j < L_.cols(); ++j) L_(i, j) = 0.0;
  }
  if (!L_.allFinite())
    throw NumericalError("CholeskyFactor: non-finite entries");
}

CholeskyFactor CholeskyFactor::identity(int d) {
  return CholeskyFactor(Matrix::Identity(d, d));
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < L_.rows(); ++i) s += std::log(L_(i, i));
  return s;
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
  if (b.size() != L_.rows())
    throw DimensionMismatch("solve_lower: dimension mismatch");
  return L_.triangularView<Eigen::Lower>().solve(b);
}

Vector CholeskyFactor::solve_upper_t(const Vector& b) const {
  if (b.size() != L_.rows())
    throw DimensionMismatch("solve_upper_t: dimension mismatch");
  return L_.transpose().triangularView<Eigen::Upper>().solve(b);
}

CholeskyFactor chol_decompose(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DimensionMismatch("chol_decompose: matrix must be square");
  const double scale = A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw NumericalError("chol_decompose: matrix is not symmetric");
  Eigen::LLT<Matrix> llt(A.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("chol_decompose: matrix is not positive definite");
  return CholeskyFactor(llt.matrixL());
}

}  // namespace vrim
