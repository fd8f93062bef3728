#include <cmath>

#include "lgmd/decomposition.hpp"

namespace lgmd {

namespace {

Matrix spd_power(const Matrix& m, double power) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix must be square");
  if (!is_positive_definite(m)) throw Error(ErrorCode::NotPositiveDefinite, "matrix is not SPD");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  const Vector vals = eig.eigenvalues();
  if (vals.minCoeff() <= 0.0) throw Error(ErrorCode::NotPositiveDefinite, "matrix has non-positive eigenvalue");
  const Vector powered = vals.array().pow(power);
  Matrix out = eig.eigenvectors() * powered.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

Matrix sqrt_spd(const Matrix& m) { return spd_power(m, 0.5); }

Matrix inv_sqrt_spd(const Matrix& m) { return spd_power(m, -0.5); }

TruncatedSvd truncated_svd(const Matrix& m, Index k) {
  if (k < 1 || k > std::min(m.rows(), m.cols())) {
    throw Error(ErrorCode::InvalidArgument, "svd rank outside [1, min(n, p)]");
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out{svd.matrixU().leftCols(k), svd.singularValues().head(k), svd.matrixV().leftCols(k)};
  for (Index c = 0; c < k; ++c) {
    Index arg = 0;
    out.u.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, c) < 0.0) {
      out.u.col(c) *= -1.0;
      out.v.col(c) *= -1.0;
    }
  }
  return out;
}

}  // namespace lgmd
