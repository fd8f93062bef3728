#include <cmath>
#include <string>

#include "lgmd/precision.hpp"

namespace lgmd {

ResidualCovariance residual_threshold(const Matrix& sigma, double lam) {
  if (sigma.rows() != sigma.cols()) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  if (!(lam >= 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be non-negative");
  const Index d = sigma.rows();
  ResidualCovariance out{Matrix::Zero(d, d), {}};
  out.sigma_res.diagonal() = sigma.diagonal();
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      const double v = sigma(i, j);
      if (std::abs(v) > lam) {
        const double r = v - lam * (v > 0.0 ? 1.0 : -1.0);
        out.sigma_res(i, j) = out.sigma_res(j, i) = r;
        out.support.push_back({i, j});
      }
    }
  }
  return out;
}

ThresholdResult threshold_glasso(const Matrix& s, double eta) {
  const Index d = s.rows();
  if (s.cols() != d) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  for (Index i = 0; i < d; ++i) {
    if (!(s(i, i) > 0.0)) throw Error(ErrorCode::InvalidArgument, "covariance diagonal must be positive");
  }
  const ResidualCovariance res = residual_threshold(s, eta);

  Matrix theta = Matrix::Zero(d, d);
  Vector diag_sum = Vector::Zero(d);
  for (const Edge& e : res.support) {
    const double r = res.sigma_res(e.i, e.j);
    const double denom = s(e.i, e.i) * s(e.j, e.j) - r * r;
    if (denom <= 1e-12) {
      throw Error(ErrorCode::NearSingularPair,
                  "pair (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") is near singular; eta too small");
    }
    theta(e.i, e.j) = theta(e.j, e.i) = -r / denom;
    diag_sum(e.i) += r * r / denom;
    diag_sum(e.j) += r * r / denom;
  }
  for (Index i = 0; i < d; ++i) theta(i, i) = (1.0 + diag_sum(i)) / s(i, i);

  double shift = 0.0;
  if (!is_positive_definite(theta)) {
    for (shift = 1e-8; shift <= 1e12; shift *= 100.0) {
      Matrix shifted = theta;
      shifted.diagonal().array() += shift;
      if (is_positive_definite(shifted)) {
        theta = std::move(shifted);
        break;
      }
    }
    if (shift > 1e12) throw Error(ErrorCode::NotPositiveDefinite, "no diagonal shift restores definiteness");
  }
  return {PrecisionGraph(std::move(theta)), shift};
}

}  // namespace lgmd
