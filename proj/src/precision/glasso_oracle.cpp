#include <algorithm>
#include <cmath>
#include <limits>

#include "lgmd/precision.hpp"

namespace lgmd {

namespace {

// Off-diagonal soft threshold; the diagonal is unpenalized.
Matrix soft_threshold_off(const Matrix& m, double t) {
  Matrix out = m;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (i == j) continue;
      const double v = m(i, j);
      out(i, j) = std::abs(v) > t ? v - t * (v > 0.0 ? 1.0 : -1.0) : 0.0;
    }
  }
  return out;
}

double off_l1(const Matrix& m) { return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum(); }

double kkt_residual(const Matrix& grad, const Matrix& theta, double eta) {
  double worst = 0.0;
  for (Index j = 0; j < theta.cols(); ++j) {
    for (Index i = 0; i < theta.rows(); ++i) {
      double r;
      if (i == j) {
        r = std::abs(grad(i, j));
      } else if (theta(i, j) != 0.0) {
        r = std::abs(grad(i, j) + eta * (theta(i, j) > 0.0 ? 1.0 : -1.0));
      } else {
        r = std::max(0.0, std::abs(grad(i, j)) - eta);
      }
      worst = std::max(worst, r);
    }
  }
  return worst;
}

}  // namespace

double glasso_objective(const Matrix& s, const Matrix& theta, double eta) {
  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return log_det - (s.cwiseProduct(theta)).sum() - eta * off_l1(theta);
}

GlassoResult glasso_oracle(const Matrix& s, double eta, const GlassoOptions& opts) {
  const Index d = s.rows();
  if (s.cols() != d) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  if (!(eta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be non-negative");
  if (!is_positive_definite(s)) throw Error(ErrorCode::NotPositiveDefinite, "oracle needs a PD covariance");

  Matrix theta = s.diagonal().cwiseInverse().asDiagonal();
  Eigen::LLT<Matrix> llt(theta);
  Matrix inv = llt.solve(Matrix::Identity(d, d));
  Matrix grad = s - inv;

  // Smooth part f = -ln|T| + tr(S T); the objective reported is -(f + g).
  auto smooth = [&](const Eigen::LLT<Matrix>& f, const Matrix& t) {
    return -2.0 * f.matrixLLT().diagonal().array().log().sum() + s.cwiseProduct(t).sum();
  };
  double f_cur = smooth(llt, theta);
  double obj = -(f_cur + eta * off_l1(theta));

  GlassoResult out{PrecisionGraph::identity(1), {obj}, 0.0, 0};
  // Safe initial step: lambda_min(T)^2 bounds the local Lipschitz constant.
  double step = std::pow(theta.diagonal().minCoeff(), 2);
  Matrix prev_theta, prev_grad;

  for (int it = 1; it <= opts.max_iter; ++it) {
    if (it > 1) {
      const Matrix dt = theta - prev_theta;
      const Matrix dg = grad - prev_grad;
      const double num = dt.squaredNorm();
      const double den = dt.cwiseProduct(dg).sum();
      if (den > 0.0 && std::isfinite(num / den)) step = num / den;
    }
    Matrix next;
    Eigen::LLT<Matrix> next_llt;
    double f_next = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      next = soft_threshold_off(theta - step * grad, step * eta);
      next = 0.5 * (next + next.transpose());
      next_llt.compute(next);
      if (next_llt.info() == Eigen::Success) {
        f_next = smooth(next_llt, next);
        const Matrix delta = next - theta;
        const double bound = f_cur + grad.cwiseProduct(delta).sum() + delta.squaredNorm() / (2.0 * step);
        if (f_next <= bound + 1e-14 * std::abs(f_cur)) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable step improves the model; accept if already stationary.
      out.kkt_residual = kkt_residual(grad, theta, eta);
      if (out.kkt_residual < 10.0 * opts.tol) {
        out.graph = PrecisionGraph(theta);
        return out;
      }
      break;
    }

    prev_theta = std::move(theta);
    prev_grad = std::move(grad);
    theta = std::move(next);
    inv = next_llt.solve(Matrix::Identity(d, d));
    grad = s - inv;
    f_cur = f_next;
    const double new_obj = -(f_cur + eta * off_l1(theta));
    const double change = std::abs(new_obj - obj) / std::max(1.0, std::abs(obj));
    obj = new_obj;
    out.objective_trace.push_back(obj);
    out.iterations = it;
    out.kkt_residual = kkt_residual(grad, theta, eta);
    if (change < opts.tol && out.kkt_residual < 10.0 * opts.tol) {
      out.graph = PrecisionGraph(theta);
      return out;
    }
  }
  throw Error(ErrorCode::NotConverged, "graphical lasso oracle hit its iteration cap");
}

}  // namespace lgmd
