#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lgmd/metrics.hpp"

namespace lgmd {

double masked_rmse(const Matrix& y, const Matrix& recon, const Mask& o) {
  if (y.rows() != recon.rows() || y.cols() != recon.cols() || o.rows() != y.rows() || o.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "rmse operands differ in shape");
  }
  double sum = 0.0;
  Index count = 0;
  for (Index j = 0; j < y.cols(); ++j) {
    for (Index i = 0; i < y.rows(); ++i) {
      if (!o(i, j)) continue;
      const double diff = y(i, j) - recon(i, j);
      sum += diff * diff;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptySelection, "rmse selection is empty");
  return std::sqrt(sum / static_cast<double>(count));
}

double masked_rmse(const DataMatrix& y, const Matrix& recon, const Mask& o) {
  if (y.has_mask()) {
    const Mask& seen = *y.mask();
    for (Index j = 0; j < y.cols(); ++j) {
      for (Index i = 0; i < y.rows(); ++i) {
        if (o(i, j) && !seen(i, j)) {
          throw Error(ErrorCode::InvalidArgument, "rmse selection includes unobserved entries");
        }
      }
    }
  }
  return masked_rmse(y.values(), recon, o);
}

namespace {

Matrix orthonormal_basis(const Matrix& m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(1e-12);
  const Index r = qr.rank();
  if (r == 0) throw Error(ErrorCode::RankDeficient, "matrix has no column space");
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), r);
  return q;
}

}  // namespace

double subspace_angle(const Matrix& m1, const Matrix& m2) {
  if (m1.rows() != m2.rows()) throw Error(ErrorCode::DimensionMismatch, "row counts differ");
  Matrix q1 = orthonormal_basis(m1);
  Matrix q2 = orthonormal_basis(m2);
  if (q1.cols() < q2.cols()) std::swap(q1, q2);
  // Component of the smaller space outside the larger one.
  const Matrix residual = q2 - q1 * (q1.transpose() * q2);
  Eigen::JacobiSVD<Matrix> svd(residual);
  const double s = std::min(1.0, svd.singularValues()(0));
  return std::asin(s);
}

PrincipalAngles principal_angles(const Matrix& m1, const Matrix& m2) {
  if (m1.rows() != m2.rows()) throw Error(ErrorCode::DimensionMismatch, "row counts differ");
  const Matrix q1 = orthonormal_basis(m1);
  const Matrix q2 = orthonormal_basis(m2);
  Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
  const Vector cosines = svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);
  PrincipalAngles out;
  out.largest = subspace_angle(m1, m2);
  out.smallest = std::acos(cosines.maxCoeff());
  out.mean = cosines.array().acos().mean();
  return out;
}

std::vector<double> column_correlations(const Matrix& m) {
  const Index k = m.cols();
  Matrix centered = m.rowwise() - m.colwise().mean();
  Vector norms = centered.colwise().norm();
  for (Index c = 0; c < k; ++c) {
    const double scale = m.col(c).cwiseAbs().maxCoeff();
    if (!(norms(c) > 1e-14 * std::max(scale, 1e-300))) {
      throw Error(ErrorCode::ZeroVariance, "column " + std::to_string(c) + " is constant");
    }
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      const double r = centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j));
      out.push_back(std::clamp(r, -1.0, 1.0));
    }
  }
  return out;
}

Index edge_recovery(const PrecisionGraph& g_true, const std::vector<Edge>& estimated, double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "top fraction must lie in (0, 1]");
  }
  std::vector<Edge> truth = g_true.support();
  std::stable_sort(truth.begin(), truth.end(), [&](const Edge& a, const Edge& b) {
    return std::abs(g_true.theta()(a.i, a.j)) > std::abs(g_true.theta()(b.i, b.j));
  });
  const auto keep = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(truth.size()) - 1e-9));
  std::vector<Edge> est = estimated;
  std::sort(est.begin(), est.end());
  Index hits = 0;
  for (std::size_t t = 0; t < std::min(keep, truth.size()); ++t) {
    if (std::binary_search(est.begin(), est.end(), truth[t])) ++hits;
  }
  return hits;
}

Index edge_recovery(const PrecisionGraph& g_true, const PrecisionGraph& g_est, double top_fraction) {
  if (g_true.dim() != g_est.dim()) throw Error(ErrorCode::DimensionMismatch, "graph sizes differ");
  return edge_recovery(g_true, g_est.support(), top_fraction);
}

double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::DimensionMismatch, "label vectors differ in length");
  if (pred.empty()) throw Error(ErrorCode::EmptySelection, "no labels");
  auto index_of = [](const std::vector<int>& labels) {
    std::vector<int> ids = labels;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<Index> out(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) {
      out[t] = std::lower_bound(ids.begin(), ids.end(), labels[t]) - ids.begin();
    }
    return std::pair{out, static_cast<Index>(ids.size())};
  };
  const auto [p, np] = index_of(pred);
  const auto [t, nt] = index_of(truth);
  const Index size = std::max(np, nt);
  Matrix counts = Matrix::Zero(size, size);
  for (std::size_t s = 0; s < p.size(); ++s) counts(p[s], t[s]) += 1.0;
  const std::vector<Index> match = hungarian(-counts);
  double agree = 0.0;
  for (Index r = 0; r < size; ++r) agree += counts(r, match[r]);
  return agree / static_cast<double>(pred.size());
}

}  // namespace lgmd
