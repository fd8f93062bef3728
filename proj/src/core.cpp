#include "lgmd/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lgmd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NearSingularPair: return "NearSingularPair";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateMask: return "DegenerateMask";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// DataMatrix

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw Error(ErrorCode::NonFinite, "data matrix has non-finite entries and no mask");
  }
}

DataMatrix::DataMatrix(Matrix values, Mask mask) : values_(std::move(values)), mask_(std::move(mask)) {
  if (mask_->rows() != values_.rows() || mask_->cols() != values_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mask shape differs from values shape");
  }
  for (Index j = 0; j < values_.cols(); ++j) {
    for (Index i = 0; i < values_.rows(); ++i) {
      if ((*mask_)(i, j) && !std::isfinite(values_(i, j))) {
        throw Error(ErrorCode::NonFinite, "observed entry (" + std::to_string(i) + "," +
                                              std::to_string(j) + ") is not finite");
      }
    }
  }
}

Index DataMatrix::observed_count() const {
  if (!mask_) return values_.size();
  return mask_->count();
}

Matrix DataMatrix::filled(const Matrix& fill) const {
  if (!mask_) return values_;
  if (fill.rows() != rows() || fill.cols() != cols()) {
    throw Error(ErrorCode::DimensionMismatch, "fill matrix shape differs from data");
  }
  return mask_->select(values_, fill);
}

Matrix DataMatrix::filled(double fill) const {
  if (!mask_) return values_;
  return mask_->select(values_, Matrix::Constant(rows(), cols(), fill));
}

// ---------------------------------------------------------------------------
// FactorPair

FactorPair::FactorPair(Matrix x_, Matrix w_, double x_scale_, double w_scale_)
    : x(std::move(x_)), w(std::move(w_)), x_scale(x_scale_), w_scale(w_scale_) {
  if (x.cols() != w.cols() || x.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "factor ranks differ or are zero");
  }
  if (!(x_scale > 0.0) || !(w_scale > 0.0) || !std::isfinite(x_scale) || !std::isfinite(w_scale)) {
    throw Error(ErrorCode::InvalidArgument, "factor scales must be positive and finite");
  }
}

// ---------------------------------------------------------------------------
// PrecisionGraph

PrecisionGraph::PrecisionGraph(Matrix theta) {
  if (theta.rows() != theta.cols() || theta.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "precision matrix must be square and non-empty");
  }
  if (!theta.allFinite()) {
    throw Error(ErrorCode::NonFinite, "precision matrix has non-finite entries");
  }
  const double scale = std::max(theta.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::NotPositiveDefinite, "precision matrix is not symmetric");
  }
  theta_ = 0.5 * (theta + theta.transpose());
  Eigen::LLT<Matrix> llt(theta_);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "precision matrix fails Cholesky factorization");
  }
  log_det_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Index d = theta_.rows();
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      if (theta_(i, j) != 0.0) support_.push_back({i, j});
    }
  }
}

PrecisionGraph PrecisionGraph::identity(Index d) { return PrecisionGraph(Matrix::Identity(d, d)); }

double PrecisionGraph::off_diagonal_l1() const {
  return theta_.cwiseAbs().sum() - theta_.diagonal().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// LaplacianGraph

LaplacianGraph::LaplacianGraph(Index d, std::map<Edge, double> weights)
    : lap_(Matrix::Zero(d, d)), weights_(std::move(weights)) {
  for (const auto& [e, w] : weights_) {
    if (e.i >= e.j || e.i < 0 || e.j >= d) {
      throw Error(ErrorCode::InvalidArgument, "laplacian edge out of range or not ordered i < j");
    }
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "laplacian edge weights must be non-negative");
    }
    lap_(e.i, e.j) -= w;
    lap_(e.j, e.i) -= w;
    lap_(e.i, e.i) += w;
    lap_(e.j, e.j) += w;
  }
}

std::vector<Edge> LaplacianGraph::support() const {
  std::vector<Edge> out;
  for (const auto& [e, w] : weights_) {
    if (w > 0.0) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hyperparams

void Hyperparams::validate(std::optional<Index> n, std::optional<Index> p) const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (k < 1) fail("rank k must be positive");
  if (n && p && k > std::min(*n, *p)) fail("rank k exceeds min(n, p)");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) fail("lambda1, lambda2 must be non-negative");
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) fail("eta1, eta2 must be non-negative");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(jitter >= 0.0)) fail("jitter must be non-negative");
  if (max_outer < 1 || max_inner < 1) fail("iteration caps must be positive");
  if (!(tol_outer > 0.0) || !(tol_inner > 0.0)) fail("tolerances must be positive");
  if (plus_sigma2 && !(*plus_sigma2 > 0.0)) fail("plus_sigma2 must be positive");
}

// ---------------------------------------------------------------------------
// Operations

std::pair<Matrix, double> normalize_factor(const Matrix& m) {
  if (m.size() == 0 || !m.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "factor must be non-empty and finite");
  }
  const double mean = m.mean();
  const double var = (m.array() - mean).square().mean();
  const double s = std::sqrt(var);
  if (s < 1e-15) throw Error(ErrorCode::ZeroVariance, "factor entries have zero spread");
  return {m / s, s};
}

PrecisionGraph normalize_precision(const PrecisionGraph& g) {
  const double mean_diag = g.theta().diagonal().mean();
  return PrecisionGraph(g.theta() / mean_diag);
}

PrecisionGraph standardize_precision(const PrecisionGraph& g) {
  const Vector inv_sqrt = g.theta().diagonal().array().rsqrt();
  Matrix theta = inv_sqrt.asDiagonal() * g.theta() * inv_sqrt.asDiagonal();
  theta.diagonal().setOnes();
  return PrecisionGraph(std::move(theta));
}

PrecisionGraph rescale_precision(const PrecisionGraph& g, PrecisionScaling scaling) {
  switch (scaling) {
    case PrecisionScaling::UnitDiagonal: return standardize_precision(g);
    case PrecisionScaling::UnitMeanDiagonal: return normalize_precision(g);
  }
  return g;
}

LaplacianGraph knn_graph(const DataMatrix& y, Index num_neighbors, Axis axis) {
  const bool by_rows = axis == Axis::Rows;
  const Index d = by_rows ? y.rows() : y.cols();
  const Index len = by_rows ? y.cols() : y.rows();
  if (num_neighbors < 1 || num_neighbors >= d) {
    throw Error(ErrorCode::InvalidArgument, "num_neighbors must lie in [1, d)");
  }
  auto value = [&](Index a, Index c) { return by_rows ? y.values()(a, c) : y.values()(c, a); };
  auto seen = [&](Index a, Index c) { return by_rows ? y.observed(a, c) : y.observed(c, a); };

  for (Index a = 0; a < d; ++a) {
    bool any = false;
    for (Index c = 0; c < len && !any; ++c) any = seen(a, c);
    if (!any) throw Error(ErrorCode::DegenerateInput, "entity " + std::to_string(a) + " has no observed entries");
  }

  const double inf = std::numeric_limits<double>::infinity();
  Matrix dist = Matrix::Constant(d, d, inf);
  for (Index a = 0; a < d; ++a) {
    for (Index b = a + 1; b < d; ++b) {
      double sum = 0.0;
      Index shared = 0;
      for (Index c = 0; c < len; ++c) {
        if (seen(a, c) && seen(b, c)) {
          const double diff = value(a, c) - value(b, c);
          sum += diff * diff;
          ++shared;
        }
      }
      if (shared > 0) {
        dist(a, b) = dist(b, a) = std::sqrt(sum * static_cast<double>(len) / static_cast<double>(shared));
      }
    }
  }

  std::map<Edge, double> weights;
  std::vector<Index> order;
  for (Index a = 0; a < d; ++a) {
    order.resize(d);
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + a);
    std::stable_sort(order.begin(), order.end(), [&](Index u, Index v) { return dist(a, u) < dist(a, v); });
    const double kth = dist(a, order[num_neighbors - 1]);
    if (!std::isfinite(kth)) continue;
    const double cutoff = kth + 1e-12 * std::max(1.0, kth);
    for (Index b : order) {
      if (dist(a, b) > cutoff) break;
      weights[{std::min(a, b), std::max(a, b)}] = 1.0;
    }
  }
  return LaplacianGraph(d, std::move(weights));
}

Matrix empirical_covariance(const Matrix& m, double jitter) {
  if (m.cols() < 1) throw Error(ErrorCode::InvalidArgument, "covariance needs at least one column");
  Matrix s = (m * m.transpose()) / static_cast<double>(m.cols());
  s.diagonal().array() += jitter;
  return s;
}

double relative_jitter(const Matrix& s, double jitter_rel) {
  return jitter_rel * s.trace() / static_cast<double>(s.rows());
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "matrix fails Cholesky factorization");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace lgmd
