#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lgmd/error.hpp"

namespace lgmd {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Undirected edge with i < j.
struct Edge {
  Index i = 0;
  Index j = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Dense observation matrix with an optional observation mask (true = observed).
///
/// Unobserved entries may hold anything, including NaN; no accessor below
/// exposes them except values(), which callers must pair with the mask.
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(Matrix values);
  DataMatrix(Matrix values, Mask mask);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  bool has_mask() const { return mask_.has_value(); }
  const std::optional<Mask>& mask() const { return mask_; }
  bool observed(Index i, Index j) const { return !mask_ || (*mask_)(i, j); }
  Index observed_count() const;

  /// Observed entries taken from values(), the rest from `fill`.
  Matrix filled(const Matrix& fill) const;
  /// Observed entries taken from values(), the rest set to `fill`.
  Matrix filled(double fill) const;

 private:
  Matrix values_;
  std::optional<Mask> mask_;
};

/// Low-rank factors with Y ~ X W^T and the scales last used to normalize them.
struct FactorPair {
  Matrix x;
  Matrix w;
  double x_scale = 1.0;
  double w_scale = 1.0;

  FactorPair() = default;
  FactorPair(Matrix x_, Matrix w_, double x_scale_ = 1.0, double w_scale_ = 1.0);

  Index rank() const { return x.cols(); }
  Matrix product() const { return x * w.transpose(); }
};

/// Symmetric positive-definite precision matrix with its off-diagonal support.
class PrecisionGraph {
 public:
  PrecisionGraph() = default;
  /// Throws NotPositiveDefinite when theta is asymmetric beyond 1e-12 relative
  /// or fails Cholesky factorization.
  explicit PrecisionGraph(Matrix theta);

  static PrecisionGraph identity(Index d);

  Index dim() const { return theta_.rows(); }
  const Matrix& theta() const { return theta_; }
  const std::vector<Edge>& support() const { return support_; }
  double log_det() const { return log_det_; }
  /// Sum of |theta_ij| over i != j.
  double off_diagonal_l1() const;

 private:
  Matrix theta_;
  std::vector<Edge> support_;
  double log_det_ = 0.0;
};

/// Combinatorial Laplacian L = D - G of a non-negatively weighted graph.
class LaplacianGraph {
 public:
  LaplacianGraph() = default;
  LaplacianGraph(Index d, std::map<Edge, double> weights);

  Index dim() const { return lap_.rows(); }
  const Matrix& lap() const { return lap_; }
  const std::map<Edge, double>& weights() const { return weights_; }
  /// Edges with strictly positive weight.
  std::vector<Edge> support() const;

 private:
  Matrix lap_;
  std::map<Edge, double> weights_;
};

enum class AlsUpdate {
  FixedPoint,  // X <- (YW - l1 A X_old)(W^T W + eps I)^-1 and the mirrored W step
  Exact,       // exact block minimizer via the Sylvester equation
};

enum class PrecisionScaling {
  UnitDiagonal,      // D^-1/2 Theta D^-1/2
  UnitMeanDiagonal,  // Theta / mean(diag Theta)
};

struct Hyperparams {
  Index k = 1;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  // Objective-level sparsity weights; thresholding runs at eta / k.
  double eta1 = 0.0;
  double eta2 = 0.0;
  // Ridge in the fixed-point step, relative to trace(W^T W) / k.
  double epsilon = 1e-8;
  // Covariance jitter relative to trace(S) / d.
  double jitter = 1e-6;
  int max_outer = 50;
  int max_inner = 100;
  double tol_outer = 1e-5;
  double tol_inner = 1e-6;
  AlsUpdate update = AlsUpdate::FixedPoint;
  PrecisionScaling scaling = PrecisionScaling::UnitDiagonal;
  // Replace a fixed-point half step by the exact one whenever it raises the objective.
  bool monotone_safeguard = true;
  // LGMD+: when set, 1/sigma^2 is held at this value instead of optimized.
  std::optional<double> plus_sigma2;

  /// Throws InvalidArgument on inconsistent settings; checks k <= min(n, p) when sizes are given.
  void validate(std::optional<Index> n = std::nullopt, std::optional<Index> p = std::nullopt) const;
};

enum class Axis { Rows, Columns };

/// Returns (m / s, s) with s the population standard deviation of all entries.
std::pair<Matrix, double> normalize_factor(const Matrix& m);

/// Scales theta so that its diagonal has unit mean.
PrecisionGraph normalize_precision(const PrecisionGraph& g);
/// Congruence D^-1/2 Theta D^-1/2 giving a unit diagonal.
PrecisionGraph standardize_precision(const PrecisionGraph& g);
PrecisionGraph rescale_precision(const PrecisionGraph& g, PrecisionScaling scaling);

/// Union-symmetrized k-nearest-neighbour graph over rows or columns.
///
/// Neighbours tied with the num_neighbors-th distance are all kept. With a
/// mask, distances use mutually observed coordinates rescaled by
/// total / shared count; pairs with nothing in common are never neighbours.
LaplacianGraph knn_graph(const DataMatrix& y, Index num_neighbors, Axis axis);

/// m m^T / k + jitter I.
Matrix empirical_covariance(const Matrix& m, double jitter);

/// jitter_rel * trace(s) / d, the default covariance jitter.
double relative_jitter(const Matrix& s, double jitter_rel);

bool is_positive_definite(const Matrix& m);
/// ln|m| via Cholesky; throws NotPositiveDefinite.
double log_det_spd(const Matrix& m);

}  // namespace lgmd
