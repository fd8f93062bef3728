#pragma once

#include <optional>
#include <vector>

#include "lgmd/core.hpp"

namespace lgmd {

/// Soft-thresholded covariance: off-diagonals shrunk toward zero by lambda,
/// diagonal untouched.
struct ResidualCovariance {
  Matrix sigma_res;
  std::vector<Edge> support;
};

ResidualCovariance residual_threshold(const Matrix& sigma, double lam);

struct ThresholdResult {
  PrecisionGraph graph;
  // Diagonal shift added to restore positive definiteness (0 when none was needed).
  double diagonal_shift = 0.0;
};

/// Closed-form approximate graphical lasso from a thresholded covariance.
///
/// Exact on acyclic residual graphs under mild conditions; elsewhere the
/// result may be indefinite, in which case the smallest shift from
/// {1e-8, 1e-6, 1e-4, ...} that restores Cholesky success is added to the
/// diagonal and reported.
ThresholdResult threshold_glasso(const Matrix& s, double eta);

struct GlassoOptions {
  double tol = 1e-8;
  int max_iter = 20000;
};

struct GlassoResult {
  PrecisionGraph graph;
  std::vector<double> objective_trace;  // maximized objective, one entry per accepted step
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Reference graphical lasso: maximizes ln|T| - tr(S T) - eta * sum_{i!=j} |T_ij|
/// by proximal gradient with Barzilai-Borwein steps and backtracking.
/// Intended as a test-scale oracle (d <= 200).
GlassoResult glasso_oracle(const Matrix& s, double eta, const GlassoOptions& opts = {});

/// Value of ln|T| - tr(S T) - eta * ||T||_1,off; -inf when T is not PD.
double glasso_objective(const Matrix& s, const Matrix& theta, double eta);

struct LaplacianGlassoOptions {
  /// Fixed sigma^2; std::nullopt optimizes it by exact coordinate ascent each sweep.
  std::optional<double> sigma2 = 1.0;
  /// Starting edge weights, indexed like edge_list(d); defaults to zero.
  std::optional<Vector> initial_weights;
  std::optional<double> initial_sigma2;
  int max_iter = 50000;
  /// Convergence when the projected-gradient norm drops below grad_tol * d.
  double grad_tol = 1e-6;
};

struct LaplacianGlassoResult {
  LaplacianGraph laplacian;
  double sigma2 = 1.0;
  std::vector<double> objective_trace;
  double projected_gradient_norm = 0.0;
  int iterations = 0;

  /// L + (1 / sigma^2) I.
  Matrix theta() const;
};

/// Laplacian-constrained graphical lasso: maximizes ln|T| - tr(S T) - rho ||T||_1
/// over T = L + I / sigma^2 with L a combinatorial Laplacian, by projected
/// gradient ascent on the non-negative edge weights. The l1 norm covers every
/// entry of T.
LaplacianGlassoResult laplacian_constrained_glasso(const Matrix& s, double rho,
                                                   const LaplacianGlassoOptions& opts = {});

/// Objective of laplacian_constrained_glasso for explicit weights and sigma^2.
double laplacian_glasso_objective(const Matrix& s, double rho, const Vector& weights, double sigma2);

/// All pairs (i, j), i < j, in the order used for Laplacian edge-weight vectors.
std::vector<Edge> edge_list(Index d);

}  // namespace lgmd
