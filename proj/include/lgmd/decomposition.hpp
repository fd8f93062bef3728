#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lgmd/core.hpp"

namespace lgmd {

struct FitResult {
  FactorPair factors;
  PrecisionGraph a;  // n x n sample-space precision
  PrecisionGraph b;  // p x p feature-space precision
  // Objective after every ALS step; inner loops start at segment_starts.
  std::vector<double> objective_trace;
  std::vector<std::size_t> segment_starts;
  int iterations = 0;
  bool converged = false;
  std::map<std::string, double> diagnostics;
  // dGRMD only: the fixed graphs. a and b then hold L + I, which shares their support.
  std::optional<LaplacianGraph> sample_laplacian;
  std::optional<LaplacianGraph> feature_laplacian;
};

/// Generalized PCA factors: Y ~ U diag(d) V^T with U^T Q U = I and V^T R V = I.
struct GpcaResult {
  Matrix u;
  Vector d;
  Matrix v;

  Matrix x() const { return u * d.asDiagonal(); }
  const Matrix& w() const { return v; }
};

/// Rank-k SVD with the largest-magnitude entry of each left vector made positive.
struct TruncatedSvd {
  Matrix u;
  Vector s;
  Matrix v;
};
TruncatedSvd truncated_svd(const Matrix& m, Index k);

/// Full objective:
///   1/2 ||Y - X W^T||^2 (observed entries)
///   + l1/2 (tr(X^T A X) - k ln|A| + eta1 ||A||_1,off)
///   + l2/2 (tr(W^T B W) - k ln|B| + eta2 ||B||_1,off)
double lgmd_objective(const DataMatrix& y, const FactorPair& f, const PrecisionGraph& a, const PrecisionGraph& b,
                      const Hyperparams& h);

/// The part of lgmd_objective that depends on the factors; a and b may be any
/// symmetric PSD regularizers (precisions or Laplacians).
double factor_objective(const DataMatrix& y, const FactorPair& f, const Matrix& a, const Matrix& b, double lambda1,
                        double lambda2);

/// One X update followed by one W update. h.update selects the fixed-point
/// form or the exact block minimizer. Masked entries are imputed from the
/// current reconstruction before each half step.
FactorPair als_step(const DataMatrix& y, const FactorPair& f, const PrecisionGraph& a, const PrecisionGraph& b,
                    const Hyperparams& h);

struct InnerAlsResult {
  FactorPair factors;
  std::vector<double> trace;  // factor_objective after each step
  int steps = 0;
  bool converged = false;
  int safeguard_steps = 0;  // fixed-point half steps replaced by exact ones
};

/// Repeats als_step until the relative change of factor_objective drops below
/// h.tol_inner or h.max_inner steps are taken.
InnerAlsResult inner_als(const DataMatrix& y, const FactorPair& f, const PrecisionGraph& a, const PrecisionGraph& b,
                         const Hyperparams& h);

enum class Variant { Plain, LaplacianPlus };

/// Block-coordinate descent over (X, W, A, B) starting from a truncated SVD.
FitResult fit_lgmd(const DataMatrix& y, const Hyperparams& h, Variant variant = Variant::Plain);

/// Ridge ALS on 1/2 ||Y - X W^T||^2 + lambda1/2 ||X||^2 + lambda2/2 ||W||^2.
FitResult fit_pmf(const DataMatrix& y, const Hyperparams& h);

/// ALS with fixed Laplacian regularizers on both factors.
FitResult fit_dgrmd(const DataMatrix& y, const Hyperparams& h, const LaplacianGraph& l_sample,
                    const LaplacianGraph& l_feature);

/// Truncated SVD: X = U_k S_k, W = V_k. Rejects masked input.
FitResult fit_pca(const DataMatrix& y, Index k);

/// GPCA with Q = A^-1 and R = B^-1.
GpcaResult gpca_postprocess(const Matrix& y, const PrecisionGraph& a, const PrecisionGraph& b, Index k);
GpcaResult gpca_postprocess(const DataMatrix& y, const PrecisionGraph& a, const PrecisionGraph& b, Index k);

/// Symmetric PD square root; throws NotPositiveDefinite.
Matrix sqrt_spd(const Matrix& m);
/// Symmetric PD inverse square root; throws NotPositiveDefinite.
Matrix inv_sqrt_spd(const Matrix& m);

}  // namespace lgmd
