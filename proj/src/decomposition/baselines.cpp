#include "als_engine.hpp"
#include "fit_common.hpp"

namespace lgmd {

namespace {

FitResult run_fixed_regularizers(const DataMatrix& y, const Hyperparams& h, const Matrix& a, const Matrix& b,
                                 AlsUpdate update) {
  FitResult fit;
  const detail::AlsEngine engine(y, a, b, h.lambda1, h.lambda2, h.epsilon, update, h.monotone_safeguard);
  InnerAlsResult inner = engine.run(detail::svd_initialization(y, h.k), h.max_outer * h.max_inner, h.tol_inner);
  detail::append_segment(fit, inner, 0.0);
  fit.factors = std::move(inner.factors);
  fit.iterations = static_cast<int>(fit.objective_trace.size());
  fit.converged = inner.converged;
  fit.diagnostics["safeguard_steps"] = inner.safeguard_steps;
  return fit;
}

}  // namespace

FitResult fit_pmf(const DataMatrix& y, const Hyperparams& h) {
  h.validate(y.rows(), y.cols());
  const Matrix a = Matrix::Identity(y.rows(), y.rows());
  const Matrix b = Matrix::Identity(y.cols(), y.cols());
  FitResult fit = run_fixed_regularizers(y, h, a, b, AlsUpdate::Exact);
  fit.a = PrecisionGraph::identity(y.rows());
  fit.b = PrecisionGraph::identity(y.cols());
  return fit;
}

FitResult fit_dgrmd(const DataMatrix& y, const Hyperparams& h, const LaplacianGraph& l_sample,
                    const LaplacianGraph& l_feature) {
  h.validate(y.rows(), y.cols());
  if (l_sample.dim() != y.rows() || l_feature.dim() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "laplacian sizes do not match the data");
  }
  FitResult fit = run_fixed_regularizers(y, h, l_sample.lap(), l_feature.lap(), h.update);
  fit.a = PrecisionGraph(l_sample.lap() + Matrix::Identity(y.rows(), y.rows()));
  fit.b = PrecisionGraph(l_feature.lap() + Matrix::Identity(y.cols(), y.cols()));
  fit.sample_laplacian = l_sample;
  fit.feature_laplacian = l_feature;
  return fit;
}

FitResult fit_pca(const DataMatrix& y, Index k) {
  if (y.has_mask()) throw Error(ErrorCode::InvalidArgument, "PCA baseline does not accept masked data");
  const TruncatedSvd svd = truncated_svd(y.values(), k);
  FitResult fit;
  fit.factors = FactorPair(svd.u * svd.s.asDiagonal(), svd.v);
  fit.a = PrecisionGraph::identity(y.rows());
  fit.b = PrecisionGraph::identity(y.cols());
  fit.segment_starts = {0};
  fit.objective_trace = {0.5 * (y.values() - fit.factors.product()).squaredNorm()};
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

}  // namespace lgmd
