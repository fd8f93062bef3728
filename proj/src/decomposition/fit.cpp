#include <chrono>
#include <cmath>

#include "als_engine.hpp"
#include "fit_common.hpp"
#include "lgmd/precision.hpp"

namespace lgmd {

namespace detail {

FactorPair svd_initialization(const DataMatrix& y, Index k) {
  Matrix dense;
  if (y.has_mask()) {
    const double frac = static_cast<double>(y.observed_count()) / static_cast<double>(y.values().size());
    if (frac <= 0.0) throw Error(ErrorCode::DegenerateInput, "no observed entries");
    dense = y.filled(0.0) / frac;
  } else {
    dense = y.values();
  }
  const TruncatedSvd svd = truncated_svd(dense, k);
  return FactorPair(svd.u, svd.v * svd.s.asDiagonal());
}

void append_segment(FitResult& fit, const InnerAlsResult& inner, double offset) {
  fit.segment_starts.push_back(fit.objective_trace.size());
  for (double v : inner.trace) fit.objective_trace.push_back(v + offset);
}

}  // namespace detail

namespace {

PrecisionGraph estimate_precision(const Matrix& normalized, double eta_prime, const Hyperparams& h, Variant variant,
                                  double* shift_total) {
  const double k = static_cast<double>(normalized.cols());
  Matrix s = empirical_covariance(normalized, 0.0);
  s.diagonal().array() += relative_jitter(s, h.jitter);
  const double eta = eta_prime / k;
  if (variant == Variant::Plain) {
    ThresholdResult res = threshold_glasso(s, eta);
    *shift_total += res.diagonal_shift;
    return rescale_precision(res.graph, h.scaling);
  }
  LaplacianGlassoOptions opts;
  opts.sigma2 = h.plus_sigma2;
  const LaplacianGlassoResult res = laplacian_constrained_glasso(s, eta, opts);
  return rescale_precision(PrecisionGraph(res.theta()), h.scaling);
}

double precision_penalty(const PrecisionGraph& a, const PrecisionGraph& b, const Hyperparams& h, double k) {
  return 0.5 * h.lambda1 * (-k * a.log_det() + h.eta1 * a.off_diagonal_l1()) +
         0.5 * h.lambda2 * (-k * b.log_det() + h.eta2 * b.off_diagonal_l1());
}

}  // namespace

FitResult fit_lgmd(const DataMatrix& y, const Hyperparams& h, Variant variant) {
  h.validate(y.rows(), y.cols());
  const auto start = std::chrono::steady_clock::now();

  FitResult fit;
  fit.factors = detail::svd_initialization(y, h.k);
  fit.a = PrecisionGraph::identity(y.rows());
  fit.b = PrecisionGraph::identity(y.cols());
  const double k = static_cast<double>(h.k);

  double prev = lgmd_objective(y, fit.factors, fit.a, fit.b, h);
  double shift_total = 0.0;
  int safeguards = 0;
  int outer = 0;
  for (outer = 1; outer <= h.max_outer; ++outer) {
    auto [x_hat, x_scale] = normalize_factor(fit.factors.x);
    auto [w_hat, w_scale] = normalize_factor(fit.factors.w);
    fit.factors.x_scale = x_scale;
    fit.factors.w_scale = w_scale;
    fit.a = estimate_precision(x_hat, h.eta1, h, variant, &shift_total);
    fit.b = estimate_precision(w_hat, h.eta2, h, variant, &shift_total);

    const detail::AlsEngine engine(y, fit.a.theta(), fit.b.theta(), h.lambda1, h.lambda2, h.epsilon, h.update,
                                   h.monotone_safeguard);
    InnerAlsResult inner = engine.run(fit.factors, h.max_inner, h.tol_inner);
    safeguards += inner.safeguard_steps;
    const double offset = precision_penalty(fit.a, fit.b, h, k);
    detail::append_segment(fit, inner, offset);
    fit.factors = std::move(inner.factors);

    const double obj = fit.objective_trace.back();
    if (std::abs(obj - prev) <= h.tol_outer * std::abs(prev)) {
      fit.converged = true;
      break;
    }
    prev = obj;
  }
  fit.iterations = static_cast<int>(fit.objective_trace.size());
  fit.diagnostics["outer_iterations"] = std::min(outer, h.max_outer);
  fit.diagnostics["diagonal_shift_total"] = shift_total;
  fit.diagnostics["safeguard_steps"] = safeguards;
  fit.diagnostics["a_edges"] = static_cast<double>(fit.a.support().size());
  fit.diagnostics["b_edges"] = static_cast<double>(fit.b.support().size());
  fit.diagnostics["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fit;
}

}  // namespace lgmd
