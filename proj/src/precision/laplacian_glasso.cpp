#include <algorithm>
#include <cmath>
#include <limits>

#include "lgmd/precision.hpp"

namespace lgmd {

namespace {

Matrix laplacian_from_weights(Index d, const std::vector<Edge>& edges, const Vector& w) {
  Matrix lap = Matrix::Zero(d, d);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    lap(i, j) -= w(e);
    lap(j, i) -= w(e);
    lap(i, i) += w(e);
    lap(j, j) += w(e);
  }
  return lap;
}

// b_e^T M b_e for every edge.
Vector incidence_quadratic(const Matrix& m, const std::vector<Edge>& edges) {
  Vector out(static_cast<Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    out(e) = m(i, i) + m(j, j) - 2.0 * m(i, j);
  }
  return out;
}

struct Evaluation {
  double value = -std::numeric_limits<double>::infinity();
  Matrix inverse;
};

Evaluation evaluate(const Matrix& s, double rho, const Matrix& lap, double tau, double weight_sum) {
  const Index d = s.rows();
  Matrix theta = lap;
  theta.diagonal().array() += tau;
  Eigen::LLT<Matrix> llt(theta);
  Evaluation ev;
  if (llt.info() != Eigen::Success) return ev;
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  ev.value = log_det - s.cwiseProduct(theta).sum() - rho * (4.0 * weight_sum + static_cast<double>(d) * tau);
  ev.inverse = llt.solve(Matrix::Identity(d, d));
  return ev;
}

// Maximizes ln|L + tau I| - tau (tr S + rho d) over tau > 0.
double optimal_tau(const Matrix& lap, double c) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lap, Eigen::EigenvaluesOnly);
  const Vector mu = eig.eigenvalues().cwiseMax(0.0);
  const double d = static_cast<double>(lap.rows());
  auto h = [&](double tau) { return (mu.array() + tau).inverse().sum() - c; };
  double lo = 1.0 / c;
  double hi = d / c;
  if (h(hi) >= 0.0) return hi;
  if (h(lo) <= 0.0) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<Edge> edge_list(Index d) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(d * (d - 1) / 2));
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) edges.push_back({i, j});
  }
  return edges;
}

Matrix LaplacianGlassoResult::theta() const {
  Matrix t = laplacian.lap();
  t.diagonal().array() += 1.0 / sigma2;
  return t;
}

double laplacian_glasso_objective(const Matrix& s, double rho, const Vector& weights, double sigma2) {
  const auto edges = edge_list(s.rows());
  return evaluate(s, rho, laplacian_from_weights(s.rows(), edges, weights), 1.0 / sigma2, weights.sum()).value;
}

LaplacianGlassoResult laplacian_constrained_glasso(const Matrix& s, double rho, const LaplacianGlassoOptions& opts) {
  const Index d = s.rows();
  if (s.cols() != d) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  if (!(rho >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be non-negative");
  if (!is_positive_definite(s)) throw Error(ErrorCode::NotPositiveDefinite, "covariance must be PD");
  if (opts.sigma2 && !(*opts.sigma2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma2 must be positive");

  const auto edges = edge_list(d);
  const Index m = static_cast<Index>(edges.size());
  const Vector s_quad = incidence_quadratic(s, edges);
  const double c = s.trace() + rho * static_cast<double>(d);

  Vector w = Vector::Zero(m);
  if (opts.initial_weights) {
    if (opts.initial_weights->size() != m) throw Error(ErrorCode::DimensionMismatch, "initial weights size");
    w = opts.initial_weights->cwiseMax(0.0);
  }
  const bool optimize_sigma = !opts.sigma2.has_value();
  double tau;
  if (!optimize_sigma) {
    tau = 1.0 / *opts.sigma2;
  } else if (opts.initial_sigma2) {
    tau = 1.0 / *opts.initial_sigma2;
  } else {
    tau = static_cast<double>(d) / c;
  }

  Matrix lap = laplacian_from_weights(d, edges, w);
  if (optimize_sigma) tau = optimal_tau(lap, c);
  Evaluation cur = evaluate(s, rho, lap, tau, w.sum());
  if (!std::isfinite(cur.value)) throw Error(ErrorCode::NotPositiveDefinite, "starting point is not PD");

  LaplacianGlassoResult out;
  out.objective_trace.push_back(cur.value);

  auto gradient = [&](const Matrix& inverse) {
    return Vector(incidence_quadratic(inverse, edges) - s_quad - Vector::Constant(m, 4.0 * rho));
  };
  auto projected_norm = [&](const Vector& wv, const Vector& g) {
    double sq = 0.0;
    for (Index e = 0; e < m; ++e) {
      const double v = wv(e) > 0.0 ? g(e) : std::max(g(e), 0.0);
      sq += v * v;
    }
    return std::sqrt(sq);
  };

  Vector g = gradient(cur.inverse);
  Vector prev_w, prev_g;
  double step = 1.0 / std::max(1.0, cur.inverse.diagonal().maxCoeff() * cur.inverse.diagonal().maxCoeff() * 4.0);

  for (int it = 1; it <= opts.max_iter; ++it) {
    out.projected_gradient_norm = projected_norm(w, g);
    if (out.projected_gradient_norm < opts.grad_tol * static_cast<double>(d)) {
      out.iterations = it - 1;
      std::map<Edge, double> weights;
      for (Index e = 0; e < m; ++e) {
        if (w(e) > 0.0) weights[edges[e]] = w(e);
      }
      out.laplacian = LaplacianGraph(d, std::move(weights));
      out.sigma2 = 1.0 / tau;
      return out;
    }

    if (prev_w.size() == m) {
      const Vector dw = w - prev_w;
      const Vector dg = g - prev_g;
      const double den = -dw.dot(dg);  // ascent: curvature is -dw.dg
      if (den > 0.0) step = dw.squaredNorm() / den;
    }

    Vector next_w;
    Matrix next_lap;
    Evaluation next;
    bool accepted = false;
    for (int bt = 0; bt < 100; ++bt) {
      next_w = (w + step * g).cwiseMax(0.0);
      next_lap = laplacian_from_weights(d, edges, next_w);
      next = evaluate(s, rho, next_lap, tau, next_w.sum());
      const Vector delta = next_w - w;
      if (std::isfinite(next.value) &&
          next.value >= cur.value + g.dot(delta) - delta.squaredNorm() / (2.0 * step) - 1e-14 * std::abs(cur.value)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    prev_w = w;
    prev_g = g;
    w = std::move(next_w);
    lap = std::move(next_lap);
    cur = std::move(next);
    if (optimize_sigma) {
      const double new_tau = optimal_tau(lap, c);
      Evaluation at_tau = evaluate(s, rho, lap, new_tau, w.sum());
      if (at_tau.value >= cur.value) {
        tau = new_tau;
        cur = std::move(at_tau);
      }
    }
    g = gradient(cur.inverse);
    out.objective_trace.push_back(cur.value);
  }
  throw Error(ErrorCode::NotConverged, "laplacian-constrained estimator hit its iteration cap");
}

}  // namespace lgmd
