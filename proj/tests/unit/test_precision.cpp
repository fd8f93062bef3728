#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lgmd/precision.hpp"
#include "test_util.hpp"

using namespace lgmd;

TEST_CASE("residual_threshold") {
  Matrix s(2, 2);
  s << 1, 0.5, 0.5, 1;
  const ResidualCovariance r = residual_threshold(s, 0.2);
  CHECK(r.sigma_res(0, 1) == doctest::Approx(0.3));
  CHECK(r.sigma_res(0, 0) == 1.0);
  REQUIRE(r.support.size() == 1);

  CHECK(residual_threshold(s, 0.5).support.empty());
  CHECK(residual_threshold(s, 0.7).sigma_res(0, 1) == 0.0);

  const Matrix big = testutil::random_spd(6, 1);
  const ResidualCovariance zero = residual_threshold(big, 0.0);
  CHECK(zero.sigma_res == big);

  const ResidualCovariance neg = residual_threshold(-s + 3 * Matrix::Identity(2, 2), 0.2);
  CHECK(neg.sigma_res(0, 1) == doctest::Approx(-0.3));
}

TEST_CASE("threshold_glasso closed form") {
  SUBCASE("identity") {
    for (double eta : {0.0, 0.1, 5.0}) {
      CHECK(threshold_glasso(Matrix::Identity(4, 4), eta).graph.theta().isApprox(Matrix::Identity(4, 4)));
    }
  }
  SUBCASE("two variables by hand") {
    Matrix s(2, 2);
    s << 1, 0.5, 0.5, 1;
    const ThresholdResult t = threshold_glasso(s, 0.2);
    CHECK(t.diagonal_shift == 0.0);
    CHECK(t.graph.theta()(0, 1) == doctest::Approx(-0.3 / 0.91).epsilon(1e-12));
    CHECK(t.graph.theta()(0, 0) == doctest::Approx(1.0 + 0.09 / 0.91).epsilon(1e-12));
    CHECK(t.graph.theta()(1, 1) == doctest::Approx(1.0 + 0.09 / 0.91).epsilon(1e-12));

    const GlassoResult o = glasso_oracle(s, 0.2);
    CHECK(std::abs(o.graph.theta()(0, 1) - t.graph.theta()(0, 1)) < 0.05 * std::abs(o.graph.theta()(0, 1)));
    CHECK(std::abs(o.graph.theta()(0, 0) - t.graph.theta()(0, 0)) < 0.05 * o.graph.theta()(0, 0));
  }
  SUBCASE("large eta gives the inverse diagonal exactly") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix s = testutil::random_spd(7, seed);
      const double eta = (s - Matrix(s.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
      const ThresholdResult t = threshold_glasso(s, eta);
      const Matrix expect = s.diagonal().cwiseInverse().asDiagonal();
      CHECK(t.graph.theta() == expect);
      CHECK(t.graph.support().empty());
    }
  }
  SUBCASE("near singular pair") {
    Matrix s(2, 2);
    s << 1, 1, 1, 1;
    try {
      threshold_glasso(s, 0.0);
      FAIL("expected NearSingularPair");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NearSingularPair);
    }
  }
  SUBCASE("indefinite output is shifted and reported") {
    // A dense triangle with strong correlations violates the acyclic regime.
    Matrix s(3, 3);
    s << 1, 0.9, 0.9, 0.9, 1, 0.9, 0.9, 0.9, 1;
    const ThresholdResult t = threshold_glasso(s, 0.0);
    CHECK(is_positive_definite(t.graph.theta()));
    CHECK(t.diagonal_shift >= 0.0);
  }
  SUBCASE("all outputs are positive definite") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const Matrix s = testutil::random_spd(8, seed);
      const double eta = 0.05 * static_cast<double>(seed % 5);
      try {
        CHECK(is_positive_definite(threshold_glasso(s, eta).graph.theta()));
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NearSingularPair);
      }
    }
  }
}

TEST_CASE("glasso_oracle") {
  SUBCASE("unpenalized gives the inverse") {
    const Matrix s = testutil::random_spd(5, 3);
    const GlassoResult o = glasso_oracle(s, 0.0, {1e-12, 50000});
    CHECK((o.graph.theta() - s.inverse()).norm() < 1e-6 * s.inverse().norm());
  }
  SUBCASE("identity") {
    for (double eta : {0.0, 0.3}) {
      CHECK((glasso_oracle(Matrix::Identity(4, 4), eta).graph.theta() - Matrix::Identity(4, 4)).norm() < 1e-9);
    }
  }
  SUBCASE("chain support is recovered") {
    Matrix t = Matrix::Identity(4, 4) * 2.0;
    for (Index i = 0; i + 1 < 4; ++i) t(i, i + 1) = t(i + 1, i) = -0.7;
    const Matrix s = t.inverse();
    const GlassoResult o = glasso_oracle(s, 0.02);
    const std::vector<Edge> expect{{0, 1}, {1, 2}, {2, 3}};
    CHECK(o.graph.support() == expect);
  }
  SUBCASE("objective never decreases and KKT holds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix s = testutil::random_spd(10, seed + 40);
      const GlassoResult o = glasso_oracle(s, 0.1);
      for (std::size_t t = 1; t < o.objective_trace.size(); ++t) {
        CHECK(o.objective_trace[t] >= o.objective_trace[t - 1] - 1e-12 * std::abs(o.objective_trace[t - 1]));
      }
      CHECK(o.kkt_residual < 1e-7);
    }
  }
  SUBCASE("iteration cap") {
    const Matrix s = testutil::random_spd(10, 77);
    CHECK_THROWS_AS(glasso_oracle(s, 0.01, {1e-15, 2}), Error);
  }
}

namespace {

// Union-find acyclicity check on the residual support.
bool acyclic(Index d, const std::vector<Edge>& edges) {
  std::vector<Index> parent(d);
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) {
    const Index a = find(e.i), b = find(e.j);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

}  // namespace

TEST_CASE("threshold and oracle agree on sparse acyclic instances") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Index d = 5 + static_cast<Index>(seed % 8);
    Matrix t = Matrix::Identity(d, d);
    std::uniform_real_distribution<double> w(0.2, 0.45);
    for (Index i = 1; i < d; ++i) {
      const Index parent = (seed % 2 == 0) ? i - 1 : 0;  // chain or star
      t(i, parent) = t(parent, i) = (rng() % 2 ? 1.0 : -1.0) * w(rng) / (seed % 2 == 0 ? 1.0 : std::sqrt(d));
    }
    for (Index i = 0; i < d; ++i) t(i, i) = t.row(i).cwiseAbs().sum();  // off-diagonal mass + 1
    const Matrix s = t.inverse();
    const Matrix off = s - Matrix(s.diagonal().asDiagonal());
    const double eta = 0.7 * off.cwiseAbs().maxCoeff();
    const ResidualCovariance r = residual_threshold(s, eta);
    if (r.support.empty() || !acyclic(d, r.support)) continue;
    ++checked;
    const ThresholdResult a = threshold_glasso(s, eta);
    const GlassoResult b = glasso_oracle(s, eta);
    CHECK(a.graph.support() == b.graph.support());
  }
  CHECK(checked >= 10);
}

TEST_CASE("laplacian_constrained_glasso") {
  SUBCASE("uncorrelated data with a large penalty gives no edges") {
    const LaplacianGlassoResult r = laplacian_constrained_glasso(2.0 * Matrix::Identity(4, 4), 5.0);
    CHECK(r.laplacian.lap().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single edge weight recovered") {
    Matrix l = Matrix::Zero(3, 3);
    const double w_true = 0.8;
    l(0, 0) = l(1, 1) = w_true;
    l(0, 1) = l(1, 0) = -w_true;
    const Matrix s = (l + Matrix::Identity(3, 3)).inverse();
    const LaplacianGlassoResult r = laplacian_constrained_glasso(s, 0.0);
    const auto& wts = r.laplacian.weights();
    const double got = wts.count(Edge{0, 1}) ? wts.at(Edge{0, 1}) : 0.0;

    // Exhaustive 1-D search over the single weight, other weights held at zero.
    double best = 0.0, best_val = -std::numeric_limits<double>::infinity();
    const std::vector<Edge> edges = edge_list(3);
    for (int step = 0; step <= 40000; ++step) {
      Vector w = Vector::Zero(static_cast<Index>(edges.size()));
      w(0) = 2.0 * step / 40000.0;
      const double v = laplacian_glasso_objective(s, 0.0, w, 1.0);
      if (v > best_val) {
        best_val = v;
        best = w(0);
      }
    }
    CHECK(std::abs(got - best) < 1e-3);
    CHECK(std::abs(got - w_true) < 1e-3);
  }
  SUBCASE("objective ascends and theta is PD") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const Matrix s = testutil::random_spd(6, seed + 100);
      LaplacianGlassoOptions opts;
      if (seed % 2) opts.sigma2 = std::nullopt;
      const LaplacianGlassoResult r = laplacian_constrained_glasso(s, 0.05, opts);
      for (std::size_t t = 1; t < r.objective_trace.size(); ++t) {
        CHECK(r.objective_trace[t] >= r.objective_trace[t - 1] - 1e-12 * std::abs(r.objective_trace[t - 1]));
      }
      CHECK(is_positive_definite(r.theta()));
      CHECK(r.projected_gradient_norm < 1e-6 * 6);
      const Matrix& lap = r.laplacian.lap();
      CHECK(lap.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}
