#include <cmath>
#include <random>

#include "doctest.h"
#include "lgmd/core.hpp"
#include "test_util.hpp"

using namespace lgmd;

TEST_CASE("DataMatrix validates mask shape and observed finiteness") {
  Matrix v(2, 2);
  v << 1, std::nan(""), 3, 4;
  CHECK_THROWS_AS(DataMatrix{v}, Error);
  Mask m(2, 2);
  m << true, false, true, true;
  DataMatrix d(v, m);
  CHECK(d.observed_count() == 3);
  CHECK(d.filled(0.0)(0, 1) == 0.0);
  CHECK_THROWS_AS(DataMatrix(v, Mask::Constant(3, 2, true)), Error);
}

TEST_CASE("normalize_factor") {
  SUBCASE("already unit spread") {
    Matrix m(2, 2);
    m << 1, -1, 1, -1;
    auto [out, s] = normalize_factor(m);
    CHECK(s == doctest::Approx(1.0));
    CHECK((out - m).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("scale equivariance") {
    const Matrix m0 = testutil::random_matrix(4, 3, 1);
    auto [a, sa] = normalize_factor(m0);
    auto [b, sb] = normalize_factor(7.5 * m0);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(sb == doctest::Approx(7.5 * sa));
  }
  SUBCASE("output has unit standard deviation") {
    auto [out, s] = normalize_factor(testutil::random_matrix(3, 3, 2));
    const double mean = out.mean();
    const double sd = std::sqrt((out.array() - mean).square().mean());
    CHECK(std::abs(sd - 1.0) < 1e-12);
    CHECK(s > 0.0);
  }
  SUBCASE("zero variance") {
    CHECK_THROWS_AS(normalize_factor(Matrix::Constant(2, 2, 3.0)), Error);
    try {
      normalize_factor(Matrix::Zero(2, 2));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroVariance);
    }
  }
}

TEST_CASE("normalize_precision") {
  CHECK((normalize_precision(PrecisionGraph(2.0 * Matrix::Identity(4, 4))).theta() - Matrix::Identity(4, 4))
            .norm() < 1e-15);
  CHECK((normalize_precision(PrecisionGraph::identity(3)).theta() - Matrix::Identity(3, 3)).norm() == 0.0);
  Matrix t(2, 2);
  t << 1, 0.5, 0.5, 3;
  const PrecisionGraph g = normalize_precision(PrecisionGraph(t));
  CHECK(g.theta()(0, 0) == doctest::Approx(0.5));
  CHECK(g.theta()(1, 1) == doctest::Approx(1.5));
  CHECK(g.theta()(0, 1) == doctest::Approx(0.25));
}

TEST_CASE("precision rescaling preserves support and signs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix theta = testutil::random_sparse_spd(6, 0.4, seed);
    const PrecisionGraph g(theta);
    for (const PrecisionGraph& h : {normalize_precision(g), standardize_precision(g)}) {
      CHECK(h.support() == g.support());
      for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 6; ++j) {
          CHECK((h.theta()(i, j) > 0) == (theta(i, j) > 0));
          CHECK((h.theta()(i, j) < 0) == (theta(i, j) < 0));
        }
      }
    }
    CHECK(standardize_precision(g).theta().diagonal().isOnes(1e-15));
    CHECK(normalize_precision(g).theta().diagonal().mean() == doctest::Approx(1.0));
  }
}

TEST_CASE("PrecisionGraph invariants") {
  Matrix t(2, 2);
  t << 1, 2, 2, 1;
  CHECK_THROWS_AS(PrecisionGraph{t}, Error);
  Matrix asym(2, 2);
  asym << 2, 0.1, 0.2, 2;
  CHECK_THROWS_AS(PrecisionGraph{asym}, Error);
  Matrix ok(3, 3);
  ok << 2, -1, 0, -1, 2, 0, 0, 0, 1;
  const PrecisionGraph g(ok);
  REQUIRE(g.support().size() == 1);
  CHECK(g.support()[0] == Edge{0, 1});
  CHECK(g.log_det() == doctest::Approx(std::log(3.0)));
  CHECK(g.off_diagonal_l1() == doctest::Approx(2.0));
}

namespace {

void check_laplacian(const LaplacianGraph& g) {
  const Matrix& l = g.lap();
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
  for (Index i = 0; i < l.rows(); ++i) {
    CHECK(l(i, i) >= 0.0);
    for (Index j = 0; j < l.cols(); ++j) {
      if (i != j) CHECK(l(i, j) <= 0.0);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(l);
  CHECK(eig.eigenvalues().minCoeff() > -1e-9);
}

}  // namespace

TEST_CASE("knn_graph") {
  SUBCASE("identical rows give a complete graph") {
    DataMatrix y(Matrix::Ones(3, 4));
    const LaplacianGraph g = knn_graph(y, 1, Axis::Rows);
    CHECK(g.lap().diagonal().isApprox(Vector::Constant(3, 2.0)));
    check_laplacian(g);
  }
  SUBCASE("points on a line") {
    Matrix v(3, 1);
    v << 0, 1, 10;
    const LaplacianGraph g = knn_graph(DataMatrix(v), 1, Axis::Rows);
    const auto support = g.support();
    REQUIRE(support.size() == 2);
    CHECK(support[0] == Edge{0, 1});
    CHECK(support[1] == Edge{1, 2});
  }
  SUBCASE("columns axis matches rows of the transpose") {
    const Matrix v = testutil::random_matrix(6, 9, 3);
    const LaplacianGraph a = knn_graph(DataMatrix(v), 3, Axis::Columns);
    const LaplacianGraph b = knn_graph(DataMatrix(Matrix(v.transpose())), 3, Axis::Rows);
    CHECK(a.lap() == b.lap());
  }
  SUBCASE("random inputs satisfy Laplacian invariants") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix v = testutil::random_matrix(12, 5, seed);
      check_laplacian(knn_graph(DataMatrix(v), 1 + seed % 4, Axis::Rows));
      check_laplacian(knn_graph(DataMatrix(v), 1 + seed % 4, Axis::Columns));
    }
  }
  SUBCASE("masked distances use shared coordinates only") {
    Matrix v(3, 3);
    v << 0, 100, 0, 0, -5, 0, 9, 9, 9;
    Mask m = Mask::Constant(3, 3, true);
    m(0, 1) = false;  // hides the 100, so row 0 equals row 1 on shared coordinates
    v(0, 1) = std::nan("");
    const LaplacianGraph g = knn_graph(DataMatrix(v, m), 1, Axis::Rows);
    CHECK(g.weights().count(Edge{0, 1}) == 1);
    check_laplacian(g);
  }
  SUBCASE("row with no observations") {
    Matrix v = Matrix::Ones(3, 2);
    Mask m = Mask::Constant(3, 2, true);
    m.row(2).setConstant(false);
    try {
      knn_graph(DataMatrix(v, m), 1, Axis::Rows);
      FAIL("expected DegenerateInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateInput);
    }
  }
  CHECK_THROWS_AS(knn_graph(DataMatrix(Matrix::Ones(3, 2)), 3, Axis::Rows), Error);
}

TEST_CASE("empirical_covariance") {
  CHECK(empirical_covariance(Matrix::Identity(2, 2), 0.0).isApprox(0.5 * Matrix::Identity(2, 2)));
  CHECK(empirical_covariance(Matrix::Zero(3, 2), 0.1).isApprox(0.1 * Matrix::Identity(3, 3)));

  const Matrix m = testutil::random_matrix(4, 3, 4);
  Matrix oracle = Matrix::Zero(4, 4);
  for (Index c = 0; c < 3; ++c) oracle += m.col(c) * m.col(c).transpose();
  oracle /= 3.0;
  CHECK((empirical_covariance(m, 0.0) - oracle).cwiseAbs().maxCoeff() < 1e-14);

  const Matrix wide = testutil::random_matrix(6, 2, 5);
  Eigen::FullPivLU<Matrix> lu(empirical_covariance(wide, 0.0));
  CHECK(lu.rank() <= 2);
  CHECK(is_positive_definite(empirical_covariance(wide, 1e-6)));
}

TEST_CASE("Hyperparams validation") {
  Hyperparams h;
  h.k = 5;
  CHECK_NOTHROW(h.validate(10, 10));
  CHECK_THROWS_AS(h.validate(4, 10), Error);
  h.tol_inner = 0.0;
  CHECK_THROWS_AS(h.validate(), Error);
}
