#include <limits>
#include <random>

#include "lgmd/metrics.hpp"
#include "lgmd/synth.hpp"

namespace lgmd {

namespace {

Matrix plus_plus_seeds(const Matrix& points, int clusters, std::mt19937_64& rng) {
  const Index n = points.rows();
  Matrix centers(clusters, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::uniform_int_distribution<Index> first(0, n - 1);
  Index pick = first(rng);
  centers.row(0) = points.row(pick);
  chosen[pick] = true;
  Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < clusters; ++c) {
    for (Index i = 0; i < n; ++i) {
      if (chosen[i]) d2(i) = 0.0;
    }
    const double total = d2.sum();
    if (total > 0.0) {
      std::discrete_distribution<Index> draw(d2.data(), d2.data() + n);
      pick = draw(rng);
    } else {
      // Every remaining point coincides with a center; take an unused one.
      std::vector<Index> free;
      for (Index i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> any(0, free.size() - 1);
      pick = free[any(rng)];
    }
    centers.row(c) = points.row(pick);
    chosen[pick] = true;
    d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iter) {
  const Index n = points.rows();
  const Index k = centers.rows();
  KMeansResult out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  Vector dist(n);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      const double d = (centers.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      dist(i) = d;
      if (out.labels[i] != static_cast<int>(best)) {
        out.labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(out.labels[i]) += points.row(i);
      ++counts[out.labels[i]];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Empty cluster: move it to the point farthest from its center.
        Index far = 0;
        dist.maxCoeff(&far);
        centers.row(c) = points.row(far);
        dist(far) = 0.0;
      }
    }
  }
  out.inertia = 0.0;
  for (Index i = 0; i < n; ++i) out.inertia += (points.row(i) - centers.row(out.labels[i])).squaredNorm();
  out.centers = std::move(centers);
  return out;
}

}  // namespace

KMeansResult kmeans_fit(const Matrix& points, int clusters, std::uint64_t seed, int restarts) {
  if (clusters < 1 || clusters > points.rows()) {
    throw Error(ErrorCode::InvalidArgument, "cluster count must lie in [1, n]");
  }
  auto rng = make_rng(seed, 8);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KMeansResult run = lloyd(points, plus_plus_seeds(points, clusters, rng), 300);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<int> kmeans(const Matrix& points, int clusters, std::uint64_t seed) {
  return kmeans_fit(points, clusters, seed).labels;
}

}  // namespace lgmd
