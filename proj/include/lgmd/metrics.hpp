#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lgmd/core.hpp"

namespace lgmd {

/// Evaluation record for one fitted model (E1..E8 plus clustering accuracy).
struct MetricReport {
  std::optional<double> e1;  // held-out RMSE
  std::optional<double> e2;  // RMSE against the noiseless ground truth
  std::vector<double> e3;    // pairwise column correlations of X
  std::vector<double> e4;    // pairwise column correlations of W
  std::optional<double> e5;  // largest principal angle to X_gt
  std::optional<double> e6;  // largest principal angle to W_gt
  std::optional<double> e7;  // recovered sample-graph edges
  std::optional<double> e8;  // recovered feature-graph edges
  std::optional<double> clustering_accuracy;
  double context = 0.0;      // noise ratio or keep fraction
};

/// sqrt(mean of squared differences over entries selected by o).
double masked_rmse(const Matrix& y, const Matrix& recon, const Mask& o);
double masked_rmse(const DataMatrix& y, const Matrix& recon, const Mask& o);

struct PrincipalAngles {
  double largest = 0.0;
  double smallest = 0.0;
  double mean = 0.0;
};

/// Largest principal angle between the column spaces of m1 and m2.
double subspace_angle(const Matrix& m1, const Matrix& m2);
PrincipalAngles principal_angles(const Matrix& m1, const Matrix& m2);

/// Pearson correlation for every column pair (i < j) in lexicographic order.
std::vector<double> column_correlations(const Matrix& m);

/// Ranks the true edges by |theta_ij|, keeps the top ceil(top_fraction * count)
/// and counts how many of them are in `estimated`.
Index edge_recovery(const PrecisionGraph& g_true, const std::vector<Edge>& estimated, double top_fraction);
Index edge_recovery(const PrecisionGraph& g_true, const PrecisionGraph& g_est, double top_fraction);

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by inertia.
KMeansResult kmeans_fit(const Matrix& points, int clusters, std::uint64_t seed, int restarts = 10);
std::vector<int> kmeans(const Matrix& points, int clusters, std::uint64_t seed);

/// Minimum-cost perfect assignment for a square cost matrix: result[row] = column.
std::vector<Index> hungarian(const Matrix& cost);

/// Best agreement fraction over all relabelings of pred.
double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

}  // namespace lgmd
